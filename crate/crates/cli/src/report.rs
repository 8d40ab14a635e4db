use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{CliError, RunConfig};

/// Everything a command emits, buffered until the run has succeeded so a
/// failed run leaves no partial artifacts behind.
#[derive(Debug, Clone)]
pub struct Report {
    text: String,
    records: Vec<String>,
    files: Vec<(String, Vec<u8>)>,
}

impl Report {
    /// Start a report whose header carries the effective configuration and
    /// the corpus hash.
    pub fn new(command: &str, cfg: &RunConfig, corpus_sha256: &str) -> Self {
        let mut text = format!("# pico {command}\n# corpus_sha256 = {corpus_sha256}\n");
        let toml = toml::to_string(cfg).expect("run config serializes");
        for line in toml.lines() {
            let _ = writeln!(text, "{}", format!("# {line}").trim_end());
        }
        text.push('\n');
        let header = json!({
            "record": "header",
            "command": command,
            "corpus_sha256": corpus_sha256,
            "config": cfg,
        });
        Report {
            text,
            records: vec![header.to_string()],
            files: Vec::new(),
        }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    /// Append one machine-readable row tagged with `kind`.
    pub fn record<T: Serialize>(&mut self, kind: &str, row: &T) {
        let mut map = match serde_json::to_value(row).expect("rows serialize") {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        map.insert("record".into(), Value::String(kind.into()));
        self.records.push(Value::Object(map).to_string());
    }

    pub fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn records(&self) -> &[String] {
        &self.records
    }

    /// Write `report.txt`, `metrics.jsonl` and the extra files into `dir`.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let fail = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Output { path, source }
        };
        std::fs::create_dir_all(dir).map_err(fail(dir))?;
        let mut jsonl = self.records.join("\n");
        jsonl.push('\n');
        let mut written = Vec::new();
        let all = [
            ("report.txt", self.text.as_bytes()),
            ("metrics.jsonl", jsonl.as_bytes()),
        ];
        for (name, bytes) in all
            .into_iter()
            .chain(self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice())))
        {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(fail(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}
