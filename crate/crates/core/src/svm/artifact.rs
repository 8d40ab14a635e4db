//! Versioned text format for a trained task model.
//!
//! ```text
//! pico-svm-model
//! format_version<TAB>1
//! task<TAB>P
//! ...header keys...
//! [stopwords]<TAB>count        one word per line
//! [vocabulary]<TAB>count       ngram<TAB>index<TAB>df<TAB>idf
//! [weights]<TAB>count          index<TAB>value, zero weights omitted
//! [bias]                       value
//! [objective_at_convergence]   value
//! [end]
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a reloaded
//! model reproduces every decision value bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{decision, label_of, LinearModel, TrainingConfig};
use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::textproc::StopList;
use crate::vectorizer::{IdfMode, SparseVector, Vectorizer, VectorizerConfig, VocabEntry, Vocabulary};

pub const FORMAT_VERSION: &str = "1";
const MAGIC: &str = "pico-svm-model";

/// A trained classifier for one task together with its feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    pub task: Task,
    pub vectorizer: Vectorizer,
    pub model: LinearModel,
}

impl TaskModel {
    pub fn vectorize(&self, text: &str) -> SparseVector {
        self.vectorizer.vectorize(text)
    }

    pub fn score(&self, text: &str) -> f64 {
        self.score_vector(&self.vectorize(text))
    }

    pub fn score_vector(&self, x: &SparseVector) -> f64 {
        decision(&self.model, x).expect("vectorizer and model share a dimension")
    }

    pub fn predict(&self, text: &str) -> u8 {
        label_of(self.score(text))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let vz = &self.vectorizer;
        let vc = vz.config();
        let vocab = vz.vocabulary();
        let tc = &self.model.config;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "format_version\t{FORMAT_VERSION}")?;
        writeln!(w, "task\t{}", self.task)?;
        writeln!(w, "ngram_range\t{}", vc.range)?;
        writeln!(w, "c\t{:?}", tc.c)?;
        writeln!(w, "tol\t{:?}", tc.tol)?;
        writeln!(w, "max_epochs\t{}", tc.max_epochs)?;
        writeln!(w, "seed\t{}", tc.seed)?;
        writeln!(w, "normalize\t{}", vc.normalize)?;
        writeln!(w, "idf\t{}", vc.idf)?;
        writeln!(w, "min_df\t{}", vc.min_df)?;
        writeln!(w, "stopwords_hash\t{}", vz.stoplist().id())?;
        writeln!(w, "d_total\t{}", vocab.d_total())?;
        writeln!(w, "epochs\t{}", self.model.epochs)?;
        writeln!(w, "converged\t{}", self.model.converged)?;

        writeln!(w, "[stopwords]\t{}", vz.stoplist().len())?;
        for word in vz.stoplist().words() {
            writeln!(w, "{word}")?;
        }
        writeln!(w, "[vocabulary]\t{}", vocab.len())?;
        for (i, e) in vocab.entries().iter().enumerate() {
            writeln!(w, "{}\t{i}\t{}\t{:?}", e.ngram, e.df, e.idf)?;
        }
        let nonzero: Vec<(usize, f64)> = self
            .model
            .weights
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        writeln!(w, "[weights]\t{}", nonzero.len())?;
        for (i, v) in nonzero {
            writeln!(w, "{i}\t{v:?}")?;
        }
        writeln!(w, "[bias]")?;
        writeln!(w, "{:?}", self.model.bias)?;
        writeln!(w, "[objective_at_convergence]")?;
        writeln!(w, "{:?}", self.model.objective)?;
        writeln!(w, "[end]")?;
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: reader.lines(),
            lineno: 0,
            source,
        };
        let magic = lines.next_line()?;
        if magic != MAGIC {
            return Err(lines.error(format!("not a model artifact (first line {magic:?})")));
        }

        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let stop_count = loop {
            let line = lines.next_line()?;
            if let Some(count) = line.strip_prefix("[stopwords]\t") {
                break lines.parse::<usize>(count, "stop-word count")?;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| lines.error(format!("expected key<TAB>value, found {line:?}")))?;
            if k == "format_version" && v != FORMAT_VERSION {
                return Err(Error::VersionMismatch {
                    found: v.to_string(),
                    expected: FORMAT_VERSION.to_string(),
                });
            }
            header.insert(k.to_string(), v.to_string());
        };
        let field = |key: &str| {
            header.get(key).map(String::as_str).ok_or_else(|| Error::Parse {
                source_name: source.to_string(),
                line: 0,
                message: format!("header is missing {key:?}"),
            })
        };
        if !header.contains_key("format_version") {
            return Err(lines.error("header is missing \"format_version\"".into()));
        }
        let task: Task = field("task")?.parse()?;
        let range = field("ngram_range")?.parse()?;
        let idf: IdfMode = field("idf")?.parse()?;
        let stoplist_hash = field("stopwords_hash")?.to_string();
        let vconfig = VectorizerConfig {
            range,
            min_df: lines.parse(field("min_df")?, "min_df")?,
            normalize: lines.parse(field("normalize")?, "normalize")?,
            idf,
        };
        let tconfig = TrainingConfig {
            c: lines.parse(field("c")?, "c")?,
            tol: lines.parse(field("tol")?, "tol")?,
            max_epochs: lines.parse(field("max_epochs")?, "max_epochs")?,
            seed: lines.parse(field("seed")?, "seed")?,
        };
        let d_total: usize = lines.parse(field("d_total")?, "d_total")?;
        let epochs: usize = lines.parse(field("epochs")?, "epochs")?;
        let converged: bool = lines.parse(field("converged")?, "converged")?;

        let mut words = Vec::with_capacity(stop_count);
        for _ in 0..stop_count {
            words.push(lines.next_line()?);
        }
        let stoplist = StopList::from_words(words);
        if stoplist.id() != stoplist_hash {
            return Err(lines.error("stop-word list does not match its recorded hash".into()));
        }

        let vocab_count = lines.section("[vocabulary]")?;
        let mut entries = Vec::with_capacity(vocab_count);
        for i in 0..vocab_count {
            let line = lines.next_line()?;
            let cols: Vec<&str> = line.split('\t').collect();
            let [ngram, index, df, idf] = cols[..] else {
                return Err(lines.error(format!("expected 4 vocabulary columns, found {}", cols.len())));
            };
            if lines.parse::<usize>(index, "index")? != i {
                return Err(lines.error(format!("vocabulary index {index} out of sequence")));
            }
            entries.push(VocabEntry {
                ngram: ngram.to_string(),
                df: lines.parse(df, "df")?,
                idf: lines.parse(idf, "idf")?,
            });
        }
        let vocab = Vocabulary::from_entries(entries, d_total, range, idf, stoplist.id())?;

        let weight_count = lines.section("[weights]")?;
        let mut weights = vec![0.0; vocab.len()];
        for _ in 0..weight_count {
            let line = lines.next_line()?;
            let (i, v) = line
                .split_once('\t')
                .ok_or_else(|| lines.error(format!("expected index<TAB>weight, found {line:?}")))?;
            let i: usize = lines.parse(i, "weight index")?;
            if i >= weights.len() {
                return Err(lines.error(format!("weight index {i} exceeds vocabulary size")));
            }
            weights[i] = lines.parse(v, "weight")?;
        }
        lines.expect("[bias]")?;
        let bias_line = lines.next_line()?;
        let bias: f64 = lines.parse(&bias_line, "bias")?;
        lines.expect("[objective_at_convergence]")?;
        let obj_line = lines.next_line()?;
        let objective: f64 = lines.parse(&obj_line, "objective")?;
        lines.expect("[end]")?;

        Ok(TaskModel {
            task,
            vectorizer: Vectorizer::from_parts(vocab, vconfig, stoplist)?,
            model: LinearModel {
                weights,
                bias,
                config: tconfig,
                objective,
                epochs,
                converged,
            },
        })
    }
}

struct Lines<'s, B> {
    inner: std::io::Lines<B>,
    lineno: usize,
    source: &'s str,
}

impl<B: BufRead> Lines<'_, B> {
    fn error(&self, message: String) -> Error {
        Error::Parse {
            source_name: self.source.to_string(),
            line: self.lineno,
            message,
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.lineno += 1;
        match self.inner.next() {
            Some(Ok(line)) => Ok(line),
            Some(Err(e)) => Err(self.error(e.to_string())),
            None => Err(self.error("unexpected end of file".into())),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.error(format!("cannot parse {what} from {s:?}")))
    }

    fn expect(&mut self, marker: &str) -> Result<()> {
        let line = self.next_line()?;
        if line == marker {
            Ok(())
        } else {
            Err(self.error(format!("expected {marker:?}, found {line:?}")))
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let line = self.next_line()?;
        match line.strip_prefix(name).and_then(|r| r.strip_prefix('\t')) {
            Some(count) => self.parse(count, "section size"),
            None => Err(self.error(format!("expected section {name:?}, found {line:?}"))),
        }
    }
}
