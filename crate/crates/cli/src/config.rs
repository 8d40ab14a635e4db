use std::path::{Path, PathBuf};

use pico_core::eval::PipelineConfig;
use pico_core::svm::PerTaskC;
use pico_core::vectorizer::IdfMode;
use pico_core::{NGramRange, StopList, Task, TrainingConfig, VectorizerConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One layer of settings. The config file and the command-line flags each
/// produce a layer; flags take precedence, unset keys fall through to the
/// defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub corpus: Option<PathBuf>,
    pub tasks: Option<Vec<Task>>,
    pub ngram_range: Option<NGramRange>,
    pub c_p: Option<f64>,
    pub c_i: Option<f64>,
    pub c_o: Option<f64>,
    pub ratios: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub normalize: Option<bool>,
    pub idf: Option<IdfMode>,
    pub min_df: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub k: Option<usize>,
    pub tol: Option<f64>,
    pub max_epochs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {}", path.display(), e.message())))
    }

    /// Keys set in `self` win over `lower`.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            corpus: self.corpus.or(lower.corpus),
            tasks: self.tasks.or(lower.tasks),
            ngram_range: self.ngram_range.or(lower.ngram_range),
            c_p: self.c_p.or(lower.c_p),
            c_i: self.c_i.or(lower.c_i),
            c_o: self.c_o.or(lower.c_o),
            ratios: self.ratios.or(lower.ratios),
            seed: self.seed.or(lower.seed),
            normalize: self.normalize.or(lower.normalize),
            idf: self.idf.or(lower.idf),
            min_df: self.min_df.or(lower.min_df),
            stopwords: self.stopwords.or(lower.stopwords),
            k: self.k.or(lower.k),
            tol: self.tol.or(lower.tol),
            max_epochs: self.max_epochs.or(lower.max_epochs),
            out: self.out.or(lower.out),
        }
    }
}

/// Fully resolved run settings. Serialized into every report header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    pub tasks: Vec<Task>,
    pub ngram_range: NGramRange,
    pub c: PerTaskC,
    pub ratios: [f64; 3],
    pub seed: u64,
    pub normalize: bool,
    pub idf: IdfMode,
    pub min_df: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
    pub k: usize,
    pub tol: f64,
    pub max_epochs: usize,
    /// Where artifacts go. Not part of the reproducibility header.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let training = TrainingConfig::default();
        RunConfig {
            corpus: None,
            tasks: Task::ALL.to_vec(),
            ngram_range: NGramRange::UNI_BI,
            c: PerTaskC::default(),
            ratios: [0.8, 0.1, 0.1],
            seed: 1,
            normalize: true,
            idf: IdfMode::Smoothed,
            min_df: 1,
            stopwords: None,
            k: 10,
            tol: training.tol,
            max_epochs: training.max_epochs,
            out: PathBuf::from("pico-out"),
        }
    }
}

impl RunConfig {
    /// Merge `flags` over the optional config file over the defaults, then
    /// validate.
    pub fn resolve(file: Option<&Path>, flags: ConfigLayer) -> Result<Self, CliError> {
        let layer = match file {
            Some(path) => flags.over(ConfigLayer::from_file(path)?),
            None => flags,
        };
        let d = RunConfig::default();
        let mut tasks = layer.tasks.unwrap_or(d.tasks);
        tasks.sort();
        tasks.dedup();
        let cfg = RunConfig {
            corpus: layer.corpus,
            tasks,
            ngram_range: layer.ngram_range.unwrap_or(d.ngram_range),
            c: PerTaskC {
                p: layer.c_p.unwrap_or(d.c.p),
                i: layer.c_i.unwrap_or(d.c.i),
                o: layer.c_o.unwrap_or(d.c.o),
            },
            ratios: layer.ratios.unwrap_or(d.ratios),
            seed: layer.seed.unwrap_or(d.seed),
            normalize: layer.normalize.unwrap_or(d.normalize),
            idf: layer.idf.unwrap_or(d.idf),
            min_df: layer.min_df.unwrap_or(d.min_df),
            stopwords: layer.stopwords,
            k: layer.k.unwrap_or(d.k),
            tol: layer.tol.unwrap_or(d.tol),
            max_epochs: layer.max_epochs.unwrap_or(d.max_epochs),
            out: layer.out.unwrap_or(d.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.tasks.is_empty() {
            return bad("at least one task is required".into());
        }
        for t in &self.tasks {
            let c = self.c.get(*t);
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("C for task {} must be positive, got {c}", t.as_str()));
            }
        }
        if self.ratios.iter().any(|r| !(*r >= 0.0)) || (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("ratios must be non-negative and sum to 1, got {:?}", self.ratios));
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.min_df == 0 {
            return bad("min_df must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if let Some(p) = &self.stopwords {
            if !p.is_file() {
                return bad(format!("stop-word list {} does not exist", p.display()));
            }
        }
        if let Some(p) = &self.corpus {
            if !p.is_file() {
                return bad(format!("corpus {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::Config("no corpus given (--corpus or `corpus` in the config file)".into()))
    }

    pub fn stoplist(&self) -> Result<StopList, CliError> {
        match &self.stopwords {
            Some(p) => Ok(StopList::from_file(p)?),
            None => Ok(StopList::english()),
        }
    }

    pub fn vectorizer(&self) -> VectorizerConfig {
        VectorizerConfig {
            range: self.ngram_range,
            min_df: self.min_df,
            normalize: self.normalize,
            idf: self.idf,
        }
    }

    /// Training settings with the penalty of `task`.
    pub fn training(&self, task: Task) -> TrainingConfig {
        TrainingConfig {
            c: self.c.get(task),
            tol: self.tol,
            max_epochs: self.max_epochs,
            seed: self.seed,
        }
    }

    pub fn pipeline(&self, task: Task) -> Result<PipelineConfig, CliError> {
        Ok(PipelineConfig {
            vectorizer: self.vectorizer(),
            training: self.training(task),
            stoplist: self.stoplist()?,
        })
    }
}
