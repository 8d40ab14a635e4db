//! Sentence-level PICO classification for RCT abstracts.
//!
//! The pipeline reads labeled abstract sentences, turns each sentence into a
//! stop-word-filtered n-gram TF-IDF vector and trains one soft-margin linear
//! SVM per element (participants, intervention, outcome). The [`eval`] module
//! provides the metrics, ROC analysis and stratified cross-validation used to
//! compare configurations.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod svm;
pub mod textproc;
pub mod vectorizer;

pub use corpus::{Corpus, DataSplit, Label, LabeledSentence, Task, TaskInstance};
pub use error::{Error, Result};
pub use svm::{LinearModel, TaskModel, TrainingConfig};
pub use textproc::{NGramBag, NGramRange, StopList, TokenSequence};
pub use vectorizer::{SparseVector, Vectorizer, VectorizerConfig, Vocabulary};
