//! Labeled-sentence corpus: ingestion, P/I/O filtering, per-task
//! binarization, stratified splitting and descriptive statistics.
//!
//! The on-disk format is a UTF-8 TSV file with the header
//! `pmid<TAB>heading<TAB>label<TAB>text` and one sentence per line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textproc::{remove_stopwords, tokenize, StopList};

pub const TSV_HEADER: &str = "pmid\theading\tlabel\ttext";

/// Structural label of an abstract sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    P,
    I,
    O,
    A,
    M,
    R,
    C,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::P,
        Label::I,
        Label::O,
        Label::A,
        Label::M,
        Label::R,
        Label::C,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::P => "P",
            Label::I => "I",
            Label::O => "O",
            Label::A => "A",
            Label::M => "M",
            Label::R => "R",
            Label::C => "C",
        }
    }

    pub fn task(&self) -> Option<Task> {
        match self {
            Label::P => Some(Task::P),
            Label::I => Some(Task::I),
            Label::O => Some(Task::O),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown label token {s:?}")))
    }
}

/// One of the three binary classification tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    P,
    I,
    O,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::P, Task::I, Task::O];

    pub fn label(&self) -> Label {
        match self {
            Task::P => Label::P,
            Task::I => Label::I,
            Task::O => Label::O,
        }
    }

    pub fn as_str(&self) -> &'static str {
        self.label().as_str()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let label: Label = s.trim().to_ascii_uppercase().parse()?;
        label
            .task()
            .ok_or_else(|| Error::validation(format!("{s:?} is not one of the tasks P, I, O")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledSentence {
    pub pmid: String,
    pub heading: String,
    pub label: Label,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<LabeledSentence>,
    pub source: String,
}

impl Corpus {
    pub fn new(sentences: Vec<LabeledSentence>, source: impl Into<String>) -> Self {
        Corpus {
            sentences,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSentence> {
        self.sentences.iter()
    }

    /// Parse TSV records from `reader`. `source` names the input in errors.
    pub fn from_reader<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source.to_string(),
            line,
            message,
        };
        let mut sentences = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if lineno == 1 {
                if line != TSV_HEADER {
                    return Err(parse_err(
                        lineno,
                        format!("expected header {TSV_HEADER:?}, found {line:?}"),
                    ));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [pmid, heading, label, text] = fields[..] else {
                return Err(parse_err(
                    lineno,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            };
            let label: Label = label.parse().map_err(|_| {
                Error::validation(format!(
                    "{source}:{lineno}: unknown label token {label:?}"
                ))
            })?;
            if text.trim().is_empty() {
                return Err(Error::validation(format!(
                    "{source}:{lineno}: empty sentence text"
                )));
            }
            sentences.push(LabeledSentence {
                pmid: pmid.to_string(),
                heading: heading.to_string(),
                label,
                text: text.to_string(),
            });
        }
        Ok(Corpus::new(sentences, source))
    }

    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TSV_HEADER}")?;
        for s in &self.sentences {
            writeln!(w, "{}\t{}\t{}\t{}", s.pmid, s.heading, s.label, s.text)?;
        }
        Ok(())
    }
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_reader(std::io::BufReader::new(file), &path.display().to_string())
}

/// Keep only P, I and O sentences, in their original order.
pub fn filter_pio(corpus: &Corpus) -> Corpus {
    Corpus::new(
        corpus
            .iter()
            .filter(|s| s.label.task().is_some())
            .cloned()
            .collect(),
        corpus.source.clone(),
    )
}

/// A sentence labeled for one binary task. `id` is the sentence's position
/// in the corpus it was binarized from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskInstance<'a> {
    pub id: usize,
    pub sentence: &'a LabeledSentence,
    pub task: Task,
    pub y: u8,
}

impl TaskInstance<'_> {
    pub fn is_positive(&self) -> bool {
        self.y == 1
    }

    /// SVM-side encoding of the label.
    pub fn sign(&self) -> f64 {
        if self.y == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn binarize(corpus: &Corpus, task: Task) -> Result<Vec<TaskInstance<'_>>> {
    corpus
        .iter()
        .enumerate()
        .map(|(id, s)| {
            if s.label.task().is_none() {
                return Err(Error::contract(format!(
                    "sentence {id} has label {} but binarize expects a P/I/O-filtered corpus",
                    s.label
                )));
            }
            Ok(TaskInstance {
                id,
                sentence: s,
                task,
                y: u8::from(s.label == task.label()),
            })
        })
        .collect()
}

/// Train/test/dev partition of one task's instances.
#[derive(Debug, Clone)]
pub struct DataSplit<'a> {
    pub train: Vec<TaskInstance<'a>>,
    pub test: Vec<TaskInstance<'a>>,
    pub dev: Vec<TaskInstance<'a>>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

impl DataSplit<'_> {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len() + self.dev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Hex digest over the member ids of each part. Two splits with the same
    /// fingerprint hold the same instances in the same parts.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (tag, part) in [(b'T', &self.train), (b'E', &self.test), (b'D', &self.dev)] {
            h.update([tag]);
            for inst in part {
                h.update((inst.id as u64).to_le_bytes());
                h.update([inst.y]);
            }
        }
        hex::encode(&h.finalize()[..8])
    }
}

pub(crate) fn validate_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::validation(format!(
            "split ratios must be non-negative, got {ratios:?}"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "split ratios must sum to 1, got {ratios:?} (sum {sum})"
        )));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` items over `ratios`. Ties on the
/// fractional part go to the earlier part.
pub(crate) fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &part in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[part] += 1;
    }
    counts
}

/// Shuffle each class with a seeded generator and cut it by the ratios.
/// Parts are returned in ascending id order.
pub fn stratified_split<'a>(
    instances: &[TaskInstance<'a>],
    ratios: [f64; 3],
    seed: u64,
) -> Result<DataSplit<'a>> {
    validate_ratios(ratios)?;
    if instances.is_empty() {
        return Err(Error::validation("cannot split an empty instance list"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<TaskInstance<'a>>; 3] = Default::default();
    for class in [1u8, 0u8] {
        let mut members: Vec<TaskInstance<'a>> =
            instances.iter().filter(|i| i.y == class).copied().collect();
        members.shuffle(&mut rng);
        let counts = apportion(members.len(), &ratios);
        let mut rest = members.as_slice();
        for (part, &count) in parts.iter_mut().zip(&counts) {
            let (head, tail) = rest.split_at(count);
            part.extend_from_slice(head);
            rest = tail;
        }
    }
    for part in &mut parts {
        part.sort_by_key(|i| i.id);
    }
    let [train, test, dev] = parts;
    Ok(DataSplit {
        train,
        test,
        dev,
        seed,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LabelStats {
    /// Distinct pmids with at least one sentence of this label.
    pub abstracts: usize,
    pub sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub per_label: BTreeMap<Label, LabelStats>,
    pub total_sentences: usize,
    pub total_abstracts: usize,
}

impl CorpusStats {
    pub fn get(&self, label: Label) -> LabelStats {
        self.per_label.get(&label).copied().unwrap_or_default()
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut pmids: HashMap<Label, BTreeSet<&str>> = HashMap::new();
    let mut per_label: BTreeMap<Label, LabelStats> =
        Label::ALL.iter().map(|&l| (l, LabelStats::default())).collect();
    let mut all_pmids = BTreeSet::new();
    for s in corpus.iter() {
        per_label.get_mut(&s.label).expect("all labels present").sentences += 1;
        pmids.entry(s.label).or_default().insert(&s.pmid);
        all_pmids.insert(s.pmid.as_str());
    }
    for (label, set) in pmids {
        per_label.get_mut(&label).expect("all labels present").abstracts = set.len();
    }
    CorpusStats {
        per_label,
        total_sentences: corpus.len(),
        total_abstracts: all_pmids.len(),
    }
}

/// Most frequent unigrams among sentences of `task`'s label after
/// stop-word removal, ties broken lexicographically.
pub fn top_k_words(
    corpus: &Corpus,
    task: Task,
    k: usize,
    stoplist: &StopList,
) -> Result<Vec<(String, usize)>> {
    if k == 0 {
        return Err(Error::validation("top_k_words needs k >= 1"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in corpus.iter().filter(|s| s.label == task.label()) {
        for tok in remove_stopwords(&tokenize(&s.text), stoplist).into_inner() {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}
