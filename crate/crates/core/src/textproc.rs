//! Tokenization, stop-word filtering and n-gram extraction.
//!
//! Text is lowercased and split on every run of characters that are neither
//! letters nor digits, so hyphenated words break apart while dosages such as
//! `50` and `mg` survive as separate tokens. Stop words are removed *before*
//! n-grams are formed, which lets a bigram bridge a dropped preposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Ordered lowercase tokens of one sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && !t.chars().any(char::is_whitespace)));
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence::new(iter.into_iter().map(Into::into).collect())
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .collect(),
    )
}

/// A fixed stop-word list together with a content hash identifying it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopList {
    words: BTreeSet<String>,
    id: String,
}

impl StopList {
    /// The bundled English list (153 words).
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::from_words(std::iter::empty::<String>())
    }

    /// One word per line; blank lines are ignored and entries are lowercased.
    pub fn parse(text: &str) -> Self {
        Self::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        let mut hasher = Sha256::new();
        for w in &words {
            hasher.update(w.as_bytes());
            hasher.update(b"\n");
        }
        let id = hex::encode(hasher.finalize());
        StopList { words, id }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// SHA-256 over the sorted, newline-terminated entries.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub fn remove_stopwords(tokens: &TokenSequence, stoplist: &StopList) -> TokenSequence {
    TokenSequence(
        tokens
            .0
            .iter()
            .filter(|t| !stoplist.contains(t))
            .cloned()
            .collect(),
    )
}

/// Inclusive range of n-gram orders, bounded to `1..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NGramRange {
    min: usize,
    max: usize,
}

impl NGramRange {
    pub const MAX_ORDER: usize = 3;

    pub const UNIGRAM: NGramRange = NGramRange { min: 1, max: 1 };
    pub const UNI_BI: NGramRange = NGramRange { min: 1, max: 2 };

    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min < 1 || max < min || max > Self::MAX_ORDER {
            return Err(Error::validation(format!(
                "invalid n-gram range {min}-{max}: need 1 <= min <= max <= {}",
                Self::MAX_ORDER
            )));
        }
        Ok(NGramRange { min, max })
    }

    pub fn min(&self) -> usize {
        self.min
    }

    pub fn max(&self) -> usize {
        self.max
    }

    /// The six ranges of the n-gram control experiment.
    pub fn control_set() -> [NGramRange; 6] {
        [(1, 1), (2, 2), (3, 3), (1, 2), (1, 3), (2, 3)].map(|(a, b)| NGramRange { min: a, max: b })
    }
}

impl Default for NGramRange {
    fn default() -> Self {
        Self::UNI_BI
    }
}

impl fmt::Display for NGramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min == self.max {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{}-{}", self.min, self.max)
        }
    }
}

impl FromStr for NGramRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("cannot parse n-gram range {s:?}"));
        let s = s.trim();
        let (lo, hi) = match s.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, s),
        };
        let lo = lo.parse().map_err(|_| bad())?;
        let hi = hi.parse().map_err(|_| bad())?;
        NGramRange::new(lo, hi)
    }
}

impl TryFrom<String> for NGramRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NGramRange> for String {
    fn from(r: NGramRange) -> String {
        r.to_string()
    }
}

/// Multiset of n-grams; keys are the window tokens joined by one space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramBag {
    counts: BTreeMap<String, usize>,
    range: NGramRange,
}

impl NGramBag {
    pub fn counts(&self) -> &BTreeMap<String, usize> {
        &self.counts
    }

    pub fn range(&self) -> NGramRange {
        self.range
    }

    pub fn get(&self, ngram: &str) -> usize {
        self.counts.get(ngram).copied().unwrap_or(0)
    }

    /// Number of n-gram occurrences, i.e. the sum of all counts.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn ngrams(tokens: &TokenSequence, range: NGramRange) -> NGramBag {
    let mut counts = BTreeMap::new();
    for n in range.min..=range.max {
        for window in tokens.0.windows(n) {
            *counts.entry(window.join(" ")).or_insert(0) += 1;
        }
    }
    NGramBag { counts, range }
}

/// Tokenize, drop stop words and count n-grams in one step.
pub fn analyze(text: &str, stoplist: &StopList, range: NGramRange) -> NGramBag {
    ngrams(&remove_stopwords(&tokenize(text), stoplist), range)
}
