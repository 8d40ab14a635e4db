//! Sentence-level TF-IDF over an n-gram vocabulary.
//!
//! Every sentence is a "document": `tf = count / total n-gram occurrences in
//! the sentence`, `idf = ln(|D| / (df + 1))` with `|D|` the number of
//! training sentences, and the vector component is `tf * idf`. N-grams that
//! were not seen at fit time get no component but still count towards the tf
//! denominator. Vectors are L2-normalized unless disabled.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{
    analyze, ngrams, remove_stopwords, tokenize, NGramBag, NGramRange, StopList, TokenSequence,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IdfMode {
    /// `ln(|D| / (df + 1))`
    #[default]
    Smoothed,
    /// `ln(|D| / df)`
    Unsmoothed,
}

impl IdfMode {
    pub fn idf(self, d_total: usize, df: usize) -> f64 {
        let denom = match self {
            IdfMode::Smoothed => df + 1,
            IdfMode::Unsmoothed => df,
        };
        (d_total as f64 / denom as f64).ln()
    }
}

impl fmt::Display for IdfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdfMode::Smoothed => "smoothed",
            IdfMode::Unsmoothed => "unsmoothed",
        })
    }
}

impl FromStr for IdfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothed" => Ok(IdfMode::Smoothed),
            "unsmoothed" => Ok(IdfMode::Unsmoothed),
            _ => Err(Error::validation(format!("unknown idf mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    pub range: NGramRange,
    /// Minimum number of training sentences an n-gram must occur in.
    pub min_df: usize,
    pub normalize: bool,
    pub idf: IdfMode,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            range: NGramRange::UNI_BI,
            min_df: 1,
            normalize: true,
            idf: IdfMode::Smoothed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabEntry {
    pub ngram: String,
    pub df: usize,
    pub idf: f64,
}

/// N-gram to index map with document frequencies and idf values. Indices
/// follow the lexicographic order of the n-gram strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    d_total: usize,
    range: NGramRange,
    idf_mode: IdfMode,
    stoplist_id: String,
}

impl Vocabulary {
    /// `sentences` must already have stop words removed.
    pub fn fit(
        sentences: &[TokenSequence],
        range: NGramRange,
        min_df: usize,
        idf_mode: IdfMode,
        stoplist_id: &str,
    ) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::validation("cannot fit a vocabulary on zero sentences"));
        }
        let mut df: HashMap<String, usize> = HashMap::new();
        for s in sentences {
            for g in ngrams(s, range).counts().keys() {
                match df.get_mut(g.as_str()) {
                    Some(n) => *n += 1,
                    None => {
                        df.insert(g.clone(), 1);
                    }
                }
            }
        }
        let d_total = sentences.len();
        let min_df = min_df.max(1);
        let mut entries: Vec<VocabEntry> = df
            .into_iter()
            .filter(|(_, n)| *n >= min_df)
            .map(|(ngram, df)| VocabEntry {
                ngram,
                df,
                idf: idf_mode.idf(d_total, df),
            })
            .collect();
        entries.sort_unstable_by(|a, b| a.ngram.cmp(&b.ngram));
        Ok(Self::assemble(entries, d_total, range, idf_mode, stoplist_id))
    }

    /// Rebuild a vocabulary from stored entries in index order, checking every
    /// invariant (sorted unique n-grams, `1 <= df <= d_total`, idf formula).
    pub fn from_entries(
        entries: Vec<VocabEntry>,
        d_total: usize,
        range: NGramRange,
        idf_mode: IdfMode,
        stoplist_id: &str,
    ) -> Result<Self> {
        for pair in entries.windows(2) {
            if pair[0].ngram >= pair[1].ngram {
                return Err(Error::validation(format!(
                    "vocabulary not in strictly increasing order at {:?}",
                    pair[1].ngram
                )));
            }
        }
        for e in &entries {
            if e.df == 0 || e.df > d_total {
                return Err(Error::validation(format!(
                    "df {} of {:?} outside 1..={d_total}",
                    e.df, e.ngram
                )));
            }
            let expect = idf_mode.idf(d_total, e.df);
            if e.idf.to_bits() != expect.to_bits() {
                return Err(Error::validation(format!(
                    "idf of {:?} is {} but df {} over {d_total} sentences gives {expect}",
                    e.ngram, e.idf, e.df
                )));
            }
        }
        Ok(Self::assemble(entries, d_total, range, idf_mode, stoplist_id))
    }

    fn assemble(
        entries: Vec<VocabEntry>,
        d_total: usize,
        range: NGramRange,
        idf_mode: IdfMode,
        stoplist_id: &str,
    ) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.ngram.clone(), i))
            .collect();
        Vocabulary {
            entries,
            index,
            d_total,
            range,
            idf_mode,
            stoplist_id: stoplist_id.to_string(),
        }
    }

    pub fn lookup(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn entry(&self, ngram: &str) -> Option<&VocabEntry> {
        self.lookup(ngram).map(|i| &self.entries[i])
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn d_total(&self) -> usize {
        self.d_total
    }

    pub fn range(&self) -> NGramRange {
        self.range
    }

    pub fn idf_mode(&self) -> IdfMode {
        self.idf_mode
    }

    pub fn stoplist_id(&self) -> &str {
        &self.stoplist_id
    }

    /// Two-column `ngram<TAB>idf` listing for inspection.
    pub fn write_idf_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}\t{:?}", e.ngram, e.idf)?;
        }
        Ok(())
    }
}

/// Relative frequency of each n-gram within the bag.
pub fn term_frequencies(bag: &NGramBag) -> BTreeMap<String, f64> {
    let total = bag.total() as f64;
    bag.counts()
        .iter()
        .map(|(g, &n)| (g.clone(), n as f64 / total))
        .collect()
}

/// Sparse real vector with sorted indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    /// Duplicated indices are summed; exact zeros are dropped.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::contract(format!("index {i} out of range for dimension {dim}")));
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Ok(SparseVector {
            entries: merged,
            dim,
        })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
            dim: values.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    /// Dot product with a dense vector of length `dim`.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    /// `dense += scale * self`
    pub fn add_scaled_to(&self, dense: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        self.add_scaled_to(&mut d, 1.0);
        d
    }
}

/// TF-IDF vector for `bag`. The bag must use the vocabulary's n-gram range.
pub fn transform(bag: &NGramBag, vocab: &Vocabulary, normalize: bool) -> Result<SparseVector> {
    if bag.range() != vocab.range() {
        return Err(Error::contract(format!(
            "bag built with n-gram range {} but vocabulary uses {}",
            bag.range(),
            vocab.range()
        )));
    }
    let total = bag.total() as f64;
    let mut entries: Vec<(usize, f64)> = bag
        .counts()
        .iter()
        .filter_map(|(g, &n)| {
            let i = vocab.lookup(g)?;
            let w = (n as f64 / total) * vocab.entries[i].idf;
            (w != 0.0).then_some((i, w))
        })
        .collect();
    if normalize {
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
    }
    entries.sort_unstable_by_key(|e| e.0);
    Ok(SparseVector {
        entries,
        dim: vocab.len(),
    })
}

/// A fitted vocabulary bundled with the text processing that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    vocab: Vocabulary,
    config: VectorizerConfig,
    stoplist: StopList,
}

impl Vectorizer {
    pub fn fit<'t, I>(texts: I, config: VectorizerConfig, stoplist: StopList) -> Result<Self>
    where
        I: IntoIterator<Item = &'t str>,
    {
        let texts: Vec<&str> = texts.into_iter().collect();
        let tokens: Vec<TokenSequence> = texts
            .par_iter()
            .map(|t| remove_stopwords(&tokenize(t), &stoplist))
            .collect();
        let vocab = Vocabulary::fit(
            &tokens,
            config.range,
            config.min_df,
            config.idf,
            stoplist.id(),
        )?;
        Ok(Vectorizer {
            vocab,
            config,
            stoplist,
        })
    }

    pub fn from_parts(vocab: Vocabulary, config: VectorizerConfig, stoplist: StopList) -> Result<Self> {
        if vocab.stoplist_id() != stoplist.id() {
            return Err(Error::validation(
                "vocabulary was fitted with a different stop-word list",
            ));
        }
        if vocab.range() != config.range || vocab.idf_mode() != config.idf {
            return Err(Error::validation(
                "vocabulary range or idf mode disagrees with the vectorizer config",
            ));
        }
        Ok(Vectorizer {
            vocab,
            config,
            stoplist,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    pub fn stoplist(&self) -> &StopList {
        &self.stoplist
    }

    pub fn bag(&self, text: &str) -> NGramBag {
        analyze(text, &self.stoplist, self.config.range)
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        transform(&self.bag(text), &self.vocab, self.config.normalize)
            .expect("bag range always matches the fitted vocabulary")
    }

    pub fn vectorize_all(&self, texts: &[&str]) -> Vec<SparseVector> {
        texts.par_iter().map(|t| self.vectorize(t)).collect()
    }

    /// N-grams of `texts` that are absent from the vocabulary.
    pub fn unseen_ngrams<'t>(&self, texts: impl IntoIterator<Item = &'t str>) -> HashSet<String> {
        let mut out = HashSet::new();
        for t in texts {
            for g in self.bag(t).counts().keys() {
                if self.vocab.lookup(g).is_none() {
                    out.insert(g.clone());
                }
            }
        }
        out
    }
}
