use std::collections::BTreeSet;

/// Lowercased alphanumeric runs with stop words dropped.
pub fn tokens(text: &str, stop: &BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars().chain(std::iter::once(' ')) {
        if ch.is_alphanumeric() {
            cur.push(ch);
        } else if !cur.is_empty() {
            out.push(cur.to_lowercase());
            cur.clear();
        }
    }
    out.retain(|t| !stop.contains(t));
    out
}

/// Every n-gram occurrence, in order, for `lo <= n <= hi`.
pub fn grams(tokens: &[String], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        if tokens.len() < n {
            continue;
        }
        for start in 0..=tokens.len() - n {
            let mut g = String::new();
            for k in 0..n {
                if k > 0 {
                    g.push(' ');
                }
                g.push_str(&tokens[start + k]);
            }
            out.push(g);
        }
    }
    out
}

pub struct Params {
    pub lo: usize,
    pub hi: usize,
    pub smoothed: bool,
    pub normalize: bool,
}

/// Sorted vocabulary of the training sentences.
pub fn vocabulary(train: &[&str], stop: &BTreeSet<String>, p: &Params) -> Vec<String> {
    let mut all = BTreeSet::new();
    for t in train {
        for g in grams(&tokens(t, stop), p.lo, p.hi) {
            all.insert(g);
        }
    }
    all.into_iter().collect()
}

/// Dense TF-IDF vector of `query` over the vocabulary of `train`.
pub fn vector(train: &[&str], query: &str, stop: &BTreeSet<String>, p: &Params) -> Vec<f64> {
    let vocab = vocabulary(train, stop, p);
    let train_grams: Vec<Vec<String>> = train.iter().map(|t| grams(&tokens(t, stop), p.lo, p.hi)).collect();
    let q = grams(&tokens(query, stop), p.lo, p.hi);
    let mut out = vec![0.0; vocab.len()];
    for (idx, g) in vocab.iter().enumerate() {
        let mut count = 0usize;
        for h in &q {
            if h == g {
                count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        let mut df = 0usize;
        for doc in &train_grams {
            if doc.iter().any(|h| h == g) {
                df += 1;
            }
        }
        let denom = if p.smoothed { df + 1 } else { df };
        let idf = (train.len() as f64 / denom as f64).ln();
        out[idx] = count as f64 / q.len() as f64 * idf;
    }
    if p.normalize {
        let mut sq = 0.0;
        for v in &out {
            sq += v * v;
        }
        if sq > 0.0 {
            let norm = sq.sqrt();
            for v in &mut out {
                *v /= norm;
            }
        }
    }
    out
}
