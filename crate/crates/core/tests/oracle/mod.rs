//! Reference implementations used only by tests. They share no code with
//! the library and favour obviousness over speed.

#![allow(dead_code)]

pub mod svm;
pub mod tfidf;

use rand::seq::IndexedRandom;
use rand::Rng;

/// Word pool mixing stop words, mixed case, digits and punctuation.
pub const POOL: &[&str] = &[
    "the", "of", "and", "with", "was", "were", "a", "to", "in", "patients", "Patients", "aged",
    "years", "women", "MEN", "children", "mg", "10", "2x", "daily", "placebo", "received",
    "group", "outcome", "pain", "score", "mortality", "trial", "dose,", "(n=40)", "risk-free",
    "Quality", "life;", "asthma.", "...", "--", "e.g.",
];

pub fn random_sentence<R: Rng>(rng: &mut R, max_tokens: usize) -> String {
    let len = rng.random_range(1..=max_tokens);
    (0..len)
        .map(|_| *POOL.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Random labelled corpus with label-specific words so models have signal.
pub fn random_corpus<R: Rng>(rng: &mut R, n: usize) -> pico_core::Corpus {
    use pico_core::{Corpus, Label, LabeledSentence};
    let labels = [Label::P, Label::I, Label::O];
    let cues: [&[&str]; 3] = [
        &["enrolled", "adults", "aged"],
        &["randomized", "dose", "therapy"],
        &["measured", "improved", "reduced"],
    ];
    let sentences = (0..n)
        .map(|k| {
            let which = rng.random_range(0..3);
            let mut text = random_sentence(rng, 10);
            if rng.random_bool(0.8) {
                text.push(' ');
                text.push_str(cues[which].choose(rng).unwrap());
            }
            LabeledSentence {
                pmid: (k / 4).to_string(),
                heading: String::new(),
                label: labels[which],
                text,
            }
        })
        .collect();
    Corpus::new(sentences, "random")
}
