//! Stratified k-fold cross-validation of the full pipeline. Every fold fits
//! its own vocabulary and model on the other `k − 1` folds.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{evaluate, ConfusionMatrix, Metrics};
use crate::corpus::TaskInstance;
use crate::error::{Error, Result};
use crate::svm::{fit_task, TaskModel, TrainingConfig};
use crate::textproc::StopList;
use crate::vectorizer::VectorizerConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub vectorizer: VectorizerConfig,
    pub training: TrainingConfig,
    pub stoplist: StopList,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vectorizer: VectorizerConfig::default(),
            training: TrainingConfig::default(),
            stoplist: StopList::english(),
        }
    }
}

/// Assign instance positions to `k` folds. Each class is shuffled with the
/// seeded generator and dealt round-robin, so per-class fold sizes differ
/// by at most one. Folds are returned in ascending position order.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::validation(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for class in [1u8, 0u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::validation(format!(
                "class {class} has {} instances, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (n, idx) in members.into_iter().enumerate() {
            folds[n % k].push(idx);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub vocabulary_size: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

impl MetricSummary {
    fn of(f: &FoldReport) -> Self {
        MetricSummary {
            accuracy: f.metrics.accuracy,
            precision: f.metrics.precision,
            recall: f.metrics.recall,
            f1: f.metrics.f1,
            auc: f.auc,
        }
    }

    fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        MetricSummary {
            accuracy: g(self.accuracy),
            precision: g(self.precision),
            recall: g(self.recall),
            f1: g(self.f1),
            auc: g(self.auc),
        }
    }

    fn zip(&self, o: &Self, g: impl Fn(f64, f64) -> f64) -> Self {
        MetricSummary {
            accuracy: g(self.accuracy, o.accuracy),
            precision: g(self.precision, o.precision),
            recall: g(self.recall, o.recall),
            f1: g(self.f1, o.f1),
            auc: g(self.auc, o.auc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub k: usize,
    pub seed: u64,
    /// Digest of the fold assignment; equal digests mean identical folds.
    pub fold_fingerprint: String,
    pub folds: Vec<FoldReport>,
    pub mean: MetricSummary,
    /// Sample standard deviation over folds (denominator `k − 1`).
    pub std: MetricSummary,
}

impl CvResult {
    fn aggregate(k: usize, seed: u64, fold_fingerprint: String, folds: Vec<FoldReport>) -> Self {
        let n = folds.len() as f64;
        let sum = folds
            .iter()
            .map(MetricSummary::of)
            .fold(MetricSummary::default(), |a, b| a.zip(&b, |x, y| x + y));
        let mean = sum.map(|s| s / n);
        let sq = folds
            .iter()
            .map(|f| MetricSummary::of(f).zip(&mean, |x, m| (x - m) * (x - m)))
            .fold(MetricSummary::default(), |a, b| a.zip(&b, |x, y| x + y));
        let std = sq.map(|s| (s / (n - 1.0)).sqrt());
        CvResult {
            k,
            seed,
            fold_fingerprint,
            folds,
            mean,
            std,
        }
    }
}

pub fn kfold_cv(
    instances: &[TaskInstance<'_>],
    k: usize,
    seed: u64,
    config: &PipelineConfig,
) -> Result<CvResult> {
    kfold_cv_inspect(instances, k, seed, config, |_, _, _, _| {})
}

/// As [`kfold_cv`], calling `inspect(fold, model, train, test)` after each
/// fold's model is fitted.
pub fn kfold_cv_inspect<F>(
    instances: &[TaskInstance<'_>],
    k: usize,
    seed: u64,
    config: &PipelineConfig,
    inspect: F,
) -> Result<CvResult>
where
    F: Fn(usize, &TaskModel, &[TaskInstance<'_>], &[TaskInstance<'_>]) + Sync,
{
    let task = instances
        .first()
        .map(|i| i.task)
        .ok_or_else(|| Error::validation("cross-validation of zero instances"))?;
    let labels: Vec<u8> = instances.iter().map(|i| i.y).collect();
    let folds = stratified_folds(&labels, k, seed)?;

    let reports = folds
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| {
            let held: HashSet<usize> = held_out.iter().copied().collect();
            let test: Vec<TaskInstance> = held_out.iter().map(|&i| instances[i]).collect();
            let train: Vec<TaskInstance> = (0..instances.len())
                .filter(|i| !held.contains(i))
                .map(|i| instances[i])
                .collect();
            let model = fit_task(task, &train, config.vectorizer, &config.stoplist, &config.training)?;
            check_no_leakage(&model, &train, &test)?;
            inspect(f, &model, &train, &test);
            let eval = evaluate(&model, &test)?;
            Ok(FoldReport {
                fold: f,
                train_size: train.len(),
                test_size: test.len(),
                vocabulary_size: model.vectorizer.vocabulary().len(),
                confusion: eval.confusion,
                metrics: eval.metrics,
                auc: eval.auc().expect("every fold holds both classes"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult::aggregate(k, seed, fingerprint(instances, &folds), reports))
}

fn fingerprint(instances: &[TaskInstance<'_>], folds: &[Vec<usize>]) -> String {
    let mut h = Sha256::new();
    for f in folds {
        h.update(b"F");
        for &i in f {
            h.update((instances[i].id as u64).to_le_bytes());
            h.update([instances[i].y]);
        }
    }
    hex::encode(&h.finalize()[..8])
}

/// N-grams that occur only in the held-out fold must not be in the fold's
/// vocabulary.
fn check_no_leakage(model: &TaskModel, train: &[TaskInstance<'_>], test: &[TaskInstance<'_>]) -> Result<()> {
    let vz = &model.vectorizer;
    let mut seen: HashSet<String> = HashSet::new();
    for i in train {
        seen.extend(vz.bag(&i.sentence.text).counts().keys().cloned());
    }
    for i in test {
        for g in vz.bag(&i.sentence.text).counts().keys() {
            if !seen.contains(g) && vz.vocabulary().lookup(g).is_some() {
                return Err(Error::contract(format!(
                    "held-out n-gram {g:?} leaked into the fold vocabulary"
                )));
            }
        }
    }
    Ok(())
}
