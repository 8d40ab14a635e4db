//! Classification metrics, ROC analysis and cross-validation.

mod cv;

use std::io::Write;

use serde::Serialize;

use crate::corpus::TaskInstance;
use crate::error::{Error, Result};
use crate::svm::{label_of, TaskModel};

pub use cv::{kfold_cv, kfold_cv_inspect, stratified_folds, CvResult, FoldReport, MetricSummary, PipelineConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_binary(v: &[u8], what: &str) -> Result<()> {
    match v.iter().find(|&&b| b > 1) {
        Some(b) => Err(Error::contract(format!("{what} must be 0 or 1, found {b}"))),
        None => Ok(()),
    }
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::contract("confusion matrix of zero instances"));
    }
    check_binary(pred, "predictions")?;
    check_binary(truth, "labels")?;
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (1, _) => cm.fp += 1,
            (_, 1) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Which ratios were 0/0 and therefore reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Degenerate {
    pub accuracy: bool,
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl Degenerate {
    pub fn any(&self) -> bool {
        self.accuracy || self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    let mut d = Degenerate::default();
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let accuracy = ratio(tp + tn, cm.total() as f64, &mut d.accuracy);
    let precision = ratio(tp, tp + fp, &mut d.precision);
    let recall = ratio(tp, tp + fn_, &mut d.recall);
    let f1 = ratio(2.0 * precision * recall, precision + recall, &mut d.f1);
    Metrics {
        accuracy,
        precision,
        recall,
        f1,
        degenerate: d,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// Two columns, `fpr<TAB>tpr`, one point per line.
    pub fn write_points<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "fpr\ttpr")?;
        for (x, y) in &self.points {
            writeln!(w, "{x:?}\t{y:?}")?;
        }
        Ok(())
    }
}

fn class_counts(scores: &[f64], truth: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != truth.len() {
        return Err(Error::contract(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    check_binary(truth, "labels")?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation("ROC scores must be finite"));
    }
    let pos = truth.iter().filter(|&&t| t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation("ROC needs both classes in the labels"));
    }
    Ok((pos, neg))
}

/// Sweep the threshold from the highest score down, one point per group of
/// tied scores; area by the trapezoidal rule.
pub fn roc(scores: &[f64], truth: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            if truth[order[idx]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].0 - p[0].0) * (p[0].1 + p[1].1) * 0.5)
        .sum()
}

/// Probability that a random positive outscores a random negative, ties
/// counted half, computed from average ranks (Mann-Whitney U).
pub fn rank_auc(scores: &[f64], truth: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let start = idx;
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            idx += 1;
        }
        // ranks start..idx are 1-based start+1..=idx
        let avg = (start + 1 + idx) as f64 / 2.0;
        rank_sum += avg * order[start..idx].iter().filter(|&&i| truth[i] == 1).count() as f64;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Scores, thresholded labels and their summaries on one labeled set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// `None` when the set holds a single class.
    pub roc: Option<RocCurve>,
    #[serde(skip)]
    pub scores: Vec<f64>,
}

impl Evaluation {
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().map(|r| r.auc)
    }
}

pub fn evaluate_scores(scores: Vec<f64>, truth: &[u8]) -> Result<Evaluation> {
    let pred: Vec<u8> = scores.iter().copied().map(label_of).collect();
    let cm = confusion(&pred, truth)?;
    let both = truth.contains(&0) && truth.contains(&1);
    let roc = if both { Some(roc(&scores, truth)?) } else { None };
    Ok(Evaluation {
        confusion: cm,
        metrics: metrics(&cm),
        roc,
        scores,
    })
}

pub fn evaluate(model: &TaskModel, instances: &[TaskInstance<'_>]) -> Result<Evaluation> {
    use rayon::prelude::*;
    let scores: Vec<f64> = instances
        .par_iter()
        .map(|i| model.score(&i.sentence.text))
        .collect();
    let truth: Vec<u8> = instances.iter().map(|i| i.y).collect();
    evaluate_scores(scores, &truth)
}
