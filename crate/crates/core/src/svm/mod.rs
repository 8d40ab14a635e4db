//! Soft-margin linear SVM.
//!
//! Training minimizes the unconstrained hinge form
//!
//! ```text
//! (1/2)‖w‖² + C Σ max(0, 1 − y_i (w·x_i + b))
//! ```
//!
//! which is the slack-variable problem `min (1/2)‖w‖² + C Σ ξ_i` subject to
//! `y_i (w·x_i + b) ≥ 1 − ξ_i, ξ_i ≥ 0`: for fixed `(w, b)` the smallest
//! feasible slack of each point is exactly its hinge loss. The bias is not
//! regularized.

mod artifact;
mod multitask;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorizer::SparseVector;

pub use artifact::{TaskModel, FORMAT_VERSION};
pub use multitask::{fit_task, train_multitask, PerTaskC};
pub use solver::EpochRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Penalty on the total slack.
    pub c: f64,
    /// Relative duality-gap target, `gap <= tol * (1 + |objective|)`.
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            c: 1.0,
            tol: 1e-6,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::validation(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::validation(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(Error::validation("max_epochs must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainingConfig,
    /// Primal objective of `(weights, bias)` on the training set.
    pub objective: f64,
    pub epochs: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn zeros(dim: usize, config: TrainingConfig) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            config,
            objective: f64::NAN,
            epochs: 0,
            converged: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Per-point slack `ξ_i = max(0, 1 − y_i (w·x_i + b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackSummary {
    pub xi: Vec<f64>,
    pub total_slack: f64,
}

/// `w·x + b`
pub fn decision(model: &LinearModel, x: &SparseVector) -> Result<f64> {
    if x.dim() != model.dim() {
        return Err(Error::contract(format!(
            "vector dimension {} does not match model dimension {}",
            x.dim(),
            model.dim()
        )));
    }
    Ok(x.dot_dense(&model.weights) + model.bias)
}

/// Ties at a decision value of exactly zero go to the positive class.
pub fn label_of(score: f64) -> u8 {
    u8::from(score >= 0.0)
}

pub fn predict(model: &LinearModel, x: &SparseVector) -> Result<u8> {
    decision(model, x).map(label_of)
}

fn check_labels(x: &[SparseVector], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::contract(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::contract(format!("labels must be +1 or -1, found {v}")));
    }
    Ok(())
}

pub fn slack(model: &LinearModel, x: &[SparseVector], y: &[f64]) -> Result<SlackSummary> {
    check_labels(x, y)?;
    let xi = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| Ok((1.0 - yi * decision(model, xi)?).max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let total_slack = xi.iter().sum();
    Ok(SlackSummary { xi, total_slack })
}

pub fn objective(model: &LinearModel, x: &[SparseVector], y: &[f64]) -> Result<f64> {
    let s = slack(model, x, y)?;
    let sq: f64 = model.weights.iter().map(|w| w * w).sum();
    Ok(0.5 * sq + model.config.c * s.total_slack)
}

/// Train on `x` with labels `y ∈ {−1, +1}`.
///
/// Fails with [`Error::NotConverged`] (carrying the best model found) when
/// the duality-gap target is not met within `max_epochs`.
pub fn train(x: &[SparseVector], y: &[f64], config: &TrainingConfig) -> Result<LinearModel> {
    train_traced(x, y, config).map(|(m, _)| m)
}

/// As [`train`], also returning one record per epoch.
pub fn train_traced(
    x: &[SparseVector],
    y: &[f64],
    config: &TrainingConfig,
) -> Result<(LinearModel, Vec<EpochRecord>)> {
    config.validate()?;
    check_labels(x, y)?;
    if x.len() < 2 {
        return Err(Error::validation("training needs at least two instances"));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::validation("training data contains a single class"));
    }
    let dim = x[0].dim();
    if let Some(v) = x.iter().find(|v| v.dim() != dim) {
        return Err(Error::contract(format!(
            "mixed vector dimensions {} and {}",
            dim,
            v.dim()
        )));
    }
    let (model, trace) = solver::solve(x, y, dim, config);
    if model.converged {
        Ok((model, trace))
    } else {
        Err(Error::NotConverged {
            epochs: model.epochs,
            objective: model.objective,
            model: Box::new(model),
        })
    }
}
