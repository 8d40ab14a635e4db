//! Dual two-coordinate descent for the linear soft-margin SVM with an
//! unregularized bias.
//!
//! The dual is `min ½ αᵀQα − Σα_i` over `0 ≤ α_i ≤ C`, `Σ y_i α_i = 0`, with
//! `Q_ij = y_i y_j x_i·x_j` and `w = Σ α_i y_i x_i`. The equality constraint
//! (the bias' multiplier) rules out single-coordinate updates, so each step
//! moves a pair `(i, j)` along `α_i += y_i t, α_j −= y_j t`, which keeps
//! `Σ y α` fixed and changes `w` by `t (x_i − x_j)`. The optimal step is
//! closed-form and clipped to the box.
//!
//! After every epoch the primal iterate is `(w(α), b*)` where `b*` minimizes
//! the hinge sum exactly for that `w`. Because `α` is always dual feasible,
//! `Σα − ½‖w‖²` is a lower bound on the optimum and the gap to the best
//! primal value bounds the suboptimality of the returned model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LinearModel, TrainingConfig};
use crate::vectorizer::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Best primal objective seen so far (non-increasing).
    pub objective: f64,
    pub dual: f64,
    /// `objective − dual`
    pub gap: f64,
}

pub(super) fn solve(
    x: &[SparseVector],
    y: &[f64],
    dim: usize,
    config: &TrainingConfig,
) -> (LinearModel, Vec<EpochRecord>) {
    let n = x.len();
    let c = config.c;
    let sq_norm: Vec<f64> = x.iter().map(SparseVector::squared_norm).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut margins = vec![0.0; n];
    let mut bias = 0.0;

    let mut best = LinearModel {
        weights: vec![0.0; dim],
        bias: 0.0,
        config: *config,
        objective: f64::INFINITY,
        epochs: 0,
        converged: false,
    };
    let mut trace = Vec::new();

    for epoch in 1..=config.max_epochs {
        let (up, low) = violators(&margins, y, &alpha, c, n.div_ceil(POOL_FRACTION));
        // Most epochs visit only the points that are free or violate their
        // KKT condition under the last bias, cycled up to n steps. Every
        // FULL_EVERY-th epoch sweeps all points so none stays excluded.
        let mut active: Vec<usize> = (0..n)
            .filter(|&i| {
                let f = y[i] * (margins[i] + bias);
                (alpha[i] > 0.0 && alpha[i] < c) || (alpha[i] == 0.0 && f < 1.0) || (alpha[i] == c && f > 1.0)
            })
            .collect();
        order.clear();
        if epoch % FULL_EVERY == 1 || active.is_empty() {
            order.extend(0..n);
            order.shuffle(&mut rng);
        } else {
            while order.len() < n {
                active.shuffle(&mut rng);
                order.extend_from_slice(&active);
            }
            order.truncate(n);
        }
        for &i in &order {
            // Candidate partners: uniform draws and members of the most
            // violating pool on the side opposite to i, ranked at epoch
            // start. The one with the largest exact dual decrease wins.
            let pool = if is_up(y[i], alpha[i], c) { &low } else { &up };
            let mut best: Option<(usize, f64, f64)> = None;
            for k in 0..CANDIDATES {
                let mut j = if k % 2 == 1 && !pool.is_empty() {
                    pool[rng.random_range(0..pool.len())]
                } else {
                    rng.random_range(0..n)
                };
                if j == i {
                    j = (i + 1) % n;
                }
                if let Some((t, gain)) = pair_plan(i, j, x, y, &sq_norm, c, &alpha, &w) {
                    if best.is_none_or(|b| gain > b.2) {
                        best = Some((j, t, gain));
                    }
                }
            }
            if let Some((j, t, _)) = best {
                apply(i, j, t, x, y, c, &mut alpha, &mut w);
            }
        }

        // Rebuild w from α so drift from the incremental updates never
        // reaches the certificate.
        w.iter_mut().for_each(|v| *v = 0.0);
        for ((xi, &yi), &ai) in x.iter().zip(y).zip(&alpha) {
            if ai != 0.0 {
                xi.add_scaled_to(&mut w, ai * yi);
            }
        }
        let half_sq = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for (m, xi) in margins.iter_mut().zip(x) {
            *m = xi.dot_dense(&w);
        }
        bias = best_bias(&margins, y);
        let primal = half_sq + c * hinge_sum(&margins, y, bias);
        let dual = alpha.iter().sum::<f64>() - half_sq;

        if primal < best.objective {
            best.weights.copy_from_slice(&w);
            best.bias = bias;
            best.objective = primal;
        }
        best.epochs = epoch;
        let gap = (best.objective - dual).max(0.0);
        trace.push(EpochRecord {
            epoch,
            objective: best.objective,
            dual,
            gap,
        });
        if gap <= config.tol * (1.0 + best.objective.abs()) {
            best.converged = true;
            break;
        }
    }
    (best, trace)
}

const POOL_FRACTION: usize = 20;
const CANDIDATES: usize = 6;
const FULL_EVERY: usize = 4;

fn hinge_sum(margins: &[f64], y: &[f64], b: f64) -> f64 {
    margins.iter().zip(y).map(|(m, yi)| (1.0 - yi * (m + b)).max(0.0)).sum()
}

/// Whether α_i may move so that y_i α_i grows.
fn is_up(yi: f64, ai: f64, c: f64) -> bool {
    if yi > 0.0 {
        ai < c
    } else {
        ai > 0.0
    }
}

fn is_low(yi: f64, ai: f64, c: f64) -> bool {
    if yi > 0.0 {
        ai > 0.0
    } else {
        ai < c
    }
}

/// The `q` most violating members of each side, ranked by `y_i − w·x_i`:
/// largest first for the up side, smallest first for the low side.
fn violators(margins: &[f64], y: &[f64], alpha: &[f64], c: f64, q: usize) -> (Vec<usize>, Vec<usize>) {
    let key = |i: usize| y[i] - margins[i];
    let mut up: Vec<usize> = (0..y.len()).filter(|&i| is_up(y[i], alpha[i], c)).collect();
    let mut low: Vec<usize> = (0..y.len()).filter(|&i| is_low(y[i], alpha[i], c)).collect();
    let q_up = q.min(up.len());
    let q_low = q.min(low.len());
    if q_up > 0 {
        up.select_nth_unstable_by(q_up - 1, |&a, &b| key(b).total_cmp(&key(a)));
    }
    if q_low > 0 {
        low.select_nth_unstable_by(q_low - 1, |&a, &b| key(a).total_cmp(&key(b)));
    }
    up.truncate(q_up);
    low.truncate(q_low);
    (up, low)
}

/// Optimal step `t` for the pair `(i, j)` and the resulting decrease of
/// the dual objective, or `None` when the pair cannot move.
#[allow(clippy::too_many_arguments)]
fn pair_plan(i: usize, j: usize, x: &[SparseVector], y: &[f64], sq_norm: &[f64], c: f64, alpha: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let (yi, yj) = (y[i], y[j]);
    // bounds on t from 0 <= α_i + y_i t <= C and 0 <= α_j − y_j t <= C
    let (lo_i, hi_i) = if yi > 0.0 {
        (-alpha[i], c - alpha[i])
    } else {
        (alpha[i] - c, alpha[i])
    };
    let (lo_j, hi_j) = if yj > 0.0 {
        (alpha[j] - c, alpha[j])
    } else {
        (-alpha[j], c - alpha[j])
    };
    let lo = lo_i.max(lo_j);
    let hi = hi_i.min(hi_j);
    if hi - lo <= 0.0 {
        return None;
    }

    let slope = (x[i].dot_dense(w) - yi) - (x[j].dot_dense(w) - yj);
    let curvature = (sq_norm[i] + sq_norm[j] - 2.0 * x[i].dot(&x[j])).max(0.0);
    let t = if curvature > 1e-12 {
        (-slope / curvature).clamp(lo, hi)
    } else if slope < 0.0 {
        hi
    } else if slope > 0.0 {
        lo
    } else {
        0.0
    };
    if t == 0.0 {
        return None;
    }
    Some((t, -(slope * t + 0.5 * curvature * t * t)))
}

#[allow(clippy::too_many_arguments)]
fn apply(i: usize, j: usize, t: f64, x: &[SparseVector], y: &[f64], c: f64, alpha: &mut [f64], w: &mut [f64]) {
    alpha[i] = (alpha[i] + y[i] * t).clamp(0.0, c);
    alpha[j] = (alpha[j] - y[j] * t).clamp(0.0, c);
    x[i].add_scaled_to(w, t);
    x[j].add_scaled_to(w, -t);
}

/// Bias minimizing `Σ max(0, 1 − y_i (m_i + b))` for fixed margins `m_i`.
///
/// Each term has its kink at `b = y_i − m_i`; the sum is convex and piecewise
/// linear, so the minimizer is the first kink where the right slope turns
/// non-negative. A flat minimizing segment resolves to its midpoint.
pub(crate) fn best_bias(margins: &[f64], y: &[f64]) -> f64 {
    let mut kinks: Vec<(f64, bool)> = margins
        .iter()
        .zip(y)
        .map(|(m, &yi)| (yi - m, yi > 0.0))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = kinks.iter().filter(|k| k.1).count() as i64;
    // slope just left of the first kink: every positive term is active
    let mut slope = -positives;
    let mut idx = 0;
    while idx < kinks.len() {
        let at = kinks[idx].0;
        while idx < kinks.len() && kinks[idx].0 == at {
            // passing a positive kink deactivates it, a negative one activates
            slope += 1;
            idx += 1;
        }
        if slope > 0 {
            return at;
        }
        if slope == 0 {
            return match kinks.get(idx) {
                Some(next) => 0.5 * (at + next.0),
                None => at,
            };
        }
    }
    // only reachable without negatives; any b past the last kink is optimal
    kinks.last().map_or(0.0, |k| k.0)
}
