//! Exact soft-margin SVM optimum for tiny problems by enumerating KKT
//! configurations.
//!
//! Each point is assigned to one of three sets: on the margin (`E`), inside
//! it with multiplier `C` (`A`), or outside it with multiplier zero. For a
//! fixed assignment the stationarity conditions are a square linear system
//! in `(w, b, α_E)`. Every candidate it produces is scored with the true
//! primal, so the minimum over all assignments is the optimum as long as
//! the optimal configuration is among those enumerated. Basic multiplier
//! solutions need at most `d + 1` margin points, which bounds `|E|`.

use nalgebra::{DMatrix, DVector};

pub fn primal(x: &[Vec<f64>], y: &[f64], c: f64, w: &[f64], b: f64) -> f64 {
    let mut obj = 0.0;
    for v in w {
        obj += 0.5 * v * v;
    }
    for (xi, yi) in x.iter().zip(y) {
        let mut m = b;
        for (a, v) in xi.iter().zip(w) {
            m += a * v;
        }
        obj += c * (1.0 - yi * m).max(0.0);
    }
    obj
}

/// Best bias for fixed `w`, trying every kink.
fn best_b(x: &[Vec<f64>], y: &[f64], c: f64, w: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let m: f64 = xi.iter().zip(w).map(|(a, v)| a * v).sum();
        let b = yi - m;
        let o = primal(x, y, c, w, b);
        if o < best.0 {
            best = (o, b);
        }
    }
    best.1
}

pub struct Optimum {
    pub w: Vec<f64>,
    pub b: f64,
    pub objective: f64,
}

pub fn solve(x: &[Vec<f64>], y: &[f64], c: f64) -> Optimum {
    let n = x.len();
    let d = x[0].len();
    let mut best = Optimum {
        w: vec![0.0; d],
        b: 0.0,
        objective: f64::INFINITY,
    };
    let mut consider = |w: Vec<f64>, b: f64| {
        for b in [b, best_b(x, y, c, &w)] {
            let o = primal(x, y, c, &w, b);
            if o < best.objective {
                best = Optimum {
                    w: w.clone(),
                    b,
                    objective: o,
                };
            }
        }
    };

    // assignment digit per point: 0 outside, 1 on margin, 2 at bound C
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut e = Vec::new();
        let mut a = Vec::new();
        let mut rest = code;
        for i in 0..n {
            match rest % 3 {
                1 => e.push(i),
                2 => a.push(i),
                _ => {}
            }
            rest /= 3;
        }
        if e.len() > d + 1 {
            continue;
        }
        // w fixed by the bound multipliers alone
        let mut w_a = vec![0.0; d];
        let mut ya = 0.0;
        for &i in &a {
            ya += y[i];
            for k in 0..d {
                w_a[k] += c * y[i] * x[i][k];
            }
        }
        if e.is_empty() {
            if ya == 0.0 {
                consider(w_a, 0.0);
            }
            continue;
        }
        // unknowns: w (d), b, α_E (|E|)
        let m = d + 1 + e.len();
        let mut lhs = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for k in 0..d {
            lhs[(k, k)] = 1.0;
            for (j, &i) in e.iter().enumerate() {
                lhs[(k, d + 1 + j)] = -y[i] * x[i][k];
            }
            rhs[k] = w_a[k];
        }
        for (j, &i) in e.iter().enumerate() {
            lhs[(d, d + 1 + j)] = y[i];
        }
        rhs[d] = -c * ya;
        for (j, &i) in e.iter().enumerate() {
            let row = d + 1 + j;
            for k in 0..d {
                lhs[(row, k)] = y[i] * x[i][k];
            }
            lhs[(row, d)] = y[i];
            rhs[row] = 1.0;
        }
        if let Some(sol) = lhs.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                consider(sol.rows(0, d).iter().copied().collect(), sol[d]);
            }
        }
    }
    best
}
