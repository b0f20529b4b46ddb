//! Per-question logistic regression on 2-D latent coordinates.

use serde::{Deserialize, Serialize};

/// L2 penalty on weight and intercept. Keeps separable data finite.
const RIDGE: f64 = 1e-4;
const MAX_NEWTON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticDecoder {
    pub weight: [f64; 2],
    pub intercept: f64,
}

impl LogisticDecoder {
    pub fn predict(&self, x: [f64; 2]) -> f64 {
        sigmoid(self.weight[0] * x[0] + self.weight[1] * x[1] + self.intercept)
    }

    /// Fits by Newton's method on the penalized cross-entropy. Targets may
    /// be soft (any value in `[0, 1]`), which turns the decoder into a
    /// bounded regression for Likert answers.
    pub fn fit(points: &[[f64; 2]], targets: &[f64]) -> Self {
        assert_eq!(points.len(), targets.len());
        let mut theta = [0.0f64; 3];
        let objective = |t: &[f64; 3]| -> f64 {
            let mut ll = 0.0;
            for (x, &y) in points.iter().zip(targets) {
                let eta = t[0] * x[0] + t[1] * x[1] + t[2];
                ll += y * log_sigmoid(eta) + (1.0 - y) * log_sigmoid(-eta);
            }
            ll - 0.5 * RIDGE * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
        };
        let mut current = objective(&theta);
        for _ in 0..MAX_NEWTON {
            let mut grad = [-RIDGE * theta[0], -RIDGE * theta[1], -RIDGE * theta[2]];
            let mut hess = [[-RIDGE, 0.0, 0.0], [0.0, -RIDGE, 0.0], [0.0, 0.0, -RIDGE]];
            for (x, &y) in points.iter().zip(targets) {
                let v = [x[0], x[1], 1.0];
                let p = sigmoid(theta[0] * x[0] + theta[1] * x[1] + theta[2]);
                let w = p * (1.0 - p);
                for a in 0..3 {
                    grad[a] += (y - p) * v[a];
                    for b in 0..3 {
                        hess[a][b] -= w * v[a] * v[b];
                    }
                }
            }
            let Some(step) = solve3(hess, grad) else { break };
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = [theta[0] - t * step[0], theta[1] - t * step[1], theta[2] - t * step[2]];
                let value = objective(&cand);
                if value >= current {
                    let gain = value - current;
                    theta = cand;
                    current = value;
                    accepted = gain > 1e-12 * (1.0 + current.abs());
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        LogisticDecoder {
            weight: [theta[0], theta[1]],
            intercept: theta[2],
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Solves `h · s = g` for a symmetric 3x3 system; `None` if singular.
pub(crate) fn solve3(h: [[f64; 3]; 3], g: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&h);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut m = h;
        for row in 0..3 {
            m[row][col] = g[row];
        }
        *slot = det(&m) / d;
    }
    Some(out)
}
