//! Two-dimensional probit ideal-point model,
//! `P(y_ij = 1) = Φ(β_j · x_i − α_j)`, fitted by alternating
//! penalized maximum a posteriori updates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::logistic::LogisticDecoder;
use super::pca;
use super::probit::{inverse_mills, inverse_normal_cdf, log_normal_cdf, normal_cdf};
use crate::dataset::{read_json, write_json, ReactionMatrix};
use crate::error::{Error, Result};

/// Scale between logistic and probit coefficients.
const LOGIT_TO_PROBIT: f64 = 1.702;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealMeta {
    pub seed: u64,
    pub lambda: f64,
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealModel {
    pub question_ids: Vec<String>,
    pub alpha: Vec<f64>,
    pub beta: Vec<[f64; 2]>,
    pub meta: IdealMeta,
}

impl IdealModel {
    pub fn new(question_ids: Vec<String>, alpha: Vec<f64>, beta: Vec<[f64; 2]>) -> Result<Self> {
        if alpha.len() != question_ids.len() || beta.len() != question_ids.len() {
            return Err(Error::input("alpha, beta and question ids differ in length"));
        }
        if alpha.iter().chain(beta.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::input("model parameters must be finite"));
        }
        Ok(Self {
            question_ids,
            alpha,
            beta,
            meta: IdealMeta {
                seed: 0,
                lambda: 0.0,
                iterations: 0,
                converged: true,
            },
        })
    }

    pub fn n_questions(&self) -> usize {
        self.alpha.len()
    }

    pub fn question_index(&self, id: &str) -> Option<usize> {
        self.question_ids.iter().position(|q| q == id)
    }

    /// `β_j · x − α_j`.
    pub fn linear(&self, j: usize, x: [f64; 2]) -> f64 {
        self.beta[j][0] * x[0] + self.beta[j][1] * x[1] - self.alpha[j]
    }

    pub fn prob_yes(&self, j: usize, x: [f64; 2]) -> f64 {
        normal_cdf(self.linear(j, x))
    }

    pub fn log_prob(&self, j: usize, x: [f64; 2], yes: bool) -> f64 {
        let z = self.linear(j, x);
        log_normal_cdf(if yes { z } else { -z })
    }

    /// Probability of agreement by question id.
    pub fn likelihood(&self, question: &str, x: [f64; 2]) -> Result<f64> {
        let j = self
            .question_index(question)
            .ok_or_else(|| Error::UnknownQuestion(question.to_owned()))?;
        Ok(self.prob_yes(j, x))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = read_json(path)?;
        Self::new(model.question_ids.clone(), model.alpha.clone(), model.beta.clone())?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    /// L2 penalty on ideal points and item parameters.
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Stop once the penalized log-likelihood gains less than this per
    /// observed cell over one sweep.
    pub tolerance_per_cell: f64,
    pub seed: u64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_sweeps: 200,
            tolerance_per_cell: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IdealFit {
    pub model: IdealModel,
    /// Training users' positions in the canonical frame.
    pub ideal_points: Vec<[f64; 2]>,
    /// Penalized log-likelihood after initialization and after every sweep.
    pub objective_trace: Vec<f64>,
    /// Questions fitted as unanimous (`β = 0`).
    pub unanimous: Vec<usize>,
}

struct Cells {
    by_user: Vec<Vec<(usize, f64)>>,
    by_item: Vec<Vec<(usize, f64)>>,
    n_present: usize,
}

impl Cells {
    fn from_binary(train: &ReactionMatrix) -> Result<Self> {
        let mut by_user = vec![Vec::new(); train.n_users()];
        let mut by_item = vec![Vec::new(); train.n_questions()];
        let mut n_present = 0;
        for (u, q) in train.present_cells() {
            let v = train.get(u, q).unwrap_or_default();
            let sign = if v == 1.0 {
                1.0
            } else if v == 0.0 {
                -1.0
            } else {
                return Err(Error::input(format!(
                    "IDEAL expects binary answers, found {v} at ({u}, {q})"
                )));
            };
            by_user[u].push((q, sign));
            by_item[q].push((u, sign));
            n_present += 1;
        }
        Ok(Self {
            by_user,
            by_item,
            n_present,
        })
    }
}

/// Fits the probit model to a binary training matrix with missing cells.
///
/// Ideal points start from PCA scores of the mean-imputed matrix, item
/// parameters from per-question logistic fits on those scores. Each sweep
/// takes one safeguarded Newton step per user, then one per question.
/// Both blocks are concave, and a step is only accepted when it does not
/// lower its block objective, so the penalized log-likelihood never
/// decreases between sweeps.
pub fn fit_ideal(train: &ReactionMatrix, settings: &FitSettings) -> Result<IdealFit> {
    let n_users = train.n_users();
    let n_items = train.n_questions();
    if n_users == 0 || n_items == 0 {
        return Err(Error::input("cannot fit an empty matrix"));
    }
    if settings.lambda <= 0.0 {
        return Err(Error::input("lambda must be positive"));
    }
    let cells = Cells::from_binary(train)?;
    let lambda = settings.lambda;

    let mut unanimous = Vec::new();
    let mut alpha = vec![0.0; n_items];
    let mut beta = vec![[0.0; 2]; n_items];
    for (j, cells_j) in cells.by_item.iter().enumerate() {
        let yes = cells_j.iter().filter(|(_, s)| *s > 0.0).count();
        if yes == 0 || yes == cells_j.len() {
            let rate = (yes as f64 + 1.0) / (cells_j.len() as f64 + 2.0);
            alpha[j] = -inverse_normal_cdf(rate);
            unanimous.push(j);
            log::warn!(
                "question `{}` is unanimous ({yes}/{} agree); fitting it without discrimination",
                train.question_ids()[j],
                cells_j.len()
            );
        }
    }
    let is_fixed = {
        let mut v = vec![false; n_items];
        for &j in &unanimous {
            v[j] = true;
        }
        v
    };

    let mut points = initial_points(train);
    for j in 0..n_items {
        if is_fixed[j] {
            continue;
        }
        let xs: Vec<[f64; 2]> = cells.by_item[j].iter().map(|&(u, _)| points[u]).collect();
        let ys: Vec<f64> = cells.by_item[j]
            .iter()
            .map(|&(_, s)| if s > 0.0 { 1.0 } else { 0.0 })
            .collect();
        let lr = LogisticDecoder::fit(&xs, &ys);
        alpha[j] = -lr.intercept / LOGIT_TO_PROBIT;
        beta[j] = [lr.weight[0] / LOGIT_TO_PROBIT, lr.weight[1] / LOGIT_TO_PROBIT];
    }

    let objective = |points: &[[f64; 2]], alpha: &[f64], beta: &[[f64; 2]]| -> f64 {
        let mut ll = 0.0;
        for (u, row) in cells.by_user.iter().enumerate() {
            let x = points[u];
            for &(j, s) in row {
                ll += log_normal_cdf(s * (beta[j][0] * x[0] + beta[j][1] * x[1] - alpha[j]));
            }
        }
        let penalty: f64 = points
            .iter()
            .chain(beta)
            .map(|p| p[0] * p[0] + p[1] * p[1])
            .sum::<f64>()
            + alpha.iter().map(|a| a * a).sum::<f64>();
        ll - 0.5 * lambda * penalty
    };

    let mut trace = vec![objective(&points, &alpha, &beta)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < settings.max_sweeps {
        sweeps += 1;
        for (u, row) in cells.by_user.iter().enumerate() {
            points[u] = newton_ascent(points[u], |x: &[f64; 2]| {
                let mut value = -0.5 * lambda * (x[0] * x[0] + x[1] * x[1]);
                let mut grad = [-lambda * x[0], -lambda * x[1]];
                let mut hess = [[-lambda, 0.0], [0.0, -lambda]];
                for &(j, s) in row {
                    let b = beta[j];
                    let z = s * (b[0] * x[0] + b[1] * x[1] - alpha[j]);
                    value += log_normal_cdf(z);
                    let m = inverse_mills(z);
                    let curv = -m * (z + m);
                    for a in 0..2 {
                        grad[a] += s * m * b[a];
                        for c in 0..2 {
                            hess[a][c] += curv * b[a] * b[c];
                        }
                    }
                }
                (value, grad, hess)
            });
        }
        for (j, col) in cells.by_item.iter().enumerate() {
            if is_fixed[j] {
                continue;
            }
            let theta = newton_ascent([alpha[j], beta[j][0], beta[j][1]], |t: &[f64; 3]| {
                let mut value = -0.5 * lambda * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
                let mut grad = [-lambda * t[0], -lambda * t[1], -lambda * t[2]];
                let mut hess = [[0.0; 3]; 3];
                for (d, row) in hess.iter_mut().enumerate() {
                    row[d] = -lambda;
                }
                for &(u, s) in col {
                    let x = points[u];
                    let z = s * (t[1] * x[0] + t[2] * x[1] - t[0]);
                    value += log_normal_cdf(z);
                    let m = inverse_mills(z);
                    let curv = -m * (z + m);
                    let v = [-1.0, x[0], x[1]];
                    for a in 0..3 {
                        grad[a] += s * m * v[a];
                        for c in 0..3 {
                            hess[a][c] += curv * v[a] * v[c];
                        }
                    }
                }
                (value, grad, hess)
            });
            alpha[j] = theta[0];
            beta[j] = [theta[1], theta[2]];
        }
        let value = objective(&points, &alpha, &beta);
        let gain = value - trace[trace.len() - 1];
        trace.push(value);
        if gain < settings.tolerance_per_cell * cells.n_present.max(1) as f64 {
            converged = true;
            break;
        }
    }

    canonicalize(&mut points, &mut alpha, &mut beta);
    let mut model = IdealModel::new(train.question_ids().to_vec(), alpha, beta)?;
    model.meta = IdealMeta {
        seed: settings.seed,
        lambda,
        iterations: sweeps,
        converged,
    };
    Ok(IdealFit {
        model,
        ideal_points: points,
        objective_trace: trace,
        unanimous,
    })
}

fn initial_points(train: &ReactionMatrix) -> Vec<[f64; 2]> {
    let Ok(p) = pca::fit_components(train) else {
        return vec![[0.0; 2]; train.n_users()];
    };
    let mut scores = p.scores;
    for axis in 0..2 {
        let var = scores.iter().map(|s| s[axis] * s[axis]).sum::<f64>() / scores.len() as f64;
        if var > 1e-12 {
            let sd = var.sqrt();
            scores.iter_mut().for_each(|s| s[axis] /= sd);
        }
    }
    scores
}

/// One Newton step with step halving; returns the input unchanged unless
/// some step size does at least as well.
fn newton_ascent<const N: usize>(
    start: [f64; N],
    eval: impl Fn(&[f64; N]) -> (f64, [f64; N], [[f64; N]; N]),
) -> [f64; N] {
    let (value, grad, hess) = eval(&start);
    let Some(step) = solve_spd_neg(hess, grad) else {
        return start;
    };
    let mut t = 1.0;
    for _ in 0..30 {
        let mut cand = start;
        for d in 0..N {
            cand[d] -= t * step[d];
        }
        if eval(&cand).0 >= value {
            return cand;
        }
        t *= 0.5;
    }
    start
}

/// Gaussian elimination with partial pivoting on `h · s = g`.
fn solve_spd_neg<const N: usize>(mut h: [[f64; N]; N], mut g: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&a, &b| h[a][col].abs().total_cmp(&h[b][col].abs()))?;
        if h[pivot][col].abs() < 1e-300 {
            return None;
        }
        h.swap(col, pivot);
        g.swap(col, pivot);
        for row in col + 1..N {
            let f = h[row][col] / h[col][col];
            let pivot_row = h[col];
            for (dst, src) in h[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            g[row] -= f * g[col];
        }
    }
    let mut s = [0.0; N];
    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|k| h[row][k] * s[k]).sum();
        s[row] = (g[row] - tail) / h[row][row];
    }
    s.iter().all(|v| v.is_finite()).then_some(s)
}

/// Maps the fit onto its canonical frame without changing any likelihood:
/// ideal points centred, rotated onto their principal axes, scaled to unit
/// variance per axis, and each axis oriented so the mean discrimination
/// along it is non-negative.
pub(crate) fn canonicalize(points: &mut [[f64; 2]], alpha: &mut [f64], beta: &mut [[f64; 2]]) {
    let n = points.len() as f64;
    if points.is_empty() {
        return;
    }
    let mean = [
        points.iter().map(|p| p[0]).sum::<f64>() / n,
        points.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    for p in points.iter_mut() {
        p[0] -= mean[0];
        p[1] -= mean[1];
    }
    for (a, b) in alpha.iter_mut().zip(beta.iter()) {
        *a -= b[0] * mean[0] + b[1] * mean[1];
    }

    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points.iter() {
        sxx += p[0] * p[0];
        sxy += p[0] * p[1];
        syy += p[1] * p[1];
    }
    let (sxx, sxy, syy) = (sxx / n, sxy / n, syy / n);
    // Eigenvectors of [[sxx, sxy], [sxy, syy]], major axis first.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (theta.cos(), theta.sin());
    let axes = [[c, s], [-s, c]];
    let var = [
        c * c * sxx + 2.0 * c * s * sxy + s * s * syy,
        s * s * sxx - 2.0 * c * s * sxy + c * c * syy,
    ];
    let scale = var.map(|v| if v > 1e-12 { v.sqrt() } else { 1.0 });

    let project = |v: [f64; 2], axis: usize| axes[axis][0] * v[0] + axes[axis][1] * v[1];
    for p in points.iter_mut() {
        *p = [project(*p, 0) / scale[0], project(*p, 1) / scale[1]];
    }
    for b in beta.iter_mut() {
        *b = [project(*b, 0) * scale[0], project(*b, 1) * scale[1]];
    }
    for axis in 0..2 {
        let mean_beta: f64 = beta.iter().map(|b| b[axis]).sum();
        if mean_beta < 0.0 {
            points.iter_mut().for_each(|p| p[axis] = -p[axis]);
            beta.iter_mut().for_each(|b| b[axis] = -b[axis]);
        }
    }
}
