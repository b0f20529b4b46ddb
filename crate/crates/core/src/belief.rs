//! Bayesian inference over a discretized latent plane.
//!
//! The plane `[-3, 3]²` is covered by a regular grid of cell centres that
//! carries a truncated standard normal prior. Answers multiply the mass by
//! their likelihood, which makes the posterior after any answer sequence
//! a product of per-question factors; all arithmetic happens in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::probit::log_normal_cdf;
use crate::latent::IdealModel;

pub const GRID_BOUND: f64 = 3.0;
pub const DEFAULT_RESOLUTION: usize = 61;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    /// Cells per axis for regular grids; `None` for hand-built point sets.
    resolution: Option<usize>,
    points: Vec<[f64; 2]>,
    log_prior: Vec<f64>,
}

impl LatentGrid {
    /// Regular `resolution x resolution` grid over `[-3, 3]²`, row-major
    /// with the first coordinate varying fastest.
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::input(format!(
                "grid resolution must be at least 3, got {resolution}"
            )));
        }
        let last = (resolution - 1) as f64;
        let axis: Vec<f64> = (0..resolution)
            .map(|i| GRID_BOUND * (2.0 * i as f64 - last) / last)
            .collect();
        let points: Vec<[f64; 2]> = axis.iter().flat_map(|&y| axis.iter().map(move |&x| [x, y])).collect();
        let log_prior = points.iter().map(|p| -0.5 * (p[0] * p[0] + p[1] * p[1])).collect();
        Ok(Self {
            resolution: Some(resolution),
            log_prior: normalize_log(log_prior),
            points,
        })
    }

    /// Arbitrary support points with the given (unnormalized) prior weights.
    pub fn from_points(points: Vec<[f64; 2]>, prior: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() != prior.len() {
            return Err(Error::input("need one positive prior weight per point"));
        }
        if prior.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::input("prior weights must be positive and finite"));
        }
        Ok(Self {
            resolution: None,
            log_prior: normalize_log(prior.iter().map(|w| w.ln()).collect()),
            points,
        })
    }

    pub fn resolution(&self) -> Option<usize> {
        self.resolution
    }

    pub fn n_cells(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    /// Evidence `P(Y_j = 1) = ∫ P(Y_j = 1 | x) N(x; 0, I) dx / ∫ N(x; 0, I) dx`
    /// over the grid box, by midpoint quadrature with explicit cell areas.
    /// Computed from the density directly rather than from the stored prior.
    pub fn evidence(&self, model: &IdealModel, j: usize) -> f64 {
        let area = match self.resolution {
            Some(g) => (2.0 * GRID_BOUND / (g - 1) as f64).powi(2),
            None => 1.0,
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for p in &self.points {
            let w = area * (-0.5 * (p[0] * p[0] + p[1] * p[1])).exp() / (2.0 * std::f64::consts::PI);
            num += w * model.prob_yes(j, *p);
            den += w;
        }
        num / den
    }
}

/// Per-question likelihoods evaluated at every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable {
    n_questions: usize,
    n_cells: usize,
    /// Question-major `P(y = 1 | cell)`.
    p_yes: Vec<f64>,
    log_yes: Vec<f64>,
    log_no: Vec<f64>,
}

impl LikelihoodTable {
    pub fn from_model(model: &IdealModel, grid: &LatentGrid) -> Self {
        let n_cells = grid.n_cells();
        let n_questions = model.n_questions();
        let mut p_yes = Vec::with_capacity(n_questions * n_cells);
        let mut log_yes = Vec::with_capacity(n_questions * n_cells);
        let mut log_no = Vec::with_capacity(n_questions * n_cells);
        for j in 0..n_questions {
            for p in grid.points() {
                let z = model.linear(j, *p);
                p_yes.push(model.prob_yes(j, *p));
                log_yes.push(log_normal_cdf(z));
                log_no.push(log_normal_cdf(-z));
            }
        }
        Self {
            n_questions,
            n_cells,
            p_yes,
            log_yes,
            log_no,
        }
    }

    /// Table from explicit agreement probabilities, one row per question.
    pub fn from_probabilities(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cells = rows.first().map_or(0, Vec::len);
        if n_cells == 0 || rows.iter().any(|r| r.len() != n_cells) {
            return Err(Error::input("likelihood rows must be non-empty and equally long"));
        }
        if rows.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::input("likelihoods must lie in [0, 1]"));
        }
        let p_yes: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Self {
            n_questions: rows.len(),
            n_cells,
            log_yes: p_yes.iter().map(|p| p.ln()).collect(),
            log_no: p_yes.iter().map(|p| (-p).ln_1p()).collect(),
            p_yes,
        })
    }

    pub fn n_questions(&self) -> usize {
        self.n_questions
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn p_yes(&self, j: usize) -> &[f64] {
        &self.p_yes[j * self.n_cells..(j + 1) * self.n_cells]
    }

    pub fn log_likelihood(&self, j: usize, yes: bool) -> &[f64] {
        let table = if yes { &self.log_yes } else { &self.log_no };
        &table[j * self.n_cells..(j + 1) * self.n_cells]
    }
}

/// Normalized posterior mass over grid cells together with the answers
/// that produced it. Updates return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBelief {
    log_mass: Vec<f64>,
    mass: Vec<f64>,
    observed: Vec<(usize, bool)>,
}

impl PosteriorBelief {
    pub fn prior(grid: &LatentGrid) -> Self {
        let log_mass = grid.log_prior().to_vec();
        Self {
            mass: log_mass.iter().map(|l| l.exp()).collect(),
            log_mass,
            observed: Vec::new(),
        }
    }

    /// Posterior from the prior and all `answers` at once, as a single
    /// product of likelihood factors.
    pub fn batch(
        grid: &LatentGrid,
        table: &LikelihoodTable,
        answers: impl IntoIterator<Item = (usize, bool)>,
    ) -> Result<Self> {
        let mut log_mass = grid.log_prior().to_vec();
        let mut observed: Vec<(usize, bool)> = Vec::new();
        for (j, yes) in answers {
            check_question(table, j)?;
            if observed.iter().any(|(q, _)| *q == j) {
                return Err(Error::AlreadyAnswered(j.to_string()));
            }
            for (l, ll) in log_mass.iter_mut().zip(table.log_likelihood(j, yes)) {
                *l += ll;
            }
            observed.push((j, yes));
        }
        Ok(Self::from_log(log_mass, observed))
    }

    fn from_log(log_mass: Vec<f64>, observed: Vec<(usize, bool)>) -> Self {
        let log_mass = normalize_log(log_mass);
        Self {
            mass: log_mass.iter().map(|l| l.exp()).collect(),
            log_mass,
            observed,
        }
    }

    /// Multiplies in `P(Y_j = y | x)` and renormalizes.
    pub fn update(&self, table: &LikelihoodTable, j: usize, yes: bool) -> Result<Self> {
        check_question(table, j)?;
        if self.is_answered(j) {
            return Err(Error::AlreadyAnswered(j.to_string()));
        }
        let log_mass = self
            .log_mass
            .iter()
            .zip(table.log_likelihood(j, yes))
            .map(|(a, b)| a + b)
            .collect();
        let mut observed = self.observed.clone();
        observed.push((j, yes));
        Ok(Self::from_log(log_mass, observed))
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn log_mass(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn observed(&self) -> &[(usize, bool)] {
        &self.observed
    }

    pub fn is_answered(&self, j: usize) -> bool {
        self.observed.iter().any(|(q, _)| *q == j)
    }

    /// `P(Y_j = 1 | Y_I) = Σ_cells mass · P(Y_j = 1 | cell)`.
    pub fn predictive(&self, table: &LikelihoodTable, j: usize) -> f64 {
        dot(&self.mass, table.p_yes(j))
    }

    pub fn predictive_all(&self, table: &LikelihoodTable) -> Vec<f64> {
        (0..table.n_questions()).map(|j| self.predictive(table, j)).collect()
    }

    pub fn mean(&self, grid: &LatentGrid) -> [f64; 2] {
        let mut m = [0.0; 2];
        for (w, p) in self.mass.iter().zip(grid.points()) {
            m[0] += w * p[0];
            m[1] += w * p[1];
        }
        m
    }

    /// Trace of the posterior covariance of the cell centres.
    pub fn spatial_variance(&self, grid: &LatentGrid) -> f64 {
        moments_variance(&self.mass, grid.points())
    }

    /// `Σ_{j ∈ questions} p_j (1 − p_j)` with `p_j` the predictive.
    pub fn predictive_uncertainty(&self, table: &LikelihoodTable, questions: &[usize]) -> f64 {
        questions
            .iter()
            .map(|&j| {
                let p = self.predictive(table, j);
                p * (1.0 - p)
            })
            .sum()
    }

    /// Centre of the most probable cell; the first one on ties.
    pub fn map_point(&self, grid: &LatentGrid) -> [f64; 2] {
        let best = self
            .log_mass
            .iter()
            .enumerate()
            .fold(0, |best, (i, l)| if *l > self.log_mass[best] { i } else { best });
        grid.points()[best]
    }

    pub fn export(&self, grid: &LatentGrid) -> BeliefExport {
        BeliefExport {
            resolution: grid.resolution().unwrap_or(0),
            bounds: [-GRID_BOUND, GRID_BOUND],
            mass: self.mass.clone(),
            map_estimate: self.map_point(grid),
        }
    }
}

/// Heatmap payload for clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefExport {
    pub resolution: usize,
    pub bounds: [f64; 2],
    /// Row-major, first coordinate fastest.
    pub mass: Vec<f64>,
    pub map_estimate: [f64; 2],
}

fn check_question(table: &LikelihoodTable, j: usize) -> Result<()> {
    if j >= table.n_questions() {
        return Err(Error::UnknownQuestion(j.to_string()));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `E‖c‖² − ‖E c‖²` under (possibly unnormalized) weights.
pub(crate) fn moments_variance(weights: &[f64], points: &[[f64; 2]]) -> f64 {
    let (mut s, mut m0, mut m1, mut q) = (0.0, 0.0, 0.0, 0.0);
    for (w, p) in weights.iter().zip(points) {
        s += w;
        m0 += w * p[0];
        m1 += w * p[1];
        q += w * (p[0] * p[0] + p[1] * p[1]);
    }
    if s <= 0.0 {
        return 0.0;
    }
    let (m0, m1) = (m0 / s, m1 / s);
    (q / s - m0 * m0 - m1 * m1).max(0.0)
}

fn normalize_log(mut log_mass: Vec<f64>) -> Vec<f64> {
    let max = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = log_mass.iter().map(|l| (l - max).exp()).sum();
    let shift = max + total.ln();
    log_mass.iter_mut().for_each(|l| *l -= shift);
    log_mass
}
