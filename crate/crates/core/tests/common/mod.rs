#![allow(dead_code)]

use vaa_core::dataset::{split, SplitMaskConfig, TestSize};
use vaa_core::harness::TestUsers;
use vaa_core::latent::{fit_ideal, FitSettings, IdealModel};
use vaa_core::synth::{generate, Synthetic, SyntheticConfig};
use vaa_core::{Engine, EngineConfig, LatentGrid, LikelihoodTable, ReactionMatrix};

/// A small hand-made instance: support points, prior weights and one row
/// of `P(yes | cell)` per question.
#[derive(Debug, Clone)]
pub struct Toy {
    pub points: Vec<[f64; 2]>,
    pub prior: Vec<f64>,
    pub p_yes: Vec<Vec<f64>>,
}

impl Toy {
    pub fn n_questions(&self) -> usize {
        self.p_yes.len()
    }

    pub fn engine(&self) -> Engine {
        let n = self.n_questions();
        let ids = (0..n).map(|j| format!("q{j}")).collect();
        let model = IdealModel::new(ids, vec![0.0; n], vec![[0.0, 0.0]; n]).unwrap();
        let grid = LatentGrid::from_points(self.points.clone(), &self.prior).unwrap();
        let table = LikelihoodTable::from_probabilities(&self.p_yes).unwrap();
        Engine::from_parts(model, grid, table, vec![vec![0.0; n]], EngineConfig::default()).unwrap()
    }

    /// Normalized posterior by direct multiplication of the prior and the
    /// likelihood of every answer.
    pub fn posterior(&self, answers: &[(usize, bool)]) -> Vec<f64> {
        let mut w: Vec<f64> = self.prior.clone();
        for &(j, y) in answers {
            for (c, wc) in w.iter_mut().enumerate() {
                let p = self.p_yes[j][c];
                *wc *= if y { p } else { 1.0 - p };
            }
        }
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    pub fn predictive(&self, post: &[f64], j: usize) -> f64 {
        post.iter().zip(&self.p_yes[j]).map(|(w, p)| w * p).sum()
    }

    /// Trace of the covariance of the support points under `post`.
    pub fn variance(&self, post: &[f64]) -> f64 {
        let mean = [0, 1].map(|d| post.iter().zip(&self.points).map(|(w, x)| w * x[d]).sum::<f64>());
        post.iter()
            .zip(&self.points)
            .map(|(w, x)| w * ((x[0] - mean[0]).powi(2) + (x[1] - mean[1]).powi(2)))
            .sum()
    }

    /// Expected objective of asking `j` next, enumerating both answers.
    pub fn expected_after(&self, answers: &[(usize, bool)], j: usize, objective: Objective) -> f64 {
        let post = self.posterior(answers);
        let p = self.predictive(&post, j);
        let mut total = 0.0;
        for (y, weight) in [(true, p), (false, 1.0 - p)] {
            if weight <= 0.0 {
                continue;
            }
            let mut next = answers.to_vec();
            next.push((j, y));
            let post = self.posterior(&next);
            let value = match objective {
                Objective::Variance => self.variance(&post),
                Objective::Uncertainty => (0..self.n_questions())
                    .filter(|k| *k != j && !answers.iter().any(|(a, _)| a == k))
                    .map(|k| {
                        let pk = self.predictive(&post, k);
                        pk * (1.0 - pk)
                    })
                    .sum(),
            };
            total += weight * value;
        }
        total
    }

    /// Exhaustive argmin over the unanswered questions, first index on ties.
    pub fn brute_force_choice(&self, answers: &[(usize, bool)], objective: Objective) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n_questions() {
            if answers.iter().any(|(a, _)| *a == j) {
                continue;
            }
            let v = self.expected_after(answers, j, objective);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((j, v));
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Variance,
    Uncertainty,
}

/// Deterministic pseudo-random toy instances for loops outside proptest.
pub fn toy_from_seed(seed: u64, max_cells: usize, max_questions: usize) -> Toy {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let n_cells = 2 + (next() * (max_cells - 1) as f64) as usize;
    let n_q = 1 + (next() * max_questions as f64) as usize;
    let points = (0..n_cells).map(|_| [next() * 6.0 - 3.0, next() * 6.0 - 3.0]).collect();
    let prior = (0..n_cells).map(|_| 0.05 + next()).collect();
    let p_yes = (0..n_q)
        .map(|_| (0..n_cells).map(|_| 0.02 + 0.96 * next()).collect())
        .collect();
    Toy { points, prior, p_yes }
}

/// Synthetic train/test data, the model fitted on train, and an engine.
pub struct SyntheticSetup {
    pub data: Synthetic,
    pub train: ReactionMatrix,
    pub test: ReactionMatrix,
    pub model: IdealModel,
    pub engine: Engine,
    pub users: TestUsers,
}

pub fn synthetic_setup(
    n_train: usize,
    n_test: usize,
    n_questions: usize,
    seed: u64,
    cfg: EngineConfig,
) -> SyntheticSetup {
    let data = generate(&SyntheticConfig {
        n_users: n_train + n_test,
        n_questions,
        seed,
        ..SyntheticConfig::default()
    });
    let (train, test) = split(
        &data.likert,
        &SplitMaskConfig {
            test_size: TestSize::Count(n_test),
            seed,
            ..SplitMaskConfig::default()
        },
    )
    .unwrap();
    let model = fit_ideal(
        &train.binarize(),
        &FitSettings {
            seed,
            ..FitSettings::default()
        },
    )
    .unwrap()
    .model;
    let engine = Engine::new(model.clone(), &train, cfg).unwrap();
    let users = TestUsers::from_matrix(&engine, &test).unwrap();
    SyntheticSetup {
        data,
        train,
        test,
        model,
        engine,
        users,
    }
}
