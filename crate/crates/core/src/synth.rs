//! Synthetic survey data drawn from a known probit ideal-point model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::ReactionMatrix;
use crate::latent::IdealModel;

/// Latent thresholds that cut a noisy response into four Likert levels.
/// The middle one sits at zero, so binarizing the Likert answer gives a
/// draw from the probit model itself.
const CUTPOINTS: [f64; 3] = [-0.8, 0.0, 0.8];

#[derive(Debug, Clone, Copy)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_questions: usize,
    /// Discrimination norms are uniform on this range.
    pub beta_norm: (f64, f64),
    pub alpha_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 600,
            n_questions: 50,
            beta_norm: (1.0, 3.0),
            alpha_sd: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub model: IdealModel,
    pub points: Vec<[f64; 2]>,
    /// Four-level answers in `{0, 1/3, 2/3, 1}`.
    pub likert: ReactionMatrix,
}

impl Synthetic {
    pub fn binary(&self) -> ReactionMatrix {
        self.likert.binarize()
    }

    /// Accuracy of the generating probabilities on the binarized answers.
    pub fn generator_accuracy(&self) -> f64 {
        let bin = self.binary();
        let mut hits = 0usize;
        for (u, x) in self.points.iter().enumerate() {
            for j in 0..self.model.n_questions() {
                let p = self.model.prob_yes(j, *x);
                let y = bin.get(u, j).unwrap_or_default();
                hits += usize::from((p - y).abs() < 0.5);
            }
        }
        hits as f64 / bin.n_cells() as f64
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut alpha = Vec::with_capacity(cfg.n_questions);
    let mut beta = Vec::with_capacity(cfg.n_questions);
    let mut norms = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    for _ in 0..cfg.n_questions {
        let angle = norms.gen_range(0.0..std::f64::consts::TAU);
        let r = norms.gen_range(cfg.beta_norm.0..=cfg.beta_norm.1);
        beta.push([r * angle.cos(), r * angle.sin()]);
        alpha.push(cfg.alpha_sd * normal());
    }
    let points: Vec<[f64; 2]> = (0..cfg.n_users).map(|_| [normal(), normal()]).collect();
    let question_ids: Vec<String> = (1..=cfg.n_questions).map(|j| format!("q{j}")).collect();
    let model = IdealModel::new(question_ids.clone(), alpha, beta).expect("finite parameters");

    let mut values = Vec::with_capacity(cfg.n_users * cfg.n_questions);
    for x in &points {
        for j in 0..cfg.n_questions {
            let latent = model.linear(j, *x) + normal();
            let level = CUTPOINTS.iter().filter(|&&c| latent >= c).count();
            values.push(Some(level as f64 / 3.0));
        }
    }
    let user_ids = (1..=cfg.n_users).map(|i| format!("c{i}")).collect();
    let likert = ReactionMatrix::new(user_ids, question_ids, values).expect("valid synthetic matrix");
    Synthetic { model, points, likert }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_consistent() {
        let cfg = SyntheticConfig {
            n_users: 50,
            n_questions: 8,
            ..Default::default()
        };
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.likert, b.likert);
        assert!(a.likert.is_complete());
        let acc = a.generator_accuracy();
        assert!(acc > 0.6 && acc < 1.0, "{acc}");
    }
}
