//! Latent spatial models fitted on candidate answers.

pub mod ideal;
pub mod logistic;
pub mod pca;
pub mod probit;

pub use ideal::{fit_ideal, FitSettings, IdealFit, IdealMeta, IdealModel};
pub use logistic::LogisticDecoder;
pub use pca::{fit_pca, mean_baseline, PcaModel};

use crate::belief::{LatentGrid, LikelihoodTable, PosteriorBelief};

/// Places a new respondent in a fitted latent space without touching the
/// model parameters.
pub enum Embedder<'a> {
    /// MAP cell of the grid posterior given the binarized answers.
    Ideal {
        grid: &'a LatentGrid,
        table: &'a LikelihoodTable,
    },
    /// Mean-impute, centre and project.
    Pca(&'a PcaModel),
}

impl Embedder<'_> {
    pub fn embed(&self, answers: &[Option<f64>]) -> [f64; 2] {
        match self {
            Embedder::Ideal { grid, table } => {
                let observed = answers
                    .iter()
                    .enumerate()
                    .filter_map(|(j, a)| a.map(|v| (j, crate::dataset::binarize_value(v) == 1.0)));
                PosteriorBelief::batch(grid, table, observed)
                    .expect("answers are distinct by construction")
                    .map_point(grid)
            }
            Embedder::Pca(model) => model.embed(answers),
        }
    }
}
