//! Two-component PCA of a mean-imputed matrix, decoded either linearly
//! (matrix factorization) or with one logistic regression per question.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::logistic::LogisticDecoder;
use crate::dataset::ReactionMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub question_ids: Vec<String>,
    pub means: Vec<f64>,
    /// Two orthonormal rows of length `n_questions`.
    pub components: [Vec<f64>; 2],
    pub decoders: Vec<LogisticDecoder>,
}

pub(crate) struct Components {
    pub means: Vec<f64>,
    pub components: [Vec<f64>; 2],
    pub scores: Vec<[f64; 2]>,
}

/// Missing cells take their column mean; the top two eigenvectors of the
/// covariance become the projection. Each component is signed so that its
/// loadings sum to a non-negative value.
pub(crate) fn fit_components(train: &ReactionMatrix) -> Result<Components> {
    let n = train.n_users();
    let d = train.n_questions();
    if n == 0 || d < 2 {
        return Err(Error::input("PCA needs at least one user and two questions"));
    }
    let means = train
        .column_means()
        .into_iter()
        .enumerate()
        .map(|(j, m)| m.ok_or_else(|| Error::input(format!("column {j} has no answers"))))
        .collect::<Result<Vec<f64>>>()?;
    let centered = DMatrix::from_fn(n, d, |u, j| train.get(u, j).unwrap_or(means[j]) - means[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    if top.is_nan() || top <= 1e-12 {
        return Err(Error::Degenerate("matrix has no variance to project".into()));
    }
    let components: [Vec<f64>; 2] = [0, 1].map(|k| {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    });
    let scores = (0..n)
        .map(|u| {
            let row = centered.row(u);
            [0, 1].map(|k| row.iter().zip(&components[k]).map(|(a, b)| a * b).sum())
        })
        .collect();
    Ok(Components {
        means,
        components,
        scores,
    })
}

/// Fits the projection and one decoder per question on the present cells.
pub fn fit_pca(train: &ReactionMatrix) -> Result<PcaModel> {
    let Components {
        means,
        components,
        scores,
    } = fit_components(train)?;
    let decoders = (0..train.n_questions())
        .map(|j| {
            let (xs, ys): (Vec<[f64; 2]>, Vec<f64>) = (0..train.n_users())
                .filter_map(|u| train.get(u, j).map(|v| (scores[u], v)))
                .unzip();
            LogisticDecoder::fit(&xs, &ys)
        })
        .collect();
    Ok(PcaModel {
        question_ids: train.question_ids().to_vec(),
        means,
        components,
        decoders,
    })
}

impl PcaModel {
    pub fn n_questions(&self) -> usize {
        self.means.len()
    }

    /// Mean-imputes missing answers, centres and projects.
    pub fn embed(&self, answers: &[Option<f64>]) -> [f64; 2] {
        [0, 1].map(|k| {
            answers
                .iter()
                .zip(&self.means)
                .zip(&self.components[k])
                .map(|((a, m), c)| (a.unwrap_or(*m) - m) * c)
                .sum()
        })
    }

    /// `mean_j + x · components_j`, capped at 0 and 1.
    pub fn mf_decode(&self, x: [f64; 2], j: usize) -> f64 {
        self.mf_decode_raw(x, j).clamp(0.0, 1.0)
    }

    pub(crate) fn mf_decode_raw(&self, x: [f64; 2], j: usize) -> f64 {
        self.means[j] + x[0] * self.components[0][j] + x[1] * self.components[1][j]
    }

    pub fn lr_decode(&self, x: [f64; 2], j: usize) -> Result<f64> {
        self.decoders
            .get(j)
            .map(|d| d.predict(x))
            .ok_or_else(|| Error::input(format!("no decoder for question {j}")))
    }
}

/// Column means of the present cells.
pub fn mean_baseline(train: &ReactionMatrix) -> Result<Vec<f64>> {
    train
        .column_means()
        .into_iter()
        .enumerate()
        .map(|(j, m)| m.ok_or_else(|| Error::input(format!("question `{}` has no answers", train.question_ids()[j]))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank_two() -> ReactionMatrix {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 0.91).cos();
                (0..6)
                    .map(|j| 0.5 + 0.2 * a * (j as f64 - 2.5) / 2.5 + 0.15 * b * ((j % 2) as f64 - 0.5))
                    .collect()
            })
            .collect();
        ReactionMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn components_are_orthonormal() {
        let m = fit_pca(&rank_two()).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&m.components[0], &m.components[0]) - 1.0).abs() < 1e-10);
        assert!((dot(&m.components[1], &m.components[1]) - 1.0).abs() < 1e-10);
        assert!(dot(&m.components[0], &m.components[1]).abs() < 1e-10);
    }

    #[test]
    fn rank_two_data_reconstructs_exactly() {
        let data = rank_two();
        let m = fit_pca(&data).unwrap();
        for u in 0..data.n_users() {
            let x = m.embed(data.row(u));
            for j in 0..data.n_questions() {
                assert!((m.mf_decode(x, j) - data.get(u, j).unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn origin_and_mean_row_decode_to_means() {
        let data = rank_two();
        let m = fit_pca(&data).unwrap();
        let mean_row: Vec<Option<f64>> = m.means.iter().map(|&v| Some(v)).collect();
        let x = m.embed(&mean_row);
        assert!(x[0].abs() < 1e-12 && x[1].abs() < 1e-12);
        for j in 0..m.n_questions() {
            assert!((m.mf_decode([0.0, 0.0], j) - m.means[j]).abs() < 1e-12);
        }
        assert_eq!(
            m.mf_decode([1e6, 1e6], 0),
            if m.components[0][0] + m.components[1][0] > 0.0 {
                1.0
            } else {
                0.0
            }
        );
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        let data = ReactionMatrix::from_dense(&vec![vec![1.0, 0.0, 1.0]; 5]).unwrap();
        assert!(matches!(fit_pca(&data), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mean_baseline_uses_present_cells() {
        let m = ReactionMatrix::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec!["q".into()],
            vec![Some(1.0), Some(1.0), Some(0.0), None],
        )
        .unwrap();
        assert!((mean_baseline(&m).unwrap()[0] - 2.0 / 3.0).abs() < 1e-15);
        let empty = ReactionMatrix::new(vec!["a".into()], vec!["q".into()], vec![None]).unwrap();
        assert!(mean_baseline(&empty).is_err());
    }
}
