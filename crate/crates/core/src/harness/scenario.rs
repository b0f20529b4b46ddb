//! Fit and imputation benchmarks on sparse train and test matrices.
//!
//! Train scenarios mask the binary train set at every sparsity `u`, fit on
//! what remains and report accuracy on the kept cells (fit) and on the
//! removed ones (impute). Test scenarios fit once on the complete train
//! set, mask the Likert test set at every sparsity `v`, embed each test
//! user from the kept cells and report RMSE.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{mean_accuracy, rmse_metric};
use crate::belief::{LatentGrid, LikelihoodTable, DEFAULT_RESOLUTION};
use crate::dataset::{mask, ReactionMatrix, SPARSITY_GRID};
use crate::error::{Error, Result};
use crate::latent::{fit_ideal, fit_pca, mean_baseline, Embedder, FitSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TrainFit,
    TrainImpute,
    TestFit,
    TestImpute,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::TrainFit,
        Scenario::TrainImpute,
        Scenario::TestFit,
        Scenario::TestImpute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::TrainFit => "train_fit",
            Scenario::TrainImpute => "train_impute",
            Scenario::TestFit => "test_fit",
            Scenario::TestImpute => "test_impute",
        }
    }

    pub fn metric(self) -> Metric {
        match self {
            Scenario::TrainFit | Scenario::TrainImpute => Metric::Accuracy,
            Scenario::TestFit | Scenario::TestImpute => Metric::Rmse,
        }
    }

    fn is_train(self) -> bool {
        matches!(self, Scenario::TrainFit | Scenario::TrainImpute)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::input(format!(
                "unknown scenario `{s}` (train_fit|train_impute|test_fit|test_impute)"
            ))
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Rmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Mean,
    Ideal,
    PcaLr,
    PcaMf,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [ModelName::Mean, ModelName::Ideal, ModelName::PcaLr, ModelName::PcaMf];

    pub fn name(self) -> &'static str {
        match self {
            ModelName::Mean => "mean",
            ModelName::Ideal => "ideal",
            ModelName::PcaLr => "pca_lr",
            ModelName::PcaMf => "pca_mf",
        }
    }
}

impl FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::input(format!("unknown model `{s}` (mean|ideal|pca_lr|pca_mf)")))
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub model: ModelName,
    pub metric: Metric,
    pub sparsities: Vec<f64>,
    /// `None` where the scored cell set is empty (imputation at sparsity 0).
    pub values: Vec<Option<f64>>,
    /// Mean over the present per-sparsity values.
    pub average: Option<f64>,
}

impl ScenarioReport {
    fn new(scenario: Scenario, model: ModelName, sparsities: Vec<f64>, values: Vec<Option<f64>>) -> Self {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        let average = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        Self {
            scenario,
            model,
            metric: scenario.metric(),
            sparsities,
            values,
            average,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOptions {
    pub sparsities: Vec<f64>,
    pub seed: u64,
    pub fit: FitSettings,
    pub resolution: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            sparsities: SPARSITY_GRID.to_vec(),
            seed: 0,
            fit: FitSettings::default(),
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Likert train and test matrices, both complete.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub train: ReactionMatrix,
    pub test: ReactionMatrix,
}

pub fn run_scenario(
    scenario: Scenario,
    model: ModelName,
    data: &ScenarioData,
    opts: &ScenarioOptions,
) -> Result<ScenarioReport> {
    let (fit, impute) = if scenario.is_train() {
        evaluate_train(model, data, opts)?
    } else {
        evaluate_test(model, data, opts)?
    };
    Ok(match scenario {
        Scenario::TrainFit | Scenario::TestFit => fit,
        Scenario::TrainImpute | Scenario::TestImpute => impute,
    })
}

/// Every scenario for every listed model, sharing fits between the fit and
/// impute halves of each side.
pub fn run_all(models: &[ModelName], data: &ScenarioData, opts: &ScenarioOptions) -> Result<Vec<ScenarioReport>> {
    let mut out = Vec::new();
    for &m in models {
        let (a, b) = evaluate_train(m, data, opts)?;
        let (c, d) = evaluate_test(m, data, opts)?;
        out.extend([a, b, c, d]);
    }
    Ok(out)
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

pub(crate) fn mask_seed(seed: u64, side: u64, idx: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(side * 1000 + idx as u64)
}

fn evaluate_train(
    model: ModelName,
    data: &ScenarioData,
    opts: &ScenarioOptions,
) -> Result<(ScenarioReport, ScenarioReport)> {
    let full = data.train.binarize();
    let mut fit_values = Vec::new();
    let mut impute_values = Vec::new();
    for (i, &u) in opts.sparsities.iter().enumerate() {
        let sparse = mask(&full, u, mask_seed(opts.seed, 0, i))?;
        let predict = train_predictor(model, &sparse, opts)?;
        let score = |cells: Vec<(usize, usize)>| {
            let (p, y): (Vec<f64>, Vec<f64>) = cells
                .into_iter()
                .map(|(r, c)| (predict(r, c), full.get(r, c).unwrap_or_default()))
                .unzip();
            mean_accuracy(&p, &y)
        };
        fit_values.push(score(sparse.present_cells()));
        impute_values.push(score(full.masked_cells(&sparse)));
        log::info!(
            "{model} train u={u}: fit {} impute {}",
            show(fit_values[i]),
            show(impute_values[i])
        );
    }
    Ok((
        ScenarioReport::new(Scenario::TrainFit, model, opts.sparsities.clone(), fit_values),
        ScenarioReport::new(Scenario::TrainImpute, model, opts.sparsities.clone(), impute_values),
    ))
}

/// Predictions for the training users themselves.
fn train_predictor(
    model: ModelName,
    sparse: &ReactionMatrix,
    opts: &ScenarioOptions,
) -> Result<Box<dyn Fn(usize, usize) -> f64>> {
    Ok(match model {
        ModelName::Mean => {
            let means = mean_baseline(sparse)?;
            Box::new(move |_, c| means[c])
        }
        ModelName::Ideal => {
            let fit = fit_ideal(sparse, &opts.fit)?;
            Box::new(move |r, c| fit.model.prob_yes(c, fit.ideal_points[r]))
        }
        ModelName::PcaLr | ModelName::PcaMf => {
            let pca = fit_pca(sparse)?;
            let scores: Vec<[f64; 2]> = (0..sparse.n_users()).map(|r| pca.embed(sparse.row(r))).collect();
            if model == ModelName::PcaLr {
                Box::new(move |r, c| pca.decoders[c].predict(scores[r]))
            } else {
                Box::new(move |r, c| pca.mf_decode(scores[r], c))
            }
        }
    })
}

fn evaluate_test(
    model: ModelName,
    data: &ScenarioData,
    opts: &ScenarioOptions,
) -> Result<(ScenarioReport, ScenarioReport)> {
    if data.train.question_ids() != data.test.question_ids() {
        return Err(Error::input("train and test columns differ"));
    }
    let n_q = data.test.n_questions();
    // Fitted once on the complete train set.
    let mut mean = None;
    let mut ideal = None;
    let mut pca = None;
    match model {
        ModelName::Mean => mean = Some(mean_baseline(&data.train)?),
        ModelName::Ideal => {
            let fit = fit_ideal(&data.train.binarize(), &opts.fit)?;
            let grid = LatentGrid::new(opts.resolution)?;
            let table = LikelihoodTable::from_model(&fit.model, &grid);
            ideal = Some((fit.model, grid, table));
        }
        ModelName::PcaLr | ModelName::PcaMf => pca = Some(fit_pca(&data.train)?),
    }
    let predict_row = |row: &[Option<f64>]| -> Vec<f64> {
        match model {
            ModelName::Mean => mean.clone().expect("fitted"),
            ModelName::Ideal => {
                let (m, grid, table) = ideal.as_ref().expect("fitted");
                let x = Embedder::Ideal { grid, table }.embed(row);
                (0..n_q).map(|j| m.prob_yes(j, x)).collect()
            }
            ModelName::PcaLr => {
                let p = pca.as_ref().expect("fitted");
                let x = p.embed(row);
                (0..n_q).map(|j| p.decoders[j].predict(x)).collect()
            }
            ModelName::PcaMf => {
                let p = pca.as_ref().expect("fitted");
                let x = p.embed(row);
                (0..n_q).map(|j| p.mf_decode(x, j)).collect()
            }
        }
    };

    let mut fit_values = Vec::new();
    let mut impute_values = Vec::new();
    for (i, &v) in opts.sparsities.iter().enumerate() {
        let sparse = mask(&data.test, v, mask_seed(opts.seed, 1, i))?;
        let (mut fit_p, mut fit_y, mut imp_p, mut imp_y) = (vec![], vec![], vec![], vec![]);
        for r in 0..sparse.n_users() {
            let pred = predict_row(sparse.row(r));
            for (c, p) in pred.into_iter().enumerate() {
                let truth = data.test.get(r, c).unwrap_or_default();
                if sparse.get(r, c).is_some() {
                    fit_p.push(p);
                    fit_y.push(truth);
                } else {
                    imp_p.push(p);
                    imp_y.push(truth);
                }
            }
        }
        fit_values.push(rmse_metric(&fit_p, &fit_y).ok());
        impute_values.push(rmse_metric(&imp_p, &imp_y).ok());
        log::info!(
            "{model} test v={v}: fit {} impute {}",
            show(fit_values[i]),
            show(impute_values[i])
        );
    }
    Ok((
        ScenarioReport::new(Scenario::TestFit, model, opts.sparsities.clone(), fit_values),
        ScenarioReport::new(Scenario::TestImpute, model, opts.sparsities.clone(), impute_values),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_skip_absent_entries() {
        let r = ScenarioReport::new(
            Scenario::TrainImpute,
            ModelName::Mean,
            vec![0.0, 0.1, 0.2],
            vec![None, Some(0.6), Some(0.8)],
        );
        assert!((r.average.unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(r.metric, Metric::Accuracy);
    }

    #[test]
    fn names_parse() {
        assert_eq!("test_impute".parse::<Scenario>().unwrap(), Scenario::TestImpute);
        assert_eq!("pca_mf".parse::<ModelName>().unwrap(), ModelName::PcaMf);
        assert!("vae".parse::<ModelName>().is_err());
        assert!("fit".parse::<Scenario>().is_err());
    }
}
