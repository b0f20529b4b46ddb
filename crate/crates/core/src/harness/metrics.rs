use crate::error::{Error, Result};

/// 1 when the prediction lands on the right side of 0.5, else 0.
/// A prediction of exactly 0.5 counts as wrong.
pub fn accuracy_metric(p: f64, y: f64) -> f64 {
    if (p - y).abs() >= 0.5 {
        0.0
    } else {
        1.0
    }
}

pub fn rmse_metric(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::input("predictions and truths differ in length"));
    }
    if predictions.is_empty() {
        return Err(Error::input("RMSE over an empty cell set"));
    }
    let sse: f64 = predictions.iter().zip(truths).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

pub fn mean_accuracy(predictions: &[f64], truths: &[f64]) -> Option<f64> {
    (!predictions.is_empty()).then(|| {
        predictions
            .iter()
            .zip(truths)
            .map(|(p, y)| accuracy_metric(*p, *y))
            .sum::<f64>()
            / predictions.len() as f64
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pearson correlation; used on rank vectors it is Spearman's rho.
/// Constant inputs have no defined correlation and yield `None`.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}
