//! Evaluation metrics.

use crate::error::TrainError;

/// Exact-match fraction over aligned categorical predictions.
pub fn accuracy(preds: &[usize], truth: &[usize]) -> Result<f64, TrainError> {
    if preds.is_empty() || preds.len() != truth.len() {
        return Err(TrainError::EmptyEvaluationSet);
    }
    let hits = preds.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Mean absolute error over aligned numeric predictions (normalized space).
pub fn mae(preds: &[f64], truth: &[f64]) -> Result<f64, TrainError> {
    if preds.is_empty() || preds.len() != truth.len() {
        return Err(TrainError::EmptyEvaluationSet);
    }
    let total: f64 = preds.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / preds.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}
