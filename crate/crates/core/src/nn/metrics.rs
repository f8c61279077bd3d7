use ndarray::Array2;
use serde::Serialize;

use super::{MlpModel, NnError, NormStats};

/// Mean squared residual.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64, NnError> {
    if pred.len() != target.len() {
        return Err(NnError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(NnError::EmptySplit("batch"));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    /// Percent; targets with `|Q| < 1e-9` are skipped.
    pub mape: f64,
}

impl Metrics {
    pub fn from_predictions(pred: &[f64], target: &[f64]) -> Result<Self, NnError> {
        if pred.len() != target.len() {
            return Err(NnError::LengthMismatch(pred.len(), target.len()));
        }
        if pred.is_empty() {
            return Err(NnError::EmptyTestSet);
        }
        let n = pred.len() as f64;
        let mut abs = 0.0;
        let mut sq = 0.0;
        let mut pct = 0.0;
        let mut n_pct = 0usize;
        for (p, t) in pred.iter().zip(target) {
            let e = p - t;
            abs += e.abs();
            sq += e * e;
            if t.abs() >= 1e-9 {
                pct += (e / t).abs();
                n_pct += 1;
            }
        }
        let mean_t = target.iter().sum::<f64>() / n;
        let ss_tot: f64 = target.iter().map(|t| (t - mean_t) * (t - mean_t)).sum();
        let mse = sq / n;
        let r2 = if ss_tot > 0.0 {
            1.0 - sq / ss_tot
        } else if sq == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        Ok(Self {
            mae: abs / n,
            mse,
            rmse: mse.sqrt(),
            r2,
            mape: if n_pct > 0 { 100.0 * pct / n_pct as f64 } else { 0.0 },
        })
    }
}

/// Metrics of `model` on raw feature rows.
pub fn evaluate(model: &MlpModel, stats: &NormStats, rows: &[[f64; 6]], targets: &[f64]) -> Result<Metrics, NnError> {
    if rows.is_empty() {
        return Err(NnError::EmptyTestSet);
    }
    let x = normalized_matrix(stats, rows);
    let pred = model.predict_normalized(x.view());
    Metrics::from_predictions(pred.as_slice().unwrap(), targets)
}

pub(crate) fn normalized_matrix(stats: &NormStats, rows: &[[f64; 6]]) -> Array2<f64> {
    let mut x = Array2::zeros((rows.len(), 6));
    for (i, r) in rows.iter().enumerate() {
        for j in 0..6 {
            x[[i, j]] = (r[j] - stats.mu[j]) / stats.sigma[j];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(mse_loss(&[4.0], &[4.0]).unwrap(), 0.0);
        assert!(matches!(mse_loss(&[1.0], &[1.0, 2.0]), Err(NnError::LengthMismatch(1, 2))));
    }

    #[test]
    fn offset_by_one() {
        let m = Metrics::from_predictions(&[10.0, 20.0], &[9.0, 19.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse), (1.0, 1.0, 1.0));
        let want = 100.0 * (1.0 / 9.0 + 1.0 / 19.0) / 2.0;
        assert!((m.mape - want).abs() < 1e-12);
        assert!((m.mape - 8.19).abs() < 0.01);
    }

    #[test]
    fn perfect_prediction() {
        let m = Metrics::from_predictions(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.rmse, m.r2, m.mape), (0.0, 0.0, 0.0, 1.0, 0.0));
        assert!(matches!(Metrics::from_predictions(&[], &[]), Err(NnError::EmptyTestSet)));
    }
}
