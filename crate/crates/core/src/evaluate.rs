//! Model-vs-market pricing error metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative pricing errors, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub mre: f64,
    pub mare: f64,
    pub rmse: f64,
    pub n_obs: usize,
    /// `(model - market) / market` per observation, as fractions.
    pub per_day: Vec<f64>,
}

/// Mean relative, mean absolute relative and root-mean-square relative
/// error of `model` against `market`.
pub fn pricing_errors(model: &[f64], market: &[f64]) -> Result<ErrorReport> {
    if model.len() != market.len() {
        return Err(Error::ShapeMismatch {
            expected: market.len(),
            got: model.len(),
        });
    }
    if market.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(day) = market.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::NonPositivePrice {
            day: day as i64,
            value: market[day],
        });
    }
    let per_day: Vec<f64> = model.iter().zip(market).map(|(m, k)| (m - k) / k).collect();
    let n = per_day.len() as f64;
    let mre = per_day.iter().sum::<f64>() / n;
    let mare = per_day.iter().map(|e| e.abs()).sum::<f64>() / n;
    let rmse = libm::sqrt(per_day.iter().map(|e| e * e).sum::<f64>() / n);
    Ok(ErrorReport {
        mre: 100.0 * mre,
        mare: 100.0 * mare,
        rmse: 100.0 * rmse,
        n_obs: per_day.len(),
        per_day,
    })
}

/// Column-wise arithmetic mean of several reports (`n_obs` summed).
pub fn mean_report(reports: &[ErrorReport]) -> Option<ErrorReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    Some(ErrorReport {
        mre: reports.iter().map(|r| r.mre).sum::<f64>() / n,
        mare: reports.iter().map(|r| r.mare).sum::<f64>() / n,
        rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / n,
        n_obs: reports.iter().map(|r| r.n_obs).sum(),
        per_day: Vec::new(),
    })
}
