//! Calibration of the constant daily rate and daily volatility.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::TRADING_DAYS_PER_YEAR;

/// Ordered daily closing prices of the underlying stock.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    days: Vec<i64>,
    closes: Vec<f64>,
}

impl PriceHistory {
    /// Builds a history from rows already in day order.
    pub fn new(days: Vec<i64>, closes: Vec<f64>) -> Result<Self> {
        if days.len() != closes.len() {
            return Err(Error::ShapeMismatch {
                expected: days.len(),
                got: closes.len(),
            });
        }
        for (&day, &value) in days.iter().zip(&closes) {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositivePrice { day, value });
            }
        }
        if let Some(w) = days.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(alloc::format!(
                "days must be strictly increasing (day {} follows {})",
                w[1],
                w[0]
            )));
        }
        Ok(Self { days, closes })
    }

    /// Builds a history from rows in any order. The flag reports whether
    /// the rows had to be re-sorted.
    pub fn from_unsorted(mut rows: Vec<(i64, f64)>) -> Result<(Self, bool)> {
        let sorted = rows.windows(2).all(|w| w[0].0 <= w[1].0);
        if !sorted {
            rows.sort_by_key(|r| r.0);
        }
        let (days, closes) = rows.into_iter().unzip();
        Ok((Self::new(days, closes)?, !sorted))
    }

    pub fn days(&self) -> &[i64] {
        &self.days
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// The most recent `n` closes (or all of them if fewer).
    pub fn tail(&self, n: usize) -> &[f64] {
        &self.closes[self.closes.len().saturating_sub(n)..]
    }
}

/// Converts an annual compounded rate into the equivalent daily rate,
/// `(1 + u)^(1/252) - 1`.
pub fn annual_to_daily_rate(annual: f64) -> Result<f64> {
    if !(annual > -1.0) || !annual.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "annual rate must exceed -1, got {annual}"
        )));
    }
    Ok(libm::expm1(libm::log1p(annual) / TRADING_DAYS_PER_YEAR))
}

/// Inverse of [`annual_to_daily_rate`].
pub fn daily_to_annual_rate(daily: f64) -> f64 {
    libm::expm1(TRADING_DAYS_PER_YEAR * libm::log1p(daily))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnKind {
    /// `(S_t - S_{t-1}) / S_{t-1}`
    #[default]
    Simple,
    /// `ln(S_t / S_{t-1})`
    Log,
}

/// Sample-standard-deviation estimator of daily volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolatilityEstimator {
    /// Number of most recent closes used.
    pub lookback: usize,
    pub returns: ReturnKind,
}

impl Default for VolatilityEstimator {
    fn default() -> Self {
        Self {
            lookback: TRADING_DAYS_PER_YEAR as usize,
            returns: ReturnKind::Simple,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolEstimate {
    pub sigma: f64,
    pub n_returns: usize,
    /// Fewer closes than the lookback were available.
    pub short_lookback: bool,
}

impl VolatilityEstimator {
    pub fn estimate(&self, history: &PriceHistory) -> Result<VolEstimate> {
        self.estimate_closes(history.tail(self.lookback))
            .map(|(sigma, n_returns)| VolEstimate {
                sigma,
                n_returns,
                short_lookback: n_returns + 1 < self.lookback,
            })
    }

    /// Estimates from raw closes; they must already be validated positive.
    pub fn estimate_closes(&self, closes: &[f64]) -> Result<(f64, usize)> {
        if closes.len() < 3 {
            return Err(Error::InsufficientData {
                needed: 3,
                got: closes.len(),
            });
        }
        let returns: Vec<f64> = closes
            .windows(2)
            .map(|w| match self.returns {
                ReturnKind::Simple => (w[1] - w[0]) / w[0],
                ReturnKind::Log => libm::log(w[1] / w[0]),
            })
            .collect();
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let ss: f64 = returns.iter().map(|r| (r - mean) * (r - mean)).sum();
        Ok((libm::sqrt(ss / (n - 1.0)), returns.len()))
    }
}

/// Daily historical volatility over the most recent year of closes using
/// simple returns.
pub fn historical_volatility(history: &PriceHistory) -> Result<f64> {
    VolatilityEstimator::default()
        .estimate(history)
        .map(|e| e.sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn hist(closes: &[f64]) -> PriceHistory {
        PriceHistory::new((0..closes.len() as i64).collect(), closes.to_vec()).unwrap()
    }

    /// Two-pass variance computed independently of the estimator.
    fn oracle_sigma(closes: &[f64]) -> f64 {
        let mut rets = Vec::new();
        for i in 1..closes.len() {
            rets.push(closes[i] / closes[i - 1] - 1.0);
        }
        let mut mean = 0.0;
        for r in &rets {
            mean += r;
        }
        mean /= rets.len() as f64;
        let mut var = 0.0;
        for r in &rets {
            var += (r - mean).powi(2);
        }
        (var / (rets.len() - 1) as f64).sqrt()
    }

    #[test]
    fn daily_rate_examples() {
        assert_eq!(annual_to_daily_rate(0.0).unwrap(), 0.0);
        // Closed form evaluated independently in double precision.
        let r = annual_to_daily_rate(0.025).unwrap();
        assert!((r - 9.799135873786863e-05).abs() < 1e-17);
        let r = annual_to_daily_rate(-0.5).unwrap();
        assert!((r - (-0.0027468046595044847)).abs() < 1e-16);
        assert!(annual_to_daily_rate(-1.0).is_err());
        assert!(annual_to_daily_rate(-2.0).is_err());
    }

    #[test]
    fn volatility_examples() {
        assert_eq!(historical_volatility(&hist(&[100.0; 4])).unwrap(), 0.0);
        let s = historical_volatility(&hist(&[100.0, 101.0, 99.99])).unwrap();
        assert!((s - 0.014142135623730951).abs() < 1e-12);
    }

    #[test]
    fn insufficient_data_distinct_from_bad_prices() {
        assert_eq!(
            historical_volatility(&hist(&[100.0, 101.0])),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        );
        assert_eq!(
            PriceHistory::new(vec![1, 2, 3], vec![1.0, 2.0, -1.0]),
            Err(Error::NonPositivePrice { day: 3, value: -1.0 })
        );
    }

    #[test]
    fn lookback_uses_most_recent_closes() {
        let closes: Vec<f64> = (0..400).map(|i| 100.0 + (i as f64 * 0.7).sin()).collect();
        let e = VolatilityEstimator::default().estimate(&hist(&closes)).unwrap();
        assert_eq!(e.n_returns, 251);
        assert!(!e.short_lookback);
        assert!((e.sigma - oracle_sigma(&closes[148..])).abs() < 1e-14);

        let e = VolatilityEstimator::default()
            .estimate(&hist(&closes[..10]))
            .unwrap();
        assert!(e.short_lookback);
    }

    #[test]
    fn log_returns_mode() {
        let est = VolatilityEstimator {
            returns: ReturnKind::Log,
            ..Default::default()
        };
        let (s, _) = est.estimate_closes(&[1.0, core::f64::consts::E, 1.0]).unwrap();
        // log returns (+1, -1): sample std sqrt(2)
        assert!((s - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn unsorted_rows_are_resorted() {
        let (h, resorted) = PriceHistory::from_unsorted(vec![(2, 3.0), (1, 2.0), (3, 4.0)]).unwrap();
        assert!(resorted);
        assert_eq!(h.days(), &[1, 2, 3]);
        assert_eq!(h.closes(), &[2.0, 3.0, 4.0]);
        assert!(PriceHistory::from_unsorted(vec![(1, 2.0), (1, 3.0), (2, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn rate_round_trip(u in -0.99f64..5.0) {
            let r = annual_to_daily_rate(u).unwrap();
            let back = daily_to_annual_rate(r);
            prop_assert!((back - u).abs() <= 1e-12 * u.abs().max(1e-3));
        }

        #[test]
        fn rate_is_increasing(a in -0.99f64..5.0, b in -0.99f64..5.0) {
            prop_assume!(a < b);
            prop_assert!(annual_to_daily_rate(a).unwrap() < annual_to_daily_rate(b).unwrap());
        }

        #[test]
        fn volatility_matches_two_pass_oracle(closes in prop::collection::vec(1.0f64..1000.0, 3..300)) {
            let s = historical_volatility(&hist(&closes)).unwrap();
            let o = oracle_sigma(&closes[closes.len().saturating_sub(252)..]);
            prop_assert!((s - o).abs() <= 1e-12 * o.max(1e-300) + 1e-15);
        }

        #[test]
        fn volatility_is_scale_free(closes in prop::collection::vec(1.0f64..1000.0, 3..100), k in -4i32..4) {
            let lambda = 2f64.powi(k);
            let scaled: Vec<f64> = closes.iter().map(|c| c * lambda).collect();
            let a = historical_volatility(&hist(&closes)).unwrap();
            let b = historical_volatility(&hist(&scaled)).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a >= 0.0);
        }
    }
}
