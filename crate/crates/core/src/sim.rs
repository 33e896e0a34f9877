//! Risk-neutral GBM paths on a daily grid.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{DrawStream, SubStream, MAX_PATH_INDEX};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmParams {
    pub s0: f64,
    /// Daily risk-free rate.
    pub r: f64,
    /// Daily dividend yield.
    pub q: f64,
    /// Daily volatility.
    pub sigma: f64,
    pub horizon_days: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl GbmParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return bad("s0 must be positive and finite");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be non-negative and finite");
        }
        if !self.r.is_finite() || !self.q.is_finite() {
            return bad("r and q must be finite");
        }
        if self.horizon_days == 0 {
            return bad("horizon_days must be at least 1");
        }
        if self.n_paths == 0 || self.n_paths as u64 > MAX_PATH_INDEX {
            return bad("n_paths out of range");
        }
        Ok(())
    }
}

/// Drift convention of the daily log increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Drift {
    /// `r - q - sigma^2 / 2`, the martingale-preserving choice.
    #[default]
    Ito,
    /// `r - q - sigma^2`, kept for comparison with published runs.
    FullVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub drift: Drift,
    /// Pair path `2k + 1` with the negated increments of path `2k`.
    pub antithetic: bool,
    /// Upper bound on `n_paths * (horizon_days + 1)`.
    pub max_cells: u128,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            drift: Drift::Ito,
            antithetic: false,
            max_cells: 100_000_000,
        }
    }
}

/// Simulated prices, row-major with one row of `horizon_days + 1` closes
/// per path. Column 0 is `s0` on every path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    prices: Vec<f64>,
    params: GbmParams,
}

impl PathGrid {
    /// Wraps externally produced prices. Rows must have `horizon_days + 1`
    /// strictly positive entries starting at `s0`.
    pub fn from_rows(params: GbmParams, prices: Vec<f64>) -> Result<Self> {
        params.check()?;
        let width = params.horizon_days + 1;
        if prices.len() != params.n_paths * width {
            return Err(Error::ShapeMismatch {
                expected: params.n_paths * width,
                got: prices.len(),
            });
        }
        if prices.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter("grid prices must be positive".into()));
        }
        if prices.chunks(width).any(|row| row[0] != params.s0) {
            return Err(Error::InvalidParameter("every path must start at s0".into()));
        }
        Ok(Self { prices, params })
    }

    pub fn params(&self) -> &GbmParams {
        &self.params
    }

    pub fn n_paths(&self) -> usize {
        self.params.n_paths
    }

    pub fn horizon(&self) -> usize {
        self.params.horizon_days
    }

    pub fn width(&self) -> usize {
        self.params.horizon_days + 1
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.prices[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> core::slice::Chunks<'_, f64> {
        self.prices.chunks(self.width())
    }

    pub fn price(&self, path: usize, day: usize) -> f64 {
        self.prices[path * self.width() + day]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }
}

/// Simulates `n_paths` daily GBM paths.
///
/// Increments for `(path, day)` come from the counter-addressed stream, so
/// the grid is bit-identical for a given seed whatever the thread count.
pub fn simulate(params: &GbmParams, opts: &SimOptions) -> Result<PathGrid> {
    params.check()?;
    let width = params.horizon_days + 1;
    let cells = params.n_paths as u128 * width as u128;
    if cells > opts.max_cells {
        return Err(Error::Capacity {
            requested: cells,
            limit: opts.max_cells,
        });
    }
    let variance_term = match opts.drift {
        Drift::Ito => 0.5 * params.sigma * params.sigma,
        Drift::FullVariance => params.sigma * params.sigma,
    };
    let drift = params.r - params.q - variance_term;
    let mut prices = vec![0.0; params.n_paths * width];

    let fill = |(i, row): (usize, &mut [f64])| {
        let (source, sign) = if opts.antithetic {
            (i / 2, if i % 2 == 0 { 1.0 } else { -1.0 })
        } else {
            (i, 1.0)
        };
        let mut stream = DrawStream::new(params.seed, SubStream::Diffusion, source as u64);
        stream.seek(1);
        row[0] = params.s0;
        let mut log_level = 0.0;
        for cell in row.iter_mut().skip(1) {
            log_level += drift + params.sigma * sign * stream.next_normal();
            *cell = params.s0 * libm::exp(log_level);
        }
    };
    #[cfg(feature = "parallel")]
    prices.par_chunks_mut(width).enumerate().for_each(fill);
    #[cfg(not(feature = "parallel"))]
    prices.chunks_mut(width).enumerate().for_each(fill);

    debug_assert!(prices.iter().all(|p| *p > 0.0));
    Ok(PathGrid {
        prices,
        params: *params,
    })
}
