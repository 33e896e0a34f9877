//! Rolling trigger fractions for the soft call and soft put provisions.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::PathGrid;
use crate::terms::BondTerms;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Count closes strictly above the trigger.
    Above,
    /// Count closes strictly below the trigger.
    Below,
}

impl Direction {
    fn hit(self, close: f64, trigger: f64) -> bool {
        match self {
            Direction::Above => close > trigger,
            Direction::Below => close < trigger,
        }
    }
}

/// Fraction of the most recent `window` closes (including the current one
/// and any `warmup` closes observed before the series) beating `trigger`.
///
/// While fewer than `window` closes exist, the fraction is taken over the
/// closes available.
pub fn rolling_fraction(
    series: &[f64],
    trigger: f64,
    window: usize,
    direction: Direction,
    warmup: &[f64],
) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("empty price series".into()));
    }
    if window == 0 {
        return Err(Error::InvalidParameter("window must be at least 1".into()));
    }
    if !(trigger > 0.0) {
        return Err(Error::InvalidParameter("trigger must be positive".into()));
    }
    let mut out = vec![0.0; series.len()];
    fill_fraction(series, trigger, window, direction, warmup, &mut out);
    Ok(out)
}

fn fill_fraction(
    series: &[f64],
    trigger: f64,
    window: usize,
    direction: Direction,
    warmup: &[f64],
    out: &mut [f64],
) {
    // Only the last `window - 1` warm-up closes can ever be in view.
    let warmup = &warmup[warmup.len().saturating_sub(window - 1)..];
    let at = |k: usize| -> f64 {
        if k < warmup.len() {
            warmup[k]
        } else {
            series[k - warmup.len()]
        }
    };
    let mut count = warmup.iter().filter(|&&c| direction.hit(c, trigger)).count();
    for (t, slot) in out.iter_mut().enumerate() {
        let end = warmup.len() + t; // index of the current close
        if direction.hit(series[t], trigger) {
            count += 1;
        }
        if end >= window && direction.hit(at(end - window), trigger) {
            count -= 1;
        }
        let seen = (end + 1).min(window);
        *slot = count as f64 / seen as f64;
    }
}

/// Per-path, per-day trigger fractions aligned with a [`PathGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathSignals {
    call_frac: Vec<f64>,
    put_frac: Vec<f64>,
    width: usize,
    /// Call threshold `m_c / n_c`.
    pub call_threshold: f64,
    /// Put threshold `m_p / n_p`.
    pub put_threshold: f64,
}

impl PathSignals {
    pub fn call(&self, path: usize, day: usize) -> f64 {
        self.call_frac[path * self.width + day]
    }

    pub fn put(&self, path: usize, day: usize) -> f64 {
        self.put_frac[path * self.width + day]
    }

    pub fn call_row(&self, path: usize) -> &[f64] {
        &self.call_frac[path * self.width..(path + 1) * self.width]
    }

    pub fn put_row(&self, path: usize) -> &[f64] {
        &self.put_frac[path * self.width..(path + 1) * self.width]
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Computes `F_t` (window `n_c`, call trigger) and `Y_t` (window `n_p`, put
/// trigger) on every path. `warmup` holds observed closes strictly before
/// day 0, oldest first.
pub fn compute_signals(grid: &PathGrid, terms: &BondTerms, warmup: &[f64]) -> Result<PathSignals> {
    let triggers = terms.trigger_prices();
    let width = grid.width();
    let n = grid.n_paths() * width;
    let mut call_frac = vec![0.0; n];
    let mut put_frac = vec![0.0; n];

    let call_window = terms.call_window.length;
    let put_window = terms.put_window.length;
    let fill = |((i, call), put): ((usize, &mut [f64]), &mut [f64])| {
        let path = grid.path(i);
        fill_fraction(path, triggers.call, call_window, Direction::Above, warmup, call);
        fill_fraction(path, triggers.put, put_window, Direction::Below, warmup, put);
    };
    #[cfg(feature = "parallel")]
    call_frac
        .par_chunks_mut(width)
        .enumerate()
        .zip(put_frac.par_chunks_mut(width))
        .for_each(fill);
    #[cfg(not(feature = "parallel"))]
    call_frac
        .chunks_mut(width)
        .enumerate()
        .zip(put_frac.chunks_mut(width))
        .for_each(fill);

    Ok(PathSignals {
        call_frac,
        put_frac,
        width,
        call_threshold: terms.call_window.threshold(),
        put_threshold: terms.put_window.threshold(),
    })
}
