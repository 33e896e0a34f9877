//! Convertible bond valuation by least-squares Monte Carlo.
//!
//! The crate values convertible bonds carrying soft call, soft put and
//! probabilistic conversion-price reset clauses. Stock paths are simulated
//! under risk-neutral geometric Brownian motion on a daily grid, rolling
//! trigger fractions are derived per path, and the holder's exercise policy
//! is found by backward induction with a least-squares continuation
//! regression (optionally fitted separately per stock-price band).
//!
//! Around the pricer sit the pieces needed to use it as a trading signal:
//! rate and volatility calibration ([`mktdata`]), model-vs-market error
//! metrics ([`evaluate`]) and a daily-rebalanced top-k backtest
//! ([`backtest`]).
//!
//! The crate is `no_std` with `alloc`. Enabling the `parallel` feature pulls
//! in `std` and rayon; results are bit-identical with and without it.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod backtest;
pub mod error;
pub mod evaluate;
mod linalg;
pub mod mktdata;
pub mod pricer;
pub mod regress;
pub mod rng;
pub mod signal;
pub mod sim;
pub mod terms;

pub use error::{Error, Result};

/// Trading days per calendar year.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
