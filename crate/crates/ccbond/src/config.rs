//! Run configuration: a TOML file whose top-level keys can be overridden
//! from the command line.

use std::path::{Path, PathBuf};

use ccbond_core::pricer::{Continuation, PricingOptions, MIN_PATHS};
use ccbond_core::regress::{BasisSubset, FitMode};
use ccbond_core::sim::{Drift, SimOptions};
use serde::Deserialize;

use crate::error::{AppError, AppResult};
use crate::formats::read_toml;

pub const DEFAULT_PATHS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Unified,
    Banded,
}

impl Mode {
    pub fn fit_mode(self) -> FitMode {
        match self {
            Mode::Unified => FitMode::Unified,
            Mode::Banded => FitMode::Banded,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Unified => "unified",
            Mode::Banded => "banded",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub pricing: PricingSection,
    pub price: Option<PriceSection>,
    pub evaluate: Option<EvaluateSection>,
    pub backtest: Option<BacktestSection>,
    pub simulate: Option<SimulateSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    #[default]
    Full,
    WithoutPut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationChoice {
    #[default]
    Realized,
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftChoice {
    #[default]
    Ito,
    FullVariance,
}

/// Model switches shared by `price` and `evaluate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingSection {
    pub adjust: bool,
    /// Replaces the term sheet's reset probability.
    pub adjust_probability: Option<f64>,
    pub basis: BasisChoice,
    pub intercept: bool,
    pub continuation: ContinuationChoice,
    pub coupons: bool,
    pub min_band_count: usize,
    pub drift: DriftChoice,
    pub antithetic: bool,
    pub record_coefficients: bool,
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            adjust: true,
            adjust_probability: None,
            basis: BasisChoice::Full,
            intercept: false,
            continuation: ContinuationChoice::Realized,
            coupons: false,
            min_band_count: PricingOptions::default().min_band_count,
            drift: DriftChoice::Ito,
            antithetic: false,
            record_coefficients: false,
        }
    }
}

impl PricingSection {
    pub fn options(&self, mode: Mode) -> PricingOptions {
        PricingOptions {
            mode: mode.fit_mode(),
            adjust_enabled: self.adjust,
            basis: match self.basis {
                BasisChoice::Full => BasisSubset::Full,
                BasisChoice::WithoutPut => BasisSubset::WithoutPut,
            },
            intercept: self.intercept,
            continuation: match self.continuation {
                ContinuationChoice::Realized => Continuation::Realized,
                ContinuationChoice::Fitted => Continuation::Fitted,
            },
            include_coupons: self.coupons,
            min_band_count: self.min_band_count,
            record_coefficients: self.record_coefficients,
            sim: self.sim_options(),
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            drift: match self.drift {
                DriftChoice::Ito => Drift::Ito,
                DriftChoice::FullVariance => Drift::FullVariance,
            },
            antithetic: self.antithetic,
            ..SimOptions::default()
        }
    }
}

/// Market parameters. `sigma` is daily; without it volatility is estimated
/// from `history`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub terms: PathBuf,
    pub s0: Option<f64>,
    pub annual_rate: f64,
    pub sigma: Option<f64>,
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub annual_rate: f64,
    pub sigma: Option<f64>,
    pub start_day: Option<i64>,
    pub end_day: Option<i64>,
    /// Also price in banded mode, filling `model_price_banded` in the panel.
    #[serde(default)]
    pub both_modes: bool,
    pub bonds: Vec<BondEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondEntry {
    pub id: String,
    pub terms: PathBuf,
    pub quotes: PathBuf,
    pub history: Option<PathBuf>,
    /// Precomputed model prices (`day,model_price`) used instead of pricing.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub panel: PathBuf,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_cost")]
    pub cost: f64,
}

fn default_k() -> usize {
    10
}

fn default_cost() -> f64 {
    0.001
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub s0: f64,
    pub annual_rate: f64,
    pub sigma: f64,
    #[serde(default)]
    pub dividend_yield: f64,
    pub horizon_days: usize,
}

/// Command-line values that replace the file's top-level keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings common to every command.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub paths: usize,
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub config: RunConfig,
}

impl RunConfig {
    /// Loads a config file; relative input paths resolve against its directory.
    pub fn load(path: &Path) -> AppResult<Self> {
        let mut cfg: RunConfig = read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(o) = &mut self.out {
            fix(o);
        }
        if let Some(p) = &mut self.price {
            fix(&mut p.terms);
            if let Some(h) = &mut p.history {
                fix(h);
            }
        }
        if let Some(e) = &mut self.evaluate {
            for b in &mut e.bonds {
                fix(&mut b.terms);
                fix(&mut b.quotes);
                for p in [&mut b.history, &mut b.model].into_iter().flatten() {
                    fix(p);
                }
            }
        }
        if let Some(b) = &mut self.backtest {
            fix(&mut b.panel);
        }
    }

    pub fn resolve(self, o: Overrides) -> AppResult<Settings> {
        let paths = o.paths.or(self.paths).unwrap_or(DEFAULT_PATHS);
        if paths < MIN_PATHS {
            return Err(AppError::Invalid(format!("M must be ≥ {MIN_PATHS}")));
        }
        if let Some(p) = self.pricing.adjust_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(AppError::Invalid("adjust_probability must lie in [0, 1]".into()));
            }
        }
        Ok(Settings {
            seed: o.seed.or(self.seed).unwrap_or(0),
            paths,
            mode: o.mode.or(self.mode).unwrap_or_default(),
            out: o.out.or_else(|| self.out.clone()),
            config: self,
        })
    }
}
