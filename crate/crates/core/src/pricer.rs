//! Backward-induction valuation of a convertible bond.
//!
//! Starting from the maturity payoff `max(m S_T, B)`, each exercise day the
//! discounted next-day values are regressed on the path states and every
//! path picks the holder-optimal action:
//!
//! | condition                    | value              | action                    |
//! |------------------------------|--------------------|---------------------------|
//! | `F >= p_F`, `K >= m S`       | `K`                | forced redemption         |
//! | `F >= p_F`, `K < m S`        | `m S`              | forced conversion         |
//! | `F < p_F`                    | `max(m S, ŷ, P*1{Y >= p_Y})` | conversion / continuation / putback |
//!
//! When the put condition is fully met (`Y = 1`) the issuer resets the
//! conversion price with probability `p`, to the larger of the 20-day mean
//! close and the latest close; the holder then compares conversion at the
//! new ratio with continuation and putback.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regress::{self, BandEdges, BasisSubset, CoefVector, FitConfig, FitMode, Predictor, State};
use crate::rng::{uniform_at, SubStream};
use crate::signal::{compute_signals, PathSignals};
use crate::sim::{simulate, GbmParams, PathGrid, SimOptions};
use crate::terms::BondTerms;

/// Closes averaged when resetting the conversion price.
pub const ADJUST_LOOKBACK: usize = 20;

/// Fewest paths accepted by [`price`].
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    ForcedRedemption,
    ForcedConversion,
    Putback,
    VoluntaryConversion,
    Continuation,
    RedemptionAtMaturity,
    ConversionAtMaturity,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::ForcedRedemption => "forced_redemption",
            Action::ForcedConversion => "forced_conversion",
            Action::Putback => "putback",
            Action::VoluntaryConversion => "voluntary_conversion",
            Action::Continuation => "continuation",
            Action::RedemptionAtMaturity => "redemption_at_maturity",
            Action::ConversionAtMaturity => "conversion_at_maturity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub value: f64,
    pub action: Action,
}

/// Maturity payoff: the larger of conversion value and redemption price.
pub fn terminal_value(stock: f64, ratio: f64, redemption: f64) -> Decision {
    let cv = ratio * stock;
    if cv > redemption {
        Decision {
            value: cv,
            action: Action::ConversionAtMaturity,
        }
    } else {
        Decision {
            value: redemption,
            action: Action::RedemptionAtMaturity,
        }
    }
}

/// Holder's choice on exercise day `day` given the regression estimate
/// `continuation`. Equal values resolve to continuation, then putback, then
/// conversion.
pub fn decide(terms: &BondTerms, day: usize, state: State, continuation: f64) -> Decision {
    decide_with_ratio(terms, day, state, continuation, terms.conversion_ratio())
}

fn decide_with_ratio(
    terms: &BondTerms,
    day: usize,
    state: State,
    continuation: f64,
    ratio: f64,
) -> Decision {
    let cv = ratio * state.s;
    if state.f >= terms.call_window.threshold() {
        return if cv > terms.call_price {
            Decision {
                value: cv,
                action: Action::ForcedConversion,
            }
        } else {
            Decision {
                value: terms.call_price,
                action: Action::ForcedRedemption,
            }
        };
    }
    holder_choice(terms, day, state, continuation, cv)
}

fn holder_choice(terms: &BondTerms, day: usize, state: State, continuation: f64, cv: f64) -> Decision {
    let mut best = Decision {
        value: continuation,
        action: Action::Continuation,
    };
    if terms.put_open(day) && state.y >= terms.put_window.threshold() && terms.put_price > best.value {
        best = Decision {
            value: terms.put_price,
            action: Action::Putback,
        };
    }
    if cv > best.value {
        best = Decision {
            value: cv,
            action: Action::VoluntaryConversion,
        };
    }
    best
}

/// Outcome of a day on which a conversion-price reset may happen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustOutcome {
    /// The reset conversion price, if the reset happened.
    pub new_conversion_price: Option<f64>,
    pub decision: Decision,
}

/// Conversion price after a downward reset: the larger of the mean of the
/// last [`ADJUST_LOOKBACK`] closes and the latest close. `recent` ends with
/// the current close.
pub fn reset_conversion_price(recent: &[f64]) -> f64 {
    let window = &recent[recent.len().saturating_sub(ADJUST_LOOKBACK)..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    mean.max(*window.last().expect("at least one close"))
}

/// Decision on a day with `Y = 1`. With probability `adjust_probability`
/// (`draw < p`) the conversion price resets downward before the holder
/// chooses; otherwise [`decide`] applies unchanged. A reset that would not
/// lower the conversion price is not applied.
pub fn downward_adjust(
    terms: &BondTerms,
    day: usize,
    state: State,
    continuation: f64,
    recent: &[f64],
    draw: f64,
) -> AdjustOutcome {
    let no_reset = AdjustOutcome {
        new_conversion_price: None,
        decision: decide(terms, day, state, continuation),
    };
    if draw >= terms.adjust_probability || recent.is_empty() || state.f >= terms.call_window.threshold() {
        return no_reset;
    }
    let reset = reset_conversion_price(recent);
    if reset >= terms.conversion_price {
        return no_reset;
    }
    let ratio = terms.face_value / reset;
    AdjustOutcome {
        new_conversion_price: Some(reset),
        decision: holder_choice(terms, day, state, continuation, ratio * state.s),
    }
}

/// Which value a continuing path carries back to the previous day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Continuation {
    /// The realised discounted value `e^{-r} V_{t+1}`; the regression only
    /// steers decisions.
    #[default]
    Realized,
    /// The regression estimate itself.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingOptions {
    pub mode: FitMode,
    pub adjust_enabled: bool,
    pub basis: BasisSubset,
    pub intercept: bool,
    pub continuation: Continuation,
    /// Add scheduled coupons (strictly before maturity) to continuing paths.
    pub include_coupons: bool,
    pub min_band_count: usize,
    pub record_coefficients: bool,
    pub sim: SimOptions,
}

impl Default for PricingOptions {
    fn default() -> Self {
        Self {
            mode: FitMode::Unified,
            adjust_enabled: true,
            basis: BasisSubset::Full,
            intercept: false,
            continuation: Continuation::Realized,
            include_coupons: false,
            min_band_count: 3 * regress::BASIS_LEN,
            record_coefficients: false,
            sim: SimOptions::default(),
        }
    }
}

/// Market state at the valuation date.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInputs {
    pub s0: f64,
    /// Daily risk-free rate.
    pub rate: f64,
    /// Daily volatility.
    pub sigma: f64,
    /// Observed closes before day 0, oldest first, used to fill trigger
    /// windows and reset averages.
    pub warmup: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionCounts {
    pub forced_redemption: usize,
    pub forced_conversion: usize,
    pub putback: usize,
    pub voluntary_conversion: usize,
    pub redemption_at_maturity: usize,
    pub conversion_at_maturity: usize,
}

impl ActionCounts {
    fn add(&mut self, a: Action) {
        match a {
            Action::ForcedRedemption => self.forced_redemption += 1,
            Action::ForcedConversion => self.forced_conversion += 1,
            Action::Putback => self.putback += 1,
            Action::VoluntaryConversion => self.voluntary_conversion += 1,
            Action::RedemptionAtMaturity => self.redemption_at_maturity += 1,
            Action::ConversionAtMaturity => self.conversion_at_maturity += 1,
            Action::Continuation => unreachable!("continuation is never terminal"),
        }
    }

    pub fn total(&self) -> usize {
        self.forced_redemption
            + self.forced_conversion
            + self.putback
            + self.voluntary_conversion
            + self.redemption_at_maturity
            + self.conversion_at_maturity
    }

    pub fn entries(&self) -> [(&'static str, usize); 6] {
        [
            ("forced_redemption", self.forced_redemption),
            ("forced_conversion", self.forced_conversion),
            ("putback", self.putback),
            ("voluntary_conversion", self.voluntary_conversion),
            ("redemption_at_maturity", self.redemption_at_maturity),
            ("conversion_at_maturity", self.conversion_at_maturity),
        ]
    }
}

/// Regression coefficients used on one day; `band` is `None` for a pooled
/// fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefRecord {
    pub day: usize,
    pub band: Option<usize>,
    pub fallback: bool,
    pub coef: CoefVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Paths whose current stopping decision is an exercise on each day.
    pub exercises_by_day: Vec<usize>,
    /// Conversion-price resets applied, summed over paths and days.
    pub adjustments: usize,
    pub coefficients: Vec<CoefRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Action at each path's stopping day.
    pub action_counts: ActionCounts,
    pub diagnostics: Diagnostics,
}

/// Prices a bond by least-squares Monte Carlo.
pub fn price(
    terms: &BondTerms,
    market: &MarketInputs,
    n_paths: usize,
    seed: u64,
    opts: &PricingOptions,
) -> Result<PricingResult> {
    terms.check()?;
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidParameter(alloc::format!("M must be ≥ {MIN_PATHS}")));
    }
    if !market.rate.is_finite() {
        return Err(Error::InvalidParameter("rate must be finite".into()));
    }
    if market.warmup.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("warm-up closes must be positive".into()));
    }
    let params = GbmParams {
        s0: market.s0,
        r: market.rate,
        q: terms.dividend_yield,
        sigma: market.sigma,
        horizon_days: terms.maturity_days,
        n_paths,
        seed,
    };
    let grid = simulate(&params, &opts.sim)?;
    let signals = compute_signals(&grid, terms, &market.warmup)?;
    price_on_grid(terms, &grid, &signals, market.rate, &market.warmup, seed, opts)
}

/// Backward induction over an existing grid and its signals.
pub fn price_on_grid(
    terms: &BondTerms,
    grid: &PathGrid,
    signals: &PathSignals,
    rate: f64,
    warmup: &[f64],
    seed: u64,
    opts: &PricingOptions,
) -> Result<PricingResult> {
    terms.check()?;
    let horizon = terms.maturity_days;
    if grid.horizon() != horizon || signals.width() != grid.width() {
        return Err(Error::ShapeMismatch {
            expected: horizon + 1,
            got: grid.width(),
        });
    }
    let m = grid.n_paths();
    let ratio = terms.conversion_ratio();
    let disc = libm::exp(-rate);
    let triggers = terms.trigger_prices();
    let fit_cfg = FitConfig {
        mode: opts.mode,
        basis: opts.basis,
        intercept: opts.intercept,
        min_band_count: opts.min_band_count,
        scale: if terms.conversion_price.is_finite() {
            terms.conversion_price
        } else {
            1.0
        },
        edges: match opts.mode {
            FitMode::Unified => None,
            FitMode::Banded => {
                let e = BandEdges {
                    put: triggers.put,
                    conversion: terms.conversion_price,
                    call: triggers.call,
                };
                e.check()?;
                Some(e)
            }
        },
    };
    let adjust = opts.adjust_enabled && terms.adjust_probability > 0.0;

    let mut values: Vec<f64> = Vec::with_capacity(m);
    let mut actions: Vec<Action> = Vec::with_capacity(m);
    for i in 0..m {
        let d = terminal_value(grid.price(i, horizon), ratio, terms.redemption_price);
        values.push(d.value);
        actions.push(d.action);
    }

    let mut diag = Diagnostics {
        exercises_by_day: vec![0; horizon + 1],
        ..Default::default()
    };
    diag.exercises_by_day[horizon] = m;
    let mut states: Vec<State> = vec![State::new(0.0, 0.0, 0.0); m];
    let mut discounted: Vec<f64> = vec![0.0; m];
    // (exercised today, conversion price reset today) per path
    let mut events: Vec<(bool, bool)> = vec![(false, false); m];

    for t in (0..horizon).rev() {
        for (y, v) in discounted.iter_mut().zip(&values) {
            *y = disc * v;
        }
        let coupon = if opts.include_coupons {
            terms.coupons.iter().filter(|c| c.day == t).map(|c| c.amount).sum()
        } else {
            0.0
        };

        if !terms.conversion_open(t) {
            for (v, y) in values.iter_mut().zip(&discounted) {
                *v = y + coupon;
            }
            continue;
        }

        for (i, st) in states.iter_mut().enumerate() {
            *st = State::new(grid.price(i, t), signals.call(i, t), signals.put(i, t));
        }
        let predictor = regress::fit(&states, &discounted, &fit_cfg)?;
        if opts.record_coefficients {
            record(&mut diag.coefficients, t, &predictor);
        }

        let step = |i: usize, value: &mut f64, action: &mut Action, ev: &mut (bool, bool)| {
            let st = states[i];
            let y_hat = predictor.predict(st);
            let (d, reset) = if adjust && st.y >= 1.0 {
                let draw = uniform_at(seed, SubStream::Adjustment, i as u64, t as u64);
                let recent = recent_closes(grid.path(i), t, warmup);
                let o = downward_adjust(terms, t, st, y_hat, &recent, draw);
                (o.decision, o.new_conversion_price.is_some())
            } else {
                (decide(terms, t, st, y_hat), false)
            };
            *ev = (d.action != Action::Continuation, reset);
            if d.action == Action::Continuation {
                *value = coupon
                    + match opts.continuation {
                        Continuation::Realized => discounted[i],
                        Continuation::Fitted => y_hat,
                    };
            } else {
                *value = d.value;
                *action = d.action;
            }
        };

        #[cfg(feature = "parallel")]
        values
            .par_iter_mut()
            .zip(actions.par_iter_mut())
            .zip(events.par_iter_mut())
            .enumerate()
            .for_each(|(i, ((v, a), ev))| step(i, v, a, ev));
        #[cfg(not(feature = "parallel"))]
        values
            .iter_mut()
            .zip(actions.iter_mut())
            .zip(events.iter_mut())
            .enumerate()
            .for_each(|(i, ((v, a), ev))| step(i, v, a, ev));

        diag.exercises_by_day[t] = events.iter().filter(|e| e.0).count();
        diag.adjustments += events.iter().filter(|e| e.1).count();
    }

    let n = m as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let mut counts = ActionCounts::default();
    for a in &actions {
        counts.add(*a);
    }
    Ok(PricingResult {
        price: mean,
        std_error: libm::sqrt(var / n),
        n_paths: m,
        action_counts: counts,
        diagnostics: diag,
    })
}

fn recent_closes(path: &[f64], t: usize, warmup: &[f64]) -> Vec<f64> {
    let have = t + 1;
    let mut out = Vec::with_capacity(ADJUST_LOOKBACK);
    if have < ADJUST_LOOKBACK {
        let need = ADJUST_LOOKBACK - have;
        out.extend_from_slice(&warmup[warmup.len().saturating_sub(need)..]);
    }
    out.extend_from_slice(&path[have.saturating_sub(ADJUST_LOOKBACK)..have]);
    out
}

fn record(out: &mut Vec<CoefRecord>, day: usize, p: &Predictor) {
    match p {
        Predictor::Unified(c) => out.push(CoefRecord {
            day,
            band: None,
            fallback: false,
            coef: *c,
        }),
        Predictor::Banded(b) => {
            for (k, band) in b.bands.iter().enumerate() {
                out.push(CoefRecord {
                    day,
                    band: Some(k),
                    fallback: band.fallback,
                    coef: band.coef,
                });
            }
        }
    }
}
