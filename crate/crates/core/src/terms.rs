//! Term sheets and market quotes.
//!
//! All dates are trading-day indices counted from the valuation date (day 0),
//! with [`TRADING_DAYS_PER_YEAR`](crate::TRADING_DAYS_PER_YEAR) days per year.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An "`required` out of the last `length` trading days" provision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub required: usize,
    pub length: usize,
}

impl Window {
    pub const fn new(required: usize, length: usize) -> Self {
        Self { required, length }
    }

    /// Trigger threshold on the rolling fraction, `required / length`.
    pub fn threshold(&self) -> f64 {
        self.required as f64 / self.length as f64
    }
}

/// A scheduled coupon payment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupon {
    pub day: usize,
    pub amount: f64,
}

/// Full convertible bond term sheet.
///
/// Prices are in currency units per bond. The call price defaults to face
/// value; callers wanting accrued interest in the call price add it
/// themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct BondTerms {
    pub face_value: f64,
    pub conversion_price: f64,
    pub maturity_days: usize,
    pub conversion_start_day: usize,
    pub put_start_day: usize,
    pub call_trigger_frac: f64,
    pub put_trigger_frac: f64,
    pub adjust_trigger_frac: f64,
    pub call_window: Window,
    pub put_window: Window,
    pub adjust_window: Window,
    pub put_price: f64,
    pub call_price: f64,
    pub redemption_price: f64,
    pub adjust_probability: f64,
    /// Continuous dividend yield per trading day.
    pub dividend_yield: f64,
    /// Accepted for completeness; the pricer ignores coupons unless asked.
    pub coupons: Vec<Coupon>,
}

/// Trigger prices implied by the current conversion price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerPrices {
    pub call: f64,
    pub put: f64,
    pub adjust: f64,
}

fn positive(x: f64) -> bool {
    x > 0.0 && !x.is_nan()
}

impl BondTerms {
    /// Checks every term-sheet invariant, returning the first violation.
    ///
    /// Infinite conversion or call trigger values are accepted; they model a
    /// bond that can never convert or never be called.
    pub fn validate(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        let fail = |msg| Err(Error::InvalidTerms(msg));
        if !positive(self.face_value) || !self.face_value.is_finite() {
            return fail("face_value must be positive and finite");
        }
        if !positive(self.conversion_price) {
            return fail("conversion_price must be positive");
        }
        if !positive(self.put_price) || !self.put_price.is_finite() {
            return fail("put_price must be positive and finite");
        }
        if !positive(self.call_price) || !self.call_price.is_finite() {
            return fail("call_price must be positive and finite");
        }
        if !positive(self.redemption_price) || !self.redemption_price.is_finite() {
            return fail("redemption_price must be positive and finite");
        }
        if !positive(self.put_trigger_frac) {
            return fail("put_trigger_frac must be positive");
        }
        if self.adjust_trigger_frac.is_nan() || self.put_trigger_frac > self.adjust_trigger_frac {
            return fail("put_trigger_frac must not exceed adjust_trigger_frac");
        }
        if self.adjust_trigger_frac >= 1.0 {
            return fail("adjust_trigger_frac must be below 1");
        }
        if self.call_trigger_frac.is_nan() || self.call_trigger_frac <= 1.0 {
            return fail("call_trigger_frac must exceed 1");
        }
        for (w, msg) in [
            (self.call_window, "m_c ≤ n_c"),
            (self.put_window, "m_p ≤ n_p"),
            (self.adjust_window, "m ≤ n"),
        ] {
            if w.required == 0 || w.length == 0 {
                return fail("trigger windows must be at least 1 day");
            }
            if w.required > w.length {
                return fail(msg);
            }
        }
        if self.maturity_days == 0 {
            return fail("maturity_days must be at least 1");
        }
        // Both periods already open (put_start_day == 0) is allowed for
        // valuations late in the bond's life.
        if self.conversion_start_day >= self.put_start_day && self.put_start_day != 0 {
            return fail("conversion_start_day must precede put_start_day");
        }
        if self.put_start_day > self.maturity_days {
            return fail("put_start_day must not exceed maturity_days");
        }
        if !(0.0..=1.0).contains(&self.adjust_probability) {
            return fail("adjust_probability must lie in [0, 1]");
        }
        if !self.dividend_yield.is_finite() {
            return fail("dividend_yield must be finite");
        }
        if self.coupons.iter().any(|c| !c.amount.is_finite() || c.amount < 0.0) {
            return fail("coupon amounts must be finite and non-negative");
        }
        Ok(())
    }

    /// Shares received per bond on conversion, `face_value / conversion_price`.
    pub fn conversion_ratio(&self) -> f64 {
        self.face_value / self.conversion_price
    }

    pub fn trigger_prices(&self) -> TriggerPrices {
        let c = self.conversion_price;
        TriggerPrices {
            call: self.call_trigger_frac * c,
            put: self.put_trigger_frac * c,
            adjust: self.adjust_trigger_frac * c,
        }
    }

    /// Copy of the terms with a reset conversion price.
    pub fn with_conversion_price(&self, conversion_price: f64) -> Self {
        Self {
            conversion_price,
            ..self.clone()
        }
    }

    /// Terms as seen `days` trading days later: every date moves closer and
    /// periods that have already opened start at day 0. Coupons already paid
    /// are dropped.
    pub fn advanced_by(&self, days: usize) -> Result<Self> {
        if days >= self.maturity_days {
            return Err(Error::InvalidParameter(alloc::format!(
                "cannot advance {days} days into a bond maturing in {} days",
                self.maturity_days
            )));
        }
        let coupons = self
            .coupons
            .iter()
            .filter(|c| c.day > days)
            .map(|c| Coupon {
                day: c.day - days,
                amount: c.amount,
            })
            .collect();
        Ok(Self {
            maturity_days: self.maturity_days - days,
            conversion_start_day: self.conversion_start_day.saturating_sub(days),
            put_start_day: self.put_start_day.saturating_sub(days),
            coupons,
            ..self.clone()
        })
    }

    /// Whether a holder may convert on `day`.
    pub fn conversion_open(&self, day: usize) -> bool {
        day >= self.conversion_start_day
    }

    /// Whether the soft put may be exercised on `day`.
    pub fn put_open(&self, day: usize) -> bool {
        day >= self.put_start_day
    }
}

/// One day's market observation for a bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketQuote {
    pub day: i64,
    pub bond_price: f64,
    pub stock_close: f64,
    pub conversion_value: f64,
    pub premium_rate: f64,
}

impl MarketQuote {
    /// Builds a quote, deriving conversion value and premium rate.
    pub fn new(
        day: i64,
        bond_price: f64,
        stock_close: f64,
        face_value: f64,
        conversion_price: f64,
    ) -> Result<Self> {
        if !positive(bond_price) {
            return Err(Error::NonPositivePrice {
                day,
                value: bond_price,
            });
        }
        if !positive(stock_close) {
            return Err(Error::NonPositivePrice {
                day,
                value: stock_close,
            });
        }
        if !positive(conversion_price) || !positive(face_value) {
            return Err(Error::InvalidParameter(alloc::format!(
                "conversion price and face value must be positive on day {day}"
            )));
        }
        let conversion_value = face_value / conversion_price * stock_close;
        Ok(Self {
            day,
            bond_price,
            stock_close,
            conversion_value,
            premium_rate: (bond_price - conversion_value) / conversion_value,
        })
    }
}
