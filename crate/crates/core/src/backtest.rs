//! Daily-rebalanced long-only top-k factor backtest.
//!
//! Each day, after marking the book to that day's closes, the `k` bonds
//! ranking best on the factor are bought in equal value. Trades fill at the
//! same closes that produced the factor and pay a proportional cost on the
//! absolute value traded. Cash earns nothing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::TRADING_DAYS_PER_YEAR;

/// `(model - market) / market`; larger means cheaper.
pub fn underpricing_factor(model: f64, market: f64) -> Result<f64> {
    if !(market > 0.0) {
        return Err(Error::NonPositivePrice {
            day: 0,
            value: market,
        });
    }
    Ok((model - market) / market)
}

/// Weights of the double-low score `price_weight * price + premium_weight * premium_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLowWeights {
    pub price: f64,
    pub premium: f64,
}

impl Default for DoubleLowWeights {
    fn default() -> Self {
        Self {
            price: 1.0,
            premium: 100.0,
        }
    }
}

/// Bond price plus premium rate in percentage points; smaller is cheaper.
pub fn double_low(bond_price: f64, premium_rate: f64) -> f64 {
    double_low_weighted(bond_price, premium_rate, DoubleLowWeights::default())
}

pub fn double_low_weighted(bond_price: f64, premium_rate: f64, w: DoubleLowWeights) -> f64 {
    w.price * bond_price + w.premium * premium_rate
}

/// One input observation of a bond on a day.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub day: i64,
    pub bond: String,
    pub model_price: Option<f64>,
    /// Model price from the banded regression, if computed.
    pub model_price_banded: Option<f64>,
    pub market_price: f64,
    pub premium_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    LeastSquares,
    LeastSquaresBanded,
    DoubleLow,
}

impl Factor {
    pub fn name(self) -> &'static str {
        match self {
            Factor::LeastSquares => "least-squares",
            Factor::LeastSquaresBanded => "least-squares+MR",
            Factor::DoubleLow => "double-low",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Factor::DoubleLow => Direction::Min,
            _ => Direction::Max,
        }
    }

    fn value(self, row: &PanelRow) -> Option<f64> {
        match self {
            Factor::LeastSquares => row
                .model_price
                .and_then(|m| underpricing_factor(m, row.market_price).ok()),
            Factor::LeastSquaresBanded => row
                .model_price_banded
                .and_then(|m| underpricing_factor(m, row.market_price).ok()),
            Factor::DoubleLow => row.premium_rate.map(|pr| double_low(row.market_price, pr)),
        }
    }
}

/// Select the largest or the smallest factor values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

/// Dense day x bond grid of market prices and factor values.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    days: Vec<i64>,
    bonds: Vec<String>,
    market: Vec<Option<f64>>,
    factor: Vec<Option<f64>>,
}

impl FactorPanel {
    /// `market` and `factor` are day-major, `days.len() x bonds.len()`.
    pub fn new(
        days: Vec<i64>,
        bonds: Vec<String>,
        market: Vec<Option<f64>>,
        factor: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = days.len() * bonds.len();
        for v in [&market, &factor] {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if days.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("panel days must be strictly increasing".into()));
        }
        for (k, p) in market.iter().enumerate() {
            if let Some(p) = p {
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::NonPositivePrice {
                        day: days[k / bonds.len()],
                        value: *p,
                    });
                }
            }
        }
        // A factor needs a price on the same day.
        let factor = factor
            .into_iter()
            .zip(&market)
            .map(|(f, m)| f.filter(|x| x.is_finite() && m.is_some()))
            .collect();
        Ok(Self {
            days,
            bonds,
            market,
            factor,
        })
    }

    /// Builds a panel from rows, scoring each with `factor`.
    pub fn from_rows(rows: &[PanelRow], factor: Factor) -> Result<Self> {
        let mut days: Vec<i64> = rows.iter().map(|r| r.day).collect();
        days.sort_unstable();
        days.dedup();
        let mut bonds: Vec<String> = rows.iter().map(|r| r.bond.clone()).collect();
        bonds.sort();
        bonds.dedup();
        let nb = bonds.len();
        let mut market = vec![None; days.len() * nb];
        let mut values = vec![None; days.len() * nb];
        for r in rows {
            let d = days.binary_search(&r.day).expect("day collected above");
            let b = bonds.binary_search(&r.bond).expect("bond collected above");
            let slot = d * nb + b;
            if market[slot].is_some() {
                return Err(Error::InvalidParameter(alloc::format!(
                    "duplicate row for bond {} on day {}",
                    r.bond,
                    r.day
                )));
            }
            market[slot] = Some(r.market_price);
            values[slot] = factor.value(r);
        }
        Self::new(days, bonds, market, values)
    }

    pub fn days(&self) -> &[i64] {
        &self.days
    }

    pub fn bonds(&self) -> &[String] {
        &self.bonds
    }

    pub fn market(&self, day_idx: usize, bond: usize) -> Option<f64> {
        self.market[day_idx * self.bonds.len() + bond]
    }

    pub fn factor(&self, day_idx: usize, bond: usize) -> Option<f64> {
        self.factor[day_idx * self.bonds.len() + bond]
    }

    /// Whether any factor is defined at all.
    pub fn has_factors(&self) -> bool {
        self.factor.iter().any(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestConfig {
    pub k: usize,
    /// Proportional cost per unit of value traded.
    pub cost: f64,
    pub direction: Direction,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            k: 10,
            cost: 0.001,
            direction: Direction::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfStats {
    /// Percent.
    pub cumulative_return: f64,
    /// Annualised; `None` when daily returns have no dispersion.
    pub sharpe: Option<f64>,
    /// Percent of the running peak.
    pub max_drawdown: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    /// Starting capital `1.0`, then the value after each day's rebalance.
    pub nav: Vec<f64>,
    pub days: Vec<i64>,
    pub cumulative_return: f64,
    pub sharpe: Option<f64>,
    pub max_drawdown: f64,
    /// Mean value traded per day, percent of NAV.
    pub turnover: f64,
    pub total_cost: f64,
    /// Bond indices held after each day's rebalance.
    pub holdings: Vec<Vec<usize>>,
    /// Days on which too few bonds had a factor; the book was left alone.
    pub skipped_days: Vec<i64>,
}

/// Runs the strategy over every panel day.
pub fn run_backtest(panel: &FactorPanel, cfg: &BacktestConfig) -> Result<BacktestReport> {
    if panel.days.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: panel.days.len(),
        });
    }
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(cfg.cost >= 0.0 && cfg.cost < 1.0) {
        return Err(Error::InvalidParameter("cost must lie in [0, 1)".into()));
    }
    let nb = panel.bonds.len();
    let mut last_price: Vec<Option<f64>> = vec![None; nb];
    let mut shares = vec![0.0; nb];
    let mut cash = 1.0;
    let mut nav = vec![1.0];
    let mut holdings: Vec<Vec<usize>> = Vec::with_capacity(panel.days.len());
    let mut held: Vec<usize> = Vec::new();
    let mut skipped = Vec::new();
    let mut traded_frac_sum = 0.0;
    let mut total_cost = 0.0;

    for (d, &day) in panel.days.iter().enumerate() {
        for (b, last) in last_price.iter_mut().enumerate() {
            if let Some(p) = panel.market(d, b) {
                *last = Some(p);
            }
        }
        let position = |b: usize| shares[b] * last_price[b].unwrap_or(0.0);
        let value = cash + (0..nb).map(position).sum::<f64>();

        let mut ranked: Vec<(usize, f64)> = (0..nb)
            .filter_map(|b| panel.factor(d, b).map(|f| (b, f)))
            .collect();
        if ranked.len() < cfg.k {
            skipped.push(day);
            nav.push(value);
            holdings.push(held.clone());
            continue;
        }
        ranked.sort_by(|a, b| {
            let ord = match cfg.direction {
                Direction::Max => b.1.total_cmp(&a.1),
                Direction::Min => a.1.total_cmp(&b.1),
            };
            ord.then(a.0.cmp(&b.0))
        });
        let mut chosen: Vec<usize> = ranked[..cfg.k].iter().map(|x| x.0).collect();
        chosen.sort_unstable();

        let target = value / cfg.k as f64;
        let mut traded = 0.0;
        for b in 0..nb {
            let current = position(b);
            let goal = if chosen.binary_search(&b).is_ok() { target } else { 0.0 };
            traded += (goal - current).abs();
        }
        let cost = cfg.cost * traded;
        let after = value - cost;
        shares.fill(0.0);
        for &b in &chosen {
            let p = last_price[b].expect("factor implies a price");
            shares[b] = after / cfg.k as f64 / p;
        }
        cash = 0.0;
        total_cost += cost;
        traded_frac_sum += traded / value;
        nav.push(after);
        held = chosen;
        holdings.push(held.clone());
    }

    let stats = perf_stats(&nav)?;
    Ok(BacktestReport {
        turnover: 100.0 * traded_frac_sum / panel.days.len() as f64,
        cumulative_return: stats.cumulative_return,
        sharpe: stats.sharpe,
        max_drawdown: stats.max_drawdown,
        nav,
        days: panel.days.clone(),
        total_cost,
        holdings,
        skipped_days: skipped,
    })
}

/// Daily returns below this dispersion count as riskless.
const ZERO_VOL: f64 = 1e-12;

pub fn perf_stats(nav: &[f64]) -> Result<PerfStats> {
    if nav.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: nav.len(),
        });
    }
    if let Some(i) = nav.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NonPositivePrice {
            day: i as i64,
            value: nav[i],
        });
    }
    let first = nav[0];
    let last = nav[nav.len() - 1];
    let cumulative_return = (last / first - 1.0) * 100.0;

    let rets: Vec<f64> = nav.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let sharpe = if rets.len() < 2 {
        None
    } else {
        let n = rets.len() as f64;
        let mean = rets.iter().sum::<f64>() / n;
        let sd = libm::sqrt(rets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0));
        (sd > ZERO_VOL).then(|| mean / sd * libm::sqrt(TRADING_DAYS_PER_YEAR))
    };

    let mut peak = f64::MIN;
    let mut max_drawdown = 0.0f64;
    for &v in nav {
        peak = peak.max(v);
        max_drawdown = max_drawdown.max((100.0 * peak - 100.0 * v) / peak);
    }
    Ok(PerfStats {
        cumulative_return,
        sharpe,
        max_drawdown,
    })
}
