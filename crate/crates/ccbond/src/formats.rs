//! On-disk formats: TOML term sheets and CSV inputs and outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ccbond_core::backtest::PanelRow;
use ccbond_core::mktdata::PriceHistory;
use ccbond_core::sim::PathGrid;
use ccbond_core::terms::{BondTerms, Coupon, MarketQuote, Window};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Term sheet as written in a TOML file. Windows are `[required, length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermsFile {
    #[serde(default = "hundred")]
    pub face_value: f64,
    pub conversion_price: f64,
    pub maturity_days: usize,
    #[serde(default)]
    pub conversion_start_day: usize,
    pub put_start_day: usize,
    pub call_trigger_frac: f64,
    pub put_trigger_frac: f64,
    pub adjust_trigger_frac: f64,
    pub call_window: [usize; 2],
    pub put_window: [usize; 2],
    pub adjust_window: [usize; 2],
    pub put_price: f64,
    /// Defaults to face value.
    pub call_price: Option<f64>,
    pub redemption_price: f64,
    #[serde(default = "default_adjust_probability")]
    pub adjust_probability: f64,
    #[serde(default)]
    pub dividend_yield: f64,
    #[serde(default)]
    pub coupons: Vec<CouponEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouponEntry {
    pub day: usize,
    pub amount: f64,
}

fn hundred() -> f64 {
    100.0
}

fn default_adjust_probability() -> f64 {
    0.8
}

impl TermsFile {
    pub fn into_terms(self) -> ccbond_core::Result<BondTerms> {
        let w = |[m, n]: [usize; 2]| Window::new(m, n);
        BondTerms {
            face_value: self.face_value,
            conversion_price: self.conversion_price,
            maturity_days: self.maturity_days,
            conversion_start_day: self.conversion_start_day,
            put_start_day: self.put_start_day,
            call_trigger_frac: self.call_trigger_frac,
            put_trigger_frac: self.put_trigger_frac,
            adjust_trigger_frac: self.adjust_trigger_frac,
            call_window: w(self.call_window),
            put_window: w(self.put_window),
            adjust_window: w(self.adjust_window),
            put_price: self.put_price,
            call_price: self.call_price.unwrap_or(self.face_value),
            redemption_price: self.redemption_price,
            adjust_probability: self.adjust_probability,
            dividend_yield: self.dividend_yield,
            coupons: self
                .coupons
                .iter()
                .map(|c| Coupon {
                    day: c.day,
                    amount: c.amount,
                })
                .collect(),
        }
        .validate()
    }
}

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| AppError::parse(path, one_line(&e.to_string())))
}

pub fn read_terms(path: &Path) -> AppResult<BondTerms> {
    let file: TermsFile = read_toml(path)?;
    file.into_terms().map_err(|e| AppError::parse(path, e))
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Reads every record of a headed CSV file.
pub fn read_csv<T: DeserializeOwned>(path: &Path) -> AppResult<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    rdr.deserialize()
        .map(|r| r.map_err(|e| AppError::parse(path, e)))
        .collect()
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct HistoryRecord {
    pub day: i64,
    pub close: f64,
}

/// Stock closes, `day,close`. Rows may come in any order.
pub fn read_history(path: &Path) -> AppResult<PriceHistory> {
    let rows: Vec<HistoryRecord> = read_csv(path)?;
    let (h, resorted) = PriceHistory::from_unsorted(rows.iter().map(|r| (r.day, r.close)).collect())
        .map_err(|e| AppError::parse(path, e))?;
    if resorted {
        log::warn!("{}: rows were not in day order and have been sorted", path.display());
    }
    Ok(h)
}

#[derive(Debug, Clone, Deserialize)]
pub struct QuoteRecord {
    pub day: i64,
    #[serde(default)]
    pub date: Option<String>,
    pub bond_price: f64,
    pub stock_close: f64,
    pub conversion_price: f64,
}

/// Daily bond quotes with the conversion price in force on each day.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    pub quote: MarketQuote,
    pub conversion_price: f64,
}

pub fn read_quotes(path: &Path, face_value: f64) -> AppResult<Vec<Quote>> {
    let rows: Vec<QuoteRecord> = read_csv(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let quote = MarketQuote::new(r.day, r.bond_price, r.stock_close, face_value, r.conversion_price)
            .map_err(|e| AppError::parse(path, e))?;
        out.push(Quote {
            quote,
            conversion_price: r.conversion_price,
        });
    }
    if out.windows(2).any(|w| w[1].quote.day <= w[0].quote.day) {
        return Err(AppError::parse(path, "quote days must be strictly increasing"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ModelRecord {
    pub day: i64,
    pub model_price: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelRecord {
    pub day: i64,
    pub bond_id: String,
    pub model_price: Option<f64>,
    pub market_price: f64,
    pub premium_rate: Option<f64>,
    #[serde(default)]
    pub model_price_banded: Option<f64>,
}

impl From<PanelRecord> for PanelRow {
    fn from(r: PanelRecord) -> Self {
        PanelRow {
            day: r.day,
            bond: r.bond_id,
            model_price: r.model_price,
            model_price_banded: r.model_price_banded,
            market_price: r.market_price,
            premium_rate: r.premium_rate,
        }
    }
}

/// Factor panel, `day,bond_id,model_price,market_price,premium_rate[,model_price_banded]`.
pub fn read_panel(path: &Path) -> AppResult<Vec<PanelRow>> {
    let rows: Vec<PanelRecord> = read_csv(path)?;
    Ok(rows.into_iter().map(PanelRow::from).collect())
}

pub fn write_text(path: &Path, contents: &str) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| AppError::io(path, e))
}

/// Serialises records as headed CSV text.
pub fn csv_string<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV output is UTF-8")
}

/// One row per path: `path,d0,d1,...`.
pub fn grid_csv(grid: &PathGrid) -> String {
    let mut s = String::from("path");
    for t in 0..grid.width() {
        let _ = write!(s, ",d{t}");
    }
    s.push('\n');
    for (i, row) in grid.rows().enumerate() {
        let _ = write!(s, "{i}");
        for p in row {
            let _ = write!(s, ",{p}");
        }
        s.push('\n');
    }
    s
}
