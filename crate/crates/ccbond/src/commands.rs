//! The four subcommands. Each returns the text printed to stdout and writes
//! its files under the output directory, if one is set.

use std::fmt::Write as _;

use ccbond_core::backtest::{run_backtest, BacktestConfig, Factor, FactorPanel};
use ccbond_core::evaluate::{mean_report, pricing_errors, ErrorReport};
use ccbond_core::mktdata::{annual_to_daily_rate, PriceHistory, VolatilityEstimator};
use ccbond_core::pricer::{self, MarketInputs, PricingOptions, PricingResult, ADJUST_LOOKBACK};
use ccbond_core::regress::BASIS_NAMES;
use ccbond_core::sim::{simulate, GbmParams};
use ccbond_core::terms::BondTerms;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BondEntry, Mode, Settings};
use crate::error::{AppError, AppResult};
use crate::formats::{self, PanelRecord};

fn missing(section: &str) -> AppError {
    AppError::Invalid(format!("config has no [{section}] section"))
}

fn write_out(settings: &Settings, name: &str, contents: &str) -> AppResult<()> {
    match &settings.out {
        Some(dir) => formats::write_text(&dir.join(name), contents),
        None => Ok(()),
    }
}

/// Closes usable as warm-up before `day`: enough to fill the longest window.
fn warmup_before(terms: &BondTerms, history: &PriceHistory, day: i64) -> Vec<f64> {
    let need = terms
        .call_window
        .length
        .max(terms.put_window.length)
        .max(ADJUST_LOOKBACK);
    let end = history.days().partition_point(|&d| d < day);
    history.closes()[end.saturating_sub(need)..end].to_vec()
}

fn sigma_up_to(history: &PriceHistory, day: i64) -> ccbond_core::Result<f64> {
    let end = history.days().partition_point(|&d| d <= day);
    let est = VolatilityEstimator::default();
    let closes = &history.closes()[end.saturating_sub(est.lookback)..end];
    let (sigma, n) = est.estimate_closes(closes)?;
    if n + 1 < est.lookback {
        log::warn!("volatility for day {day} estimated from only {n} returns");
    }
    Ok(sigma)
}

fn apply_overrides(mut terms: BondTerms, settings: &Settings) -> AppResult<BondTerms> {
    if let Some(p) = settings.config.pricing.adjust_probability {
        terms.adjust_probability = p;
    }
    Ok(terms.validate()?)
}

fn result_text(r: &PricingResult, settings: &Settings, rate: f64, sigma: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "price={}", r.price);
    let _ = writeln!(s, "std_error={}", r.std_error);
    let _ = writeln!(s, "n_paths={}", r.n_paths);
    let _ = writeln!(s, "seed={}", settings.seed);
    let _ = writeln!(s, "mode={}", settings.mode.name());
    let _ = writeln!(s, "rate_daily={rate}");
    let _ = writeln!(s, "sigma_daily={sigma}");
    for (name, n) in r.action_counts.entries() {
        let _ = writeln!(s, "{name}={n}");
    }
    let _ = writeln!(s, "adjustments={}", r.diagnostics.adjustments);
    s
}

pub fn price(settings: &Settings) -> AppResult<String> {
    let sec = settings.config.price.as_ref().ok_or_else(|| missing("price"))?;
    let terms = apply_overrides(formats::read_terms(&sec.terms)?, settings)?;
    let history = sec.history.as_deref().map(formats::read_history).transpose()?;
    let rate = annual_to_daily_rate(sec.annual_rate)?;

    let s0 = match (sec.s0, &history) {
        (Some(s), _) => s,
        (None, Some(h)) => match h.days().iter().position(|&d| d == 0) {
            Some(i) => h.closes()[i],
            None => return Err(AppError::Invalid("history has no close on day 0 and s0 is not set".into())),
        },
        (None, None) => return Err(AppError::Invalid("set s0 or provide a history file".into())),
    };
    let sigma = match (sec.sigma, &history) {
        (Some(s), _) => s,
        (None, Some(h)) => sigma_up_to(h, 0)?,
        (None, None) => return Err(AppError::Invalid("set sigma or provide a history file".into())),
    };
    let warmup = history
        .as_ref()
        .map(|h| warmup_before(&terms, h, 0))
        .unwrap_or_default();

    let market = MarketInputs {
        s0,
        rate,
        sigma,
        warmup,
    };
    let opts = settings.config.pricing.options(settings.mode);
    let r = pricer::price(&terms, &market, settings.paths, settings.seed, &opts)?;
    let text = result_text(&r, settings, rate, sigma);

    write_out(settings, "price.txt", &text)?;
    let mut ex = String::from("day,exercises\n");
    for (t, n) in r.diagnostics.exercises_by_day.iter().enumerate() {
        let _ = writeln!(ex, "{t},{n}");
    }
    write_out(settings, "exercises.csv", &ex)?;
    if opts.record_coefficients {
        write_out(settings, "coefficients.csv", &coefficients_csv(&r))?;
    }
    Ok(text)
}

fn coefficients_csv(r: &PricingResult) -> String {
    let mut s = String::from("day,band,fallback");
    for n in BASIS_NAMES {
        let _ = write!(s, ",{n}");
    }
    s.push_str(",intercept\n");
    for c in &r.diagnostics.coefficients {
        let band = c.band.map(|b| b.to_string()).unwrap_or_else(|| "all".into());
        let _ = write!(s, "{},{band},{}", c.day, c.fallback);
        for w in c.coef.weights {
            let _ = write!(s, ",{w}");
        }
        let _ = writeln!(s, ",{}", c.coef.intercept);
    }
    s
}

struct BondOutcome {
    report: ErrorReport,
    panel: Vec<PanelRecord>,
}

fn model_series(
    bond: &BondEntry,
    terms: &BondTerms,
    quotes: &[formats::Quote],
    settings: &Settings,
    rate: f64,
    sigma: Option<f64>,
    mode: Mode,
) -> AppResult<Vec<f64>> {
    if let Some(path) = &bond.model {
        let rows: Vec<formats::ModelRecord> = formats::read_csv(path)?;
        return quotes
            .iter()
            .map(|q| {
                rows.iter()
                    .find(|r| r.day == q.quote.day)
                    .map(|r| r.model_price)
                    .ok_or_else(|| AppError::parse(path, format!("no model price for day {}", q.quote.day)))
            })
            .collect();
    }
    let history = bond.history.as_deref().map(formats::read_history).transpose()?;
    if sigma.is_none() && history.is_none() {
        return Err(AppError::Invalid("needs sigma or a history file".into()));
    }
    let opts: PricingOptions = settings.config.pricing.options(mode);
    quotes
        .par_iter()
        .map(|q| {
            let day = q.quote.day;
            let offset = usize::try_from(day)
                .map_err(|_| AppError::Invalid(format!("quote day {day} precedes the term-sheet date")))?;
            let t = terms.advanced_by(offset)?.with_conversion_price(q.conversion_price);
            let sig = match (sigma, &history) {
                (Some(s), _) => s,
                (None, Some(h)) => sigma_up_to(h, day)?,
                (None, None) => unreachable!(),
            };
            let market = MarketInputs {
                s0: q.quote.stock_close,
                rate,
                sigma: sig,
                warmup: history.as_ref().map(|h| warmup_before(&t, h, day)).unwrap_or_default(),
            };
            Ok(pricer::price(&t, &market, settings.paths, settings.seed, &opts)?.price)
        })
        .collect()
}

fn evaluate_bond(bond: &BondEntry, settings: &Settings, rate: f64) -> AppResult<BondOutcome> {
    let sec = settings.config.evaluate.as_ref().expect("checked by caller");
    let terms = apply_overrides(formats::read_terms(&bond.terms)?, settings)?;
    let quotes: Vec<_> = formats::read_quotes(&bond.quotes, terms.face_value)?
        .into_iter()
        .filter(|q| sec.start_day.is_none_or(|s| q.quote.day >= s) && sec.end_day.is_none_or(|e| q.quote.day <= e))
        .collect();
    if quotes.is_empty() {
        return Err(AppError::Invalid("no quotes in the date range".into()));
    }
    let model = model_series(bond, &terms, &quotes, settings, rate, sec.sigma, settings.mode)?;
    let banded = if sec.both_modes && settings.mode == Mode::Unified && bond.model.is_none() {
        Some(model_series(bond, &terms, &quotes, settings, rate, sec.sigma, Mode::Banded)?)
    } else {
        None
    };
    let market: Vec<f64> = quotes.iter().map(|q| q.quote.bond_price).collect();
    let report = pricing_errors(&model, &market)?;
    let panel = quotes
        .iter()
        .enumerate()
        .map(|(i, q)| PanelRecord {
            day: q.quote.day,
            bond_id: bond.id.clone(),
            model_price: Some(model[i]),
            market_price: q.quote.bond_price,
            premium_rate: Some(q.quote.premium_rate),
            model_price_banded: banded.as_ref().map(|b| b[i]),
        })
        .collect();
    Ok(BondOutcome { report, panel })
}

fn report_row(id: &str, r: &ErrorReport) -> String {
    format!("{id},{:.2},{:.2},{:.2},{}\n", r.mre, r.mare, r.rmse, r.n_obs)
}

pub fn evaluate(settings: &Settings) -> AppResult<String> {
    let sec = settings.config.evaluate.as_ref().ok_or_else(|| missing("evaluate"))?;
    let rate = annual_to_daily_rate(sec.annual_rate)?;
    let mut table = String::from("bond_id,MRE,MARE,RMSE,N\n");
    let mut reports = Vec::new();
    let mut panel = Vec::new();
    for bond in &sec.bonds {
        match evaluate_bond(bond, settings, rate) {
            Ok(o) => {
                table.push_str(&report_row(&bond.id, &o.report));
                reports.push(o.report);
                panel.extend(o.panel);
            }
            Err(e) => log::warn!("skipping bond {}: {e}", bond.id),
        }
    }
    let mean = mean_report(&reports).ok_or_else(|| AppError::Invalid("no bond could be evaluated".into()))?;
    table.push_str(&report_row("Mean", &mean));
    panel.sort_by(|a, b| (a.day, &a.bond_id).cmp(&(b.day, &b.bond_id)));
    write_out(settings, "evaluate.csv", &table)?;
    write_out(settings, "panel.csv", &formats::csv_string(&panel))?;
    Ok(table)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    factor: &'a str,
    cumulative_return: String,
    sharpe: String,
    max_drawdown: String,
    turnover: String,
    skipped_days: usize,
}

pub fn backtest(settings: &Settings) -> AppResult<String> {
    let sec = settings.config.backtest.as_ref().ok_or_else(|| missing("backtest"))?;
    let rows = formats::read_panel(&sec.panel)?;
    let mut runs = Vec::new();
    for factor in [Factor::LeastSquares, Factor::LeastSquaresBanded, Factor::DoubleLow] {
        let panel = FactorPanel::from_rows(&rows, factor).map_err(|e| AppError::parse(&sec.panel, e))?;
        if !panel.has_factors() {
            log::info!("panel has no data for the {} factor", factor.name());
            continue;
        }
        let cfg = BacktestConfig {
            k: sec.k,
            cost: sec.cost,
            direction: factor.direction(),
        };
        let report = run_backtest(&panel, &cfg)?;
        for d in &report.skipped_days {
            log::warn!("{}: fewer than {} bonds on day {d}, holding previous portfolio", factor.name(), sec.k);
        }
        runs.push((factor, report));
    }
    if runs.is_empty() {
        return Err(AppError::parse(&sec.panel, "panel has no usable factor columns"));
    }

    let summary: Vec<SummaryRow> = runs
        .iter()
        .map(|(f, r)| SummaryRow {
            factor: f.name(),
            cumulative_return: format!("{:.4}", r.cumulative_return),
            sharpe: r.sharpe.map_or_else(|| "NA".into(), |s| format!("{s:.4}")),
            max_drawdown: format!("{:.4}", r.max_drawdown),
            turnover: format!("{:.4}", r.turnover),
            skipped_days: r.skipped_days.len(),
        })
        .collect();
    let text = formats::csv_string(&summary);

    let days = &runs[0].1.days;
    let mut nav = String::from("t,day");
    for (f, _) in &runs {
        let _ = write!(nav, ",{}", f.name());
    }
    nav.push('\n');
    for t in 0..=days.len() {
        let day = if t == 0 { String::new() } else { days[t - 1].to_string() };
        let _ = write!(nav, "{t},{day}");
        for (_, r) in &runs {
            let _ = write!(nav, ",{}", r.nav[t]);
        }
        nav.push('\n');
    }
    write_out(settings, "backtest.csv", &text)?;
    write_out(settings, "nav.csv", &nav)?;
    Ok(text)
}

pub fn simulate_cmd(settings: &Settings) -> AppResult<String> {
    let sec = settings.config.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    let r = annual_to_daily_rate(sec.annual_rate)?;
    let params = GbmParams {
        s0: sec.s0,
        r,
        q: sec.dividend_yield,
        sigma: sec.sigma,
        horizon_days: sec.horizon_days,
        n_paths: settings.paths,
        seed: settings.seed,
    };
    let grid = simulate(&params, &settings.config.pricing.sim_options())?;
    let last: Vec<f64> = (0..grid.n_paths()).map(|i| grid.price(i, grid.horizon())).collect();
    let n = last.len() as f64;
    let mean = last.iter().sum::<f64>() / n;
    let sd = (last.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let expected = sec.s0 * ((r - sec.dividend_yield) * sec.horizon_days as f64).exp();
    let se = sd / n.sqrt();

    let mut s = String::new();
    let _ = writeln!(s, "n_paths={}", grid.n_paths());
    let _ = writeln!(s, "horizon_days={}", grid.horizon());
    let _ = writeln!(s, "seed={}", settings.seed);
    let _ = writeln!(s, "mean_ST={mean}");
    let _ = writeln!(s, "std_ST={sd}");
    let _ = writeln!(s, "std_error={se}");
    let _ = writeln!(s, "expected_ST={expected}");
    let _ = writeln!(s, "z_score={}", if se > 0.0 { (mean - expected) / se } else { 0.0 });
    write_out(settings, "grid.csv", &formats::grid_csv(&grid))?;
    write_out(settings, "simulate.txt", &s)?;
    Ok(s)
}
