//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use ccbond_core::backtest::{perf_stats, run_backtest, BacktestConfig, Direction, FactorPanel};
use ccbond_core::evaluate::pricing_errors;
use ccbond_core::mktdata::annual_to_daily_rate;
use ccbond_core::pricer::{price, MarketInputs, PricingOptions, PricingResult};
use ccbond_core::regress::{fit, solve_ls, BandEdges, DesignMatrix, FitConfig, FitMode, State};
use ccbond_core::rng::{normal_stream, uniform_at, SubStream};
use ccbond_core::signal::compute_signals;
use ccbond_core::sim::{simulate, GbmParams, SimOptions};
use ccbond_core::terms::{BondTerms, Window};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn daqin() -> BondTerms {
    BondTerms {
        face_value: 100.0,
        conversion_price: 6.22,
        maturity_days: 700,
        conversion_start_day: 0,
        put_start_day: 196,
        call_trigger_frac: 1.3,
        put_trigger_frac: 0.7,
        adjust_trigger_frac: 0.85,
        call_window: Window::new(15, 30),
        put_window: Window::new(30, 30),
        adjust_window: Window::new(15, 30),
        put_price: 100.0,
        call_price: 100.0,
        redemption_price: 108.0,
        adjust_probability: 0.8,
        dividend_yield: 0.0,
        coupons: Vec::new(),
    }
}

fn rate() -> f64 {
    annual_to_daily_rate(0.025).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn zero_conversion() -> Outcome {
    let t = BondTerms {
        conversion_price: f64::INFINITY,
        call_trigger_frac: f64::INFINITY,
        put_start_day: 700,
        adjust_probability: 0.0,
        ..daqin()
    };
    let r = rate();
    let start = Instant::now();
    let market = MarketInputs {
        s0: 6.0,
        rate: r,
        sigma: 0.02,
        warmup: Vec::new(),
    };
    let res = price(&t, &market, 1000, 7, &PricingOptions::default()).unwrap();
    let took = start.elapsed();
    let want = 108.0 * (-r * 700.0).exp();
    let err = rel(res.price, want);
    outcome(
        err <= 1e-10 && took < Duration::from_secs(1),
        format!("price {} vs {want}, rel err {err:.2e}, {took:.2?}", res.price),
    )
}

/// Scalar backward recursion along the single deterministic path.
fn scalar_oracle(t: &BondTerms, s0: f64, r: f64, warmup: &[f64]) -> f64 {
    let n = t.maturity_days;
    let drift = r - t.dividend_yield;
    let s: Vec<f64> = (0..=n).map(|d| s0 * (drift * d as f64).exp()).collect();
    let closes: Vec<f64> = warmup.iter().chain(&s).copied().collect();
    let frac = |day: usize, len: usize, hit: &dyn Fn(f64) -> bool| {
        let end = warmup.len() + day + 1;
        let lo = end.saturating_sub(len);
        let w = &closes[lo..end];
        w.iter().filter(|&&c| hit(c)).count() as f64 / w.len() as f64
    };
    let call_trig = t.call_trigger_frac * t.conversion_price;
    let put_trig = t.put_trigger_frac * t.conversion_price;
    let m = t.face_value / t.conversion_price;

    let mut v = (m * s[n]).max(t.redemption_price);
    for day in (0..n).rev() {
        let y = (-r).exp() * v;
        if day < t.conversion_start_day {
            v = y;
            continue;
        }
        let f = frac(day, t.call_window.length, &|c| c > call_trig);
        let yy = frac(day, t.put_window.length, &|c| c < put_trig);
        if f >= t.call_window.required as f64 / t.call_window.length as f64 {
            v = (m * s[day]).max(t.call_price);
            continue;
        }
        let mut ratio = m;
        if yy >= 1.0 && t.adjust_probability >= 1.0 {
            let end = warmup.len() + day + 1;
            let last20 = &closes[end.saturating_sub(20)..end];
            let avg = last20.iter().sum::<f64>() / last20.len() as f64;
            let c_new = avg.max(s[day]);
            if c_new < t.conversion_price {
                ratio = t.face_value / c_new;
            }
        }
        let put_ok = day >= t.put_start_day && yy >= t.put_window.required as f64 / t.put_window.length as f64;
        let mut best = y;
        if put_ok && t.put_price > best {
            best = t.put_price;
        }
        if ratio * s[day] > best {
            best = ratio * s[day];
        }
        v = best;
    }
    v
}

fn deterministic_limit() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let scenarios: [(&str, BondTerms, f64, f64, Vec<f64>); 3] = [
        (
            "rising",
            BondTerms {
                maturity_days: 250,
                put_start_day: 60,
                ..daqin()
            },
            7.0,
            0.002,
            vec![6.9; 30],
        ),
        (
            "falling p=1",
            BondTerms {
                maturity_days: 250,
                put_start_day: 60,
                adjust_probability: 1.0,
                dividend_yield: 0.003,
                ..daqin()
            },
            5.0,
            1e-4,
            vec![5.2; 30],
        ),
        (
            "falling p=0",
            BondTerms {
                maturity_days: 250,
                put_start_day: 60,
                adjust_probability: 0.0,
                dividend_yield: 0.003,
                ..daqin()
            },
            5.0,
            1e-4,
            vec![5.2; 30],
        ),
    ];
    for (name, t, s0, r, warm) in scenarios {
        let market = MarketInputs {
            s0,
            rate: r,
            sigma: 0.0,
            warmup: warm.clone(),
        };
        let res = price(&t, &market, 100, 1, &PricingOptions::default()).unwrap();
        let want = scalar_oracle(&t, s0, r, &warm);
        let e = rel(res.price, want);
        worst = worst.max(e);
        notes.push(format!("{name} {:.6}", res.price));
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-8 && took < Duration::from_secs(1),
        format!("{}; worst rel err {worst:.2e}, {took:.2?}", notes.join(", ")),
    )
}

/// Cox-Ross-Rubinstein tree for a bond convertible at any time into `m`
/// shares, redeemed at `b` at maturity.
fn binomial(s0: f64, m: f64, b: f64, r: f64, q: f64, sigma: f64, days: f64, steps: usize) -> f64 {
    let dt = days / steps as f64;
    let u = (sigma * dt.sqrt()).exp();
    let d = 1.0 / u;
    let p = (((r - q) * dt).exp() - d) / (u - d);
    let disc = (-r * dt).exp();
    let mut v: Vec<f64> = (0..=steps)
        .map(|j| (m * s0 * u.powi(j as i32) * d.powi((steps - j) as i32)).max(b))
        .collect();
    for n in (0..steps).rev() {
        for j in 0..=n {
            let cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            let s = s0 * u.powi(j as i32) * d.powi((n - j) as i32);
            v[j] = cont.max(m * s);
        }
    }
    v[0]
}

fn binomial_oracle() -> Outcome {
    let t = BondTerms {
        conversion_price: 10.0,
        maturity_days: 250,
        put_start_day: 250,
        call_trigger_frac: f64::INFINITY,
        redemption_price: 105.0,
        adjust_probability: 0.0,
        dividend_yield: 1e-4,
        ..daqin()
    };
    let r = rate();
    let start = Instant::now();
    let market = MarketInputs {
        s0: 10.0,
        rate: r,
        sigma: 0.02,
        warmup: Vec::new(),
    };
    // Banded fit: a single quadratic through the origin bends below the
    // conversion value deep in the money and converts too early.
    let opts = PricingOptions {
        mode: FitMode::Banded,
        ..PricingOptions::default()
    };
    let res = price(&t, &market, 50_000, 2024, &opts).unwrap();
    let took = start.elapsed();
    let tree = binomial(10.0, 10.0, 105.0, r, 1e-4, 0.02, 250.0, 1000);
    let tol = (0.005 * tree).max(3.0 * res.std_error);
    let diff = (res.price - tree).abs();
    outcome(
        diff <= tol && took < Duration::from_secs(60),
        format!(
            "banded MC {:.4} (se {:.4}) vs tree {tree:.4}, |diff| {diff:.4} <= {tol:.4}, {took:.2?}",
            res.price, res.std_error
        ),
    )
}

fn martingale() -> Outcome {
    let start = Instant::now();
    let params = GbmParams {
        s0: 6.0,
        r: rate(),
        q: 1e-4,
        sigma: 0.02,
        horizon_days: 250,
        n_paths: 100_000,
        seed: 99,
    };
    let g = simulate(&params, &SimOptions::default()).unwrap();
    let x: Vec<f64> = (0..g.n_paths()).map(|i| g.price(i, 250) / 6.0).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let se = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
    let want = ((params.r - params.q) * 250.0).exp();
    let took = start.elapsed();
    let z = (mean - want) / se;
    outcome(
        z.abs() <= 3.0 && took < Duration::from_secs(10),
        format!("E[S_T]/S0 {mean:.6} vs {want:.6}, z {z:.2}, {took:.2?}"),
    )
}

fn regression_oracle() -> Outcome {
    let (rows, cols) = (200, 9);
    let mut worst: f64 = 0.0;
    let mut deficient = 0;
    for sys in 0..100u64 {
        let mut a = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                a[i * cols + j] = normal_stream(sys, i as u64, j as u64);
            }
        }
        if sys % 10 == 0 {
            // Column 8 = column 0 + 2 * column 3, column 7 = column 1.
            deficient += 1;
            for i in 0..rows {
                a[i * cols + 8] = a[i * cols] + 2.0 * a[i * cols + 3];
                a[i * cols + 7] = a[i * cols + 1];
            }
        }
        let y: Vec<f64> = (0..rows).map(|i| normal_stream(sys + 1000, i as u64, 0)).collect();
        let sol = solve_ls(&DesignMatrix::new(rows, cols, a.clone()).unwrap(), &y).unwrap();

        let m = nalgebra::DMatrix::from_row_slice(rows, cols, &a);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let x = svd.solve(&nalgebra::DVector::from_column_slice(&y), smax * 1e-10).unwrap();
        let num: f64 = sol.coef.iter().zip(x.iter()).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(num / x.norm());
        if sys % 10 == 0 && sol.rank != 7 {
            return outcome(false, format!("system {sys}: rank {} (want 7)", sol.rank));
        }
    }
    outcome(
        worst <= 1e-8,
        format!("100 systems ({deficient} rank-deficient), worst rel err {worst:.2e}"),
    )
}

fn banded_domination() -> Outcome {
    let edges = BandEdges {
        put: 4.354,
        conversion: 6.22,
        call: 8.086,
    };
    let mut min_gap = f64::INFINITY;
    for set in 0..50u64 {
        let n = 400;
        let states: Vec<State> = (0..n)
            .map(|i| {
                let s = 3.0 + 7.0 * uniform_at(set, SubStream::Diffusion, i, 0);
                let f = (uniform_at(set, SubStream::Diffusion, i, 1) * 30.0).floor() / 30.0;
                let y = (uniform_at(set, SubStream::Diffusion, i, 2) * 30.0).floor() / 30.0;
                State::new(s, f, y)
            })
            .collect();
        let y: Vec<f64> = states
            .iter()
            .enumerate()
            .map(|(i, st)| {
                100.0f64.max(16.0 * st.s) + 5.0 * st.y + normal_stream(set + 500, i as u64, 0)
            })
            .collect();
        let cfg = FitConfig {
            scale: 6.22,
            ..FitConfig::default()
        };
        let unified = fit(&states, &y, &cfg).unwrap();
        let banded = fit(
            &states,
            &y,
            &FitConfig {
                mode: FitMode::Banded,
                edges: Some(edges),
                ..cfg
            },
        )
        .unwrap();
        if let ccbond_core::regress::Predictor::Banded(b) = &banded {
            if b.bands.iter().any(|band| band.samples < 27 || band.fallback) {
                return outcome(false, format!("dataset {set}: a band has fewer than 27 samples"));
            }
        }
        let gap = unified.sse(&states, &y) - banded.sse(&states, &y);
        min_gap = min_gap.min(gap);
    }
    outcome(min_gap >= 0.0, format!("50 datasets, min SSE_unified - SSE_banded = {min_gap:.4}"))
}

fn trigger_fractions() -> Outcome {
    let t = BondTerms {
        conversion_price: 5.0,
        maturity_days: 60,
        put_start_day: 30,
        ..daqin()
    };
    let params = GbmParams {
        s0: 5.0,
        r: 1e-4,
        q: 0.0,
        sigma: 0.05,
        horizon_days: 60,
        n_paths: 1000,
        seed: 3,
    };
    let g = simulate(&params, &SimOptions::default()).unwrap();
    let (call_trig, put_trig) = (t.call_trigger_frac * 5.0, t.put_trigger_frac * 5.0);
    let mut mismatches = 0;
    let mut hits = 0;
    for warm in [Vec::new(), vec![4.0, 7.0, 3.0, 6.6, 5.0]] {
        let sig = compute_signals(&g, &t, &warm).unwrap();
        for i in 0..1000 {
            let closes: Vec<f64> = warm.iter().chain(g.path(i)).copied().collect();
            for d in 0..=60 {
                let end = warm.len() + d + 1;
                let cw = &closes[end.saturating_sub(30)..end];
                let f = cw.iter().filter(|&&c| c > call_trig).count() as f64 / cw.len() as f64;
                let y = cw.iter().filter(|&&c| c < put_trig).count() as f64 / cw.len() as f64;
                hits += usize::from(f > 0.0) + usize::from(y > 0.0);
                if f != sig.call(i, d) || y != sig.put(i, d) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0 && hits > 1000,
        format!("1000 paths x 61 days x 2 warm-ups, {mismatches} mismatches, {hits} non-zero fractions"),
    )
}

fn metrics() -> Outcome {
    let mut violations = 0;
    for s in 0..1000u64 {
        let n = 1 + (uniform_at(s, SubStream::Adjustment, 0, 0) * 100.0) as usize;
        let market: Vec<f64> = (0..n).map(|i| 80.0 + 60.0 * uniform_at(s, SubStream::Diffusion, i as u64, 0)).collect();
        let model: Vec<f64> = (0..n).map(|i| 80.0 + 60.0 * uniform_at(s, SubStream::Diffusion, i as u64, 1)).collect();
        let r = pricing_errors(&model, &market).unwrap();
        if r.mre.abs() > r.mare * (1.0 + 1e-12) || r.mare > r.rmse * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    let h = pricing_errors(&[103.0], &[100.0]).unwrap();
    let hand = (h.mre, h.mare, h.rmse) == (3.0, 3.0, 3.0);
    outcome(
        violations == 0 && hand,
        format!("{violations} violations in 1000 series; 103 vs 100 -> {}/{}/{}", h.mre, h.mare, h.rmse),
    )
}

fn backtest_ledger() -> Outcome {
    let prices = [[100.0, 50.0, 20.0], [110.0, 55.0, 18.0], [99.0, 60.0, 19.8]];
    let factors = [[0.3, 0.1, 0.2], [0.0, 0.2, 0.1], [0.3, 0.1, 0.2]];
    let panel = |p: &[[f64; 3]], f: &[[f64; 3]]| {
        FactorPanel::new(
            (0..p.len() as i64).collect(),
            vec!["A".into(), "B".into(), "C".into()],
            p.iter().flatten().map(|&x| Some(x)).collect(),
            f.iter().flatten().map(|&x| Some(x)).collect(),
        )
        .unwrap()
    };
    let rep = run_backtest(
        &panel(&prices, &factors),
        &BacktestConfig {
            k: 2,
            cost: 0.001,
            direction: Direction::Max,
        },
    )
    .unwrap();

    // Hand ledger. Day 0: buy A and C with all cash.
    let c: f64 = 0.001;
    let nav1 = 1.0 - c * 1.0;
    let (a_val, c_val) = (nav1 / 2.0, nav1 / 2.0);
    // Day 1: A +10%, C -10%; rotate into B and C.
    let (a1, c1) = (a_val * 1.1, c_val * 0.9);
    let v1 = a1 + c1;
    let traded1 = a1 + v1 / 2.0 + (v1 / 2.0 - c1).abs();
    let nav2 = v1 - c * traded1;
    // Day 2: B 55 -> 60, C 18 -> 19.8; rotate into A and C.
    let (b2, c2) = (nav2 / 2.0 * 60.0 / 55.0, nav2 / 2.0 * 19.8 / 18.0);
    let v2 = b2 + c2;
    let traded2 = v2 / 2.0 + b2 + (v2 / 2.0 - c2).abs();
    let nav3 = v2 - c * traded2;
    let hand = [1.0, nav1, nav2, nav3];
    let ledger_err = rep.nav.iter().zip(hand).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let dd = perf_stats(&[1.0, 0.8, 0.9]).unwrap().max_drawdown;

    // Equal-weight universe.
    let days = 40;
    let p: Vec<[f64; 3]> = (0..days)
        .map(|d| {
            let mut row = [0.0; 3];
            for (b, x) in row.iter_mut().enumerate() {
                *x = 100.0 * (0.01 * normal_stream(17, b as u64, d)).exp() * (1.0 + 0.001 * d as f64);
            }
            row
        })
        .collect();
    let f: Vec<[f64; 3]> = (0..days).map(|d| [d as f64, 1.0, -(d as f64)]).collect();
    let ew = run_backtest(
        &panel(&p, &f),
        &BacktestConfig {
            k: 3,
            cost: 0.0,
            direction: Direction::Max,
        },
    )
    .unwrap();
    let mut nav = 1.0;
    let mut ew_err: f64 = (ew.nav[1] - 1.0).abs();
    for d in 1..days as usize {
        nav *= (0..3).map(|b| p[d][b] / p[d - 1][b]).sum::<f64>() / 3.0;
        ew_err = ew_err.max((ew.nav[d + 1] - nav).abs());
    }

    outcome(
        ledger_err <= 1e-10 && dd == 20.0 && ew_err <= 1e-10,
        format!("ledger err {ledger_err:.1e}, drawdown {dd}, equal-weight err {ew_err:.1e}"),
    )
}

fn determinism() -> Outcome {
    let t = daqin();
    let market = MarketInputs {
        s0: 5.9,
        rate: rate(),
        sigma: 0.015,
        warmup: Vec::new(),
    };
    let opts = PricingOptions::default();
    let run = |threads: usize, m: usize| -> PricingResult {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| price(&t, &market, m, 20230103, &opts).unwrap())
    };
    let a = run(1, 5000);
    let b = run(1, 5000);
    let c = run(4, 5000);
    let d = run(4, 20_000);
    let same = a == b && a == c && a.price.to_bits() == c.price.to_bits();
    let ratio = a.std_error / d.std_error;
    outcome(
        same && (ratio - 2.0).abs() <= 0.4,
        format!(
            "price {} bit-identical across runs and 1/4 threads: {same}; se(5000)/se(20000) = {ratio:.3}",
            a.price
        ),
    )
}

fn adjustment_sanity() -> Outcome {
    let market = MarketInputs {
        s0: 3.5,
        rate: rate(),
        sigma: 0.02,
        warmup: Vec::new(),
    };
    let with = |p: f64| {
        let t = BondTerms {
            adjust_probability: p,
            ..daqin()
        };
        price(&t, &market, 5000, 11, &PricingOptions::default()).unwrap()
    };
    let on = with(0.8);
    let off = with(0.0);
    outcome(
        on.price >= off.price - 3.0 * on.std_error,
        format!(
            "p=0.8 {:.4} (se {:.4}, {} resets) vs p=0 {:.4}",
            on.price, on.std_error, on.diagnostics.adjustments, off.price
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("zero-conversion bond", zero_conversion),
        ("deterministic limit", deterministic_limit),
        ("binomial oracle", binomial_oracle),
        ("martingale check", martingale),
        ("regression oracle", regression_oracle),
        ("banded-regression domination", banded_domination),
        ("trigger-fraction oracle", trigger_fractions),
        ("metrics inequality", metrics),
        ("backtest ledger oracle", backtest_ledger),
        ("determinism", determinism),
        ("downward-adjustment sanity", adjustment_sanity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
