//! Least-squares continuation-value regression.
//!
//! The state of a path on an exercise day is `(S, F, Y)`: stock price, call
//! trigger fraction and put trigger fraction. Continuation values are
//! regressed on the nine-term basis
//!
//! ```text
//! S, S^2, F, F^2, Y, Y^2, S*F, S*Y, F*Y
//! ```
//!
//! with no intercept unless one is requested. Fits can be pooled over all
//! paths or made separately per stock-price band, the band edges being the
//! put trigger, conversion price and call trigger.
//!
//! Internally `S` is divided by a reference price (the conversion price)
//! before expansion; coefficients are reported in unscaled units.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;

pub const BASIS_LEN: usize = 9;

/// Labels of the basis terms, in order.
pub const BASIS_NAMES: [&str; BASIS_LEN] = ["S", "S2", "F", "F2", "Y", "Y2", "SF", "SY", "FY"];

/// Powers of `S` carried by each basis term.
const S_POWER: [i32; BASIS_LEN] = [1, 2, 0, 0, 0, 0, 1, 1, 0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub s: f64,
    pub f: f64,
    pub y: f64,
}

impl State {
    pub fn new(s: f64, f: f64, y: f64) -> Self {
        Self { s, f, y }
    }

    fn is_finite(&self) -> bool {
        self.s.is_finite() && self.f.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisVector(pub [f64; BASIS_LEN]);

impl BasisVector {
    pub fn of(st: State) -> Self {
        let State { s, f, y } = st;
        Self([s, s * s, f, f * f, y, y * y, s * f, s * y, f * y])
    }
}

/// Which basis terms take part in the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisSubset {
    #[default]
    Full,
    /// Drops every term involving `Y`: `S, S^2, F, F^2, S*F`.
    WithoutPut,
}

impl BasisSubset {
    pub fn mask(self) -> [bool; BASIS_LEN] {
        match self {
            BasisSubset::Full => [true; BASIS_LEN],
            BasisSubset::WithoutPut => [true, true, true, true, false, false, true, false, false],
        }
    }
}

/// Regression weights in unscaled units, aligned with [`BASIS_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoefVector {
    pub weights: [f64; BASIS_LEN],
    pub intercept: f64,
}

impl CoefVector {
    pub fn predict(&self, st: State) -> f64 {
        let e = BasisVector::of(st).0;
        self.intercept + e.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// One basis row per state, in input order.
pub fn build_design(states: &[State]) -> Result<DesignMatrix> {
    if states.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut data = Vec::with_capacity(states.len() * BASIS_LEN);
    for (path, st) in states.iter().enumerate() {
        if !st.is_finite() {
            return Err(Error::NonFiniteState { path });
        }
        data.extend_from_slice(&BasisVector::of(*st).0);
    }
    DesignMatrix::new(states.len(), BASIS_LEN, data)
}

/// Least-squares solution of a design system.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coef: Vec<f64>,
    /// Numerical rank of the design.
    pub rank: usize,
}

/// Minimises `|E theta - y|^2`. Rank-deficient designs get the
/// minimum-norm minimiser rather than an error.
pub fn solve_ls(design: &DesignMatrix, y: &[f64]) -> Result<Solution> {
    if design.rows != y.len() {
        return Err(Error::ShapeMismatch {
            expected: design.rows,
            got: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let s = linalg::lstsq(&design.data, design.rows, design.cols, y);
    Ok(Solution {
        coef: s.coef,
        rank: s.rank,
    })
}

/// Stock-price band edges: put trigger < conversion price < call trigger.
///
/// Bands are right-closed: `(-inf, put]`, `(put, conversion]`,
/// `(conversion, call]`, `(call, inf)`, indexed 0 to 3. An infinite call
/// edge (a bond that cannot be called) leaves the top band empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdges {
    pub put: f64,
    pub conversion: f64,
    pub call: f64,
}

pub const N_BANDS: usize = 4;

impl BandEdges {
    pub fn check(&self) -> Result<()> {
        let finite = self.put.is_finite() && self.conversion.is_finite() && !self.call.is_nan();
        if !finite || !(self.put < self.conversion && self.conversion < self.call) {
            return Err(Error::InvalidParameter(alloc::format!(
                "band edges must be strictly increasing with finite put and conversion edges, got {:?}",
                self
            )));
        }
        Ok(())
    }

    pub fn band_of(&self, s: f64) -> usize {
        if s <= self.put {
            0
        } else if s <= self.conversion {
            1
        } else if s <= self.call {
            2
        } else {
            3
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    #[default]
    Unified,
    Banded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub mode: FitMode,
    pub basis: BasisSubset,
    pub intercept: bool,
    /// Bands with fewer samples reuse the pooled fit.
    pub min_band_count: usize,
    /// Reference price dividing `S` before basis expansion.
    pub scale: f64,
    /// Required for [`FitMode::Banded`].
    pub edges: Option<BandEdges>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::Unified,
            basis: BasisSubset::Full,
            intercept: false,
            min_band_count: 3 * BASIS_LEN,
            scale: 1.0,
            edges: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFit {
    pub coef: CoefVector,
    pub samples: usize,
    /// Too few samples: `coef` is the pooled fit.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandedRegression {
    pub edges: BandEdges,
    pub bands: [BandFit; N_BANDS],
    pub pooled: CoefVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Unified(CoefVector),
    Banded(BandedRegression),
}

impl Predictor {
    pub fn predict(&self, st: State) -> f64 {
        self.coef_for(st.s).predict(st)
    }

    pub fn coef_for(&self, s: f64) -> &CoefVector {
        match self {
            Predictor::Unified(c) => c,
            Predictor::Banded(b) => &b.bands[b.edges.band_of(s)].coef,
        }
    }

    /// In-sample sum of squared residuals.
    pub fn sse(&self, states: &[State], y: &[f64]) -> f64 {
        states
            .iter()
            .zip(y)
            .map(|(st, v)| {
                let r = v - self.predict(*st);
                r * r
            })
            .sum()
    }
}

fn fit_subset(states: &[State], y: &[f64], idx: Option<&[usize]>, cfg: &FitConfig) -> CoefVector {
    let mask = cfg.basis.mask();
    let active: Vec<usize> = (0..BASIS_LEN).filter(|&j| mask[j]).collect();
    let cols = active.len() + usize::from(cfg.intercept);
    let rows = idx.map_or(states.len(), <[usize]>::len);
    let mut data = Vec::with_capacity(rows * cols);
    let mut rhs = Vec::with_capacity(rows);
    let mut push = |k: usize| {
        let st = states[k];
        let e = BasisVector::of(State::new(st.s / cfg.scale, st.f, st.y)).0;
        if cfg.intercept {
            data.push(1.0);
        }
        data.extend(active.iter().map(|&j| e[j]));
        rhs.push(y[k]);
    };
    match idx {
        Some(idx) => idx.iter().for_each(|&k| push(k)),
        None => (0..states.len()).for_each(&mut push),
    }
    let sol = linalg::lstsq(&data, rows, cols, &rhs);

    let mut coef = CoefVector::default();
    let mut it = sol.coef.into_iter();
    if cfg.intercept {
        coef.intercept = it.next().unwrap_or(0.0);
    }
    for (&j, w) in active.iter().zip(it) {
        coef.weights[j] = w / libm::pow(cfg.scale, f64::from(S_POWER[j]));
    }
    coef
}

/// Fits the continuation regression of `y` on the states.
pub fn fit(states: &[State], y: &[f64], cfg: &FitConfig) -> Result<Predictor> {
    if states.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: states.len(),
            got: y.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(path) = states.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteState { path });
    }
    if !(cfg.scale > 0.0 && cfg.scale.is_finite()) {
        return Err(Error::InvalidParameter("regression scale must be positive".into()));
    }
    let pooled = fit_subset(states, y, None, cfg);
    match cfg.mode {
        FitMode::Unified => Ok(Predictor::Unified(pooled)),
        FitMode::Banded => {
            let edges = cfg
                .edges
                .ok_or_else(|| Error::InvalidParameter("banded fit needs band edges".into()))?;
            edges.check()?;
            let mut members: [Vec<usize>; N_BANDS] = Default::default();
            for (k, st) in states.iter().enumerate() {
                members[edges.band_of(st.s)].push(k);
            }
            let bands = members.map(|idx| {
                if idx.len() < cfg.min_band_count.max(1) {
                    BandFit {
                        coef: pooled,
                        samples: idx.len(),
                        fallback: true,
                    }
                } else {
                    let coef = if idx.len() == states.len() {
                        pooled
                    } else {
                        fit_subset(states, y, Some(&idx), cfg)
                    };
                    BandFit {
                        coef,
                        samples: idx.len(),
                        fallback: false,
                    }
                }
            });
            Ok(Predictor::Banded(BandedRegression {
                edges,
                bands,
                pooled,
            }))
        }
    }
}
