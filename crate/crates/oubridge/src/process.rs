//! The linear SDE family
//!
//! ```text
//! dZ_t = (φ'(t)/φ(t) Z_t + ψ(t)) dt + σ(t) dB_t,   Z_0 = ξ,
//! Z_t = φ(t) (ξ + ∫₀ᵗ ψ/φ du + ∫₀ᵗ σ/φ dB_u),
//! cov(Z_s, Z_t) = φ(s) φ(t) Q(s ∧ t),   Q(t) = ∫₀ᵗ σ²/φ² du,
//! ```
//!
//! and the scalings `β = ln Q`, `v = φ √Q` that turn the centered process
//! into `v(t) R(β(t))` with `R` the stationary OU process.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A real function of time, shareable across threads.
pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// A real function of two times.
pub type Func2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default absolute tolerance for quadrature-backed quantities.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Relative floor used alongside absolute tolerances, so that large values of
/// a divergent `Q` near `T` remain computable.
pub const QUAD_REL_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 4000;

/// Time horizon. An infinite horizon carries the upper end of its probe
/// grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    Finite { t: f64 },
    Infinite { probe_max: f64 },
}

impl Horizon {
    pub fn finite(t: f64) -> Self {
        Horizon::Finite { t }
    }

    /// `T`, or `+∞`.
    pub fn end(&self) -> f64 {
        match *self {
            Horizon::Finite { t } => t,
            Horizon::Infinite { .. } => f64::INFINITY,
        }
    }

    /// Right end of probe grids: `T` or the stored `probe_max`.
    pub fn probe_end(&self) -> f64 {
        match *self {
            Horizon::Finite { t } => t,
            Horizon::Infinite { probe_max } => probe_max,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite { .. })
    }

    fn validate(&self) -> Result<()> {
        let v = self.probe_end();
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Invalid(format!("horizon must be positive, got {v}")));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t < self.end()) {
            return Err(Error::Domain(format!("time {t} outside [0, {})", self.end())));
        }
        Ok(())
    }
}

/// 64 logarithmically spaced points in `(0, end/2)`.
pub fn delta_probe(end: f64) -> Vec<f64> {
    let hi = 0.5 * end;
    let lo = hi * 1e-8;
    (0..64)
        .map(|k| lo * (hi / lo).powf(k as f64 / 63.0))
        .collect()
}

/// Coefficients `(φ, ψ, σ)`, horizon and initial value of the SDE.
#[derive(Clone)]
pub struct ProcessSpec {
    horizon: Horizon,
    phi: Func,
    psi: Func,
    sigma: Func,
    xi: f64,
    delta: f64,
    label: String,
}

impl fmt::Debug for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessSpec")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .field("xi", &self.xi)
            .field("delta", &self.delta)
            .finish()
    }
}

impl ProcessSpec {
    /// Validates `φ(0) = 1`, positivity of `φ` on probe points, and that `σ`
    /// does not vanish on some `(0, δ)`; `δ` is recorded as the largest
    /// probe point below which every probe value of `σ` is nonzero.
    pub fn new(
        label: impl Into<String>,
        horizon: Horizon,
        phi: Func,
        psi: Func,
        sigma: Func,
        xi: f64,
    ) -> Result<Self> {
        horizon.validate()?;
        if !xi.is_finite() {
            return Err(Error::Invalid("initial value must be finite".into()));
        }
        let phi0 = phi(0.0);
        if (phi0 - 1.0).abs() > 1e-14 {
            return Err(Error::Invalid(format!("phi(0) must be 1, got {phi0}")));
        }
        let end = horizon.probe_end();
        let probe = delta_probe(end);
        let mut near_end: Vec<f64> = (1..=64)
            .map(|k| end * (1.0 - 0.5 * 10f64.powf(-(k as f64) / 8.0)))
            .collect();
        if !horizon.is_finite() {
            near_end.push(end);
        }
        for &t in probe.iter().chain(&near_end) {
            let p = phi(t);
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Invalid(format!("phi must be positive, phi({t}) = {p}")));
            }
            if !psi(t).is_finite() || !sigma(t).is_finite() {
                return Err(Error::Invalid(format!("psi or sigma not finite at t = {t}")));
            }
        }
        let mut delta = 0.0;
        for &t in &probe {
            if sigma(t) == 0.0 {
                break;
            }
            delta = t;
        }
        if delta == 0.0 {
            return Err(Error::Invalid(
                "sigma vanishes at the first probe point near 0; beta would be undefined".into(),
            ));
        }
        Ok(ProcessSpec { horizon, phi, psi, sigma, xi, delta, label: label.into() })
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }
    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }
    pub fn psi(&self, t: f64) -> f64 {
        (self.psi)(t)
    }
    pub fn sigma(&self, t: f64) -> f64 {
        (self.sigma)(t)
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn phi_fn(&self) -> Func {
        self.phi.clone()
    }
    pub fn sigma_fn(&self) -> Func {
        self.sigma.clone()
    }

    /// `φ'(t)/φ(t)` by a centered difference of `ln φ` with step `h`
    /// (one-sided when `t < h`).
    pub fn log_phi_derivative(&self, t: f64, h: f64) -> f64 {
        if t < h {
            ((self.phi)(t + h).ln() - (self.phi)(t).ln()) / h
        } else {
            ((self.phi)(t + h).ln() - (self.phi)(t - h).ln()) / (2.0 * h)
        }
    }

    /// `Q(t) = ∫₀ᵗ σ²/φ²` by adaptive quadrature.
    pub fn q_quadrature(&self, t: f64, tol: f64) -> Result<f64> {
        self.horizon.check_time(t)?;
        let phi = self.phi.clone();
        let sigma = self.sigma.clone();
        let est = quad::adaptive_mixed(
            |u| {
                let s = sigma(u);
                let p = phi(u);
                s * s / (p * p)
            },
            0.0,
            t,
            tol,
            QUAD_REL_TOL,
            MAX_PANELS,
        )?;
        Ok(est.value)
    }
}

/// `E(Z_t) = φ(t)(ξ + ∫₀ᵗ ψ/φ)`.
pub fn solve_mean(spec: &ProcessSpec, t: f64) -> Result<f64> {
    spec.horizon.check_time(t)?;
    let est = quad::adaptive(|u| spec.psi(u) / spec.phi(u), 0.0, t, DEFAULT_QUAD_TOL, MAX_PANELS)?;
    Ok(spec.phi(t) * (spec.xi + est.value))
}

/// `cov(Z_s, Z_t) = φ(s)φ(t) Q(s ∧ t)` with `Q` by quadrature.
pub fn covariance(spec: &ProcessSpec, s: f64, t: f64) -> Result<f64> {
    spec.horizon.check_time(s)?;
    spec.horizon.check_time(t)?;
    let q = spec.q_quadrature(s.min(t), DEFAULT_QUAD_TOL)?;
    Ok(spec.phi(s) * spec.phi(t) * q)
}

/// Covariance of the stationary OU process, `e^{-|a-b|/2}`.
pub fn stationary_ou_cov(a: f64, b: f64) -> f64 {
    (-0.5 * (a - b).abs()).exp()
}

/// The fixed stationary OU kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct StationaryOuKernel;

impl StationaryOuKernel {
    pub fn cov(&self, a: f64, b: f64) -> f64 {
        stationary_ou_cov(a, b)
    }
}

/// `lim_{t↑T} Q(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QLimit {
    Finite(f64),
    Infinite,
}

#[derive(Clone)]
enum QSource {
    Closed(Func),
    Quadrature,
}

/// `(ln φ(t), ln Q(t))` as a function of the log-distance `w = −ln(1 − t/T)`.
pub type TailFn = Arc<dyn Fn(f64) -> Result<(f64, f64)> + Send + Sync>;

/// The scalings `Q`, `β = ln Q`, `v = φ√Q` of the representation.
#[derive(Clone)]
pub struct TimeChangeMap {
    horizon: Horizon,
    phi: Func,
    sigma: Func,
    q: QSource,
    q_limit: QLimit,
    quad_tol: f64,
    tail: Option<TailFn>,
    beta_invertible: bool,
}

impl fmt::Debug for TimeChangeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeChangeMap")
            .field("horizon", &self.horizon)
            .field("closed_form", &self.closed_form())
            .field("q_limit", &self.q_limit)
            .field("beta_invertible", &self.beta_invertible)
            .finish()
    }
}

/// Quadrature-backed time change of `spec`; `Q_limit` is extrapolated from
/// `Q` at `T(1 − 10^{-k})`, `k = 1..7` (or `t_max·10^k` for an infinite
/// horizon): increments shrinking by a ratio below 0.95 are summed as a
/// geometric tail, otherwise the limit is declared infinite.
pub fn build_time_change(spec: &ProcessSpec, quad_tol: f64) -> Result<TimeChangeMap> {
    if !(quad_tol > 0.0) {
        return Err(Error::Invalid("quad_tol must be positive".into()));
    }
    let mut map = TimeChangeMap {
        horizon: spec.horizon,
        phi: spec.phi.clone(),
        sigma: spec.sigma.clone(),
        q: QSource::Quadrature,
        q_limit: QLimit::Infinite,
        quad_tol,
        tail: None,
        beta_invertible: true,
    };
    let points: Vec<f64> = match spec.horizon {
        Horizon::Finite { t } => (1..=7).map(|k| t * (1.0 - 10f64.powi(-k))).collect(),
        Horizon::Infinite { probe_max } => (0..=4).map(|k| probe_max * 10f64.powi(k)).collect(),
    };
    let qs = map.q_on_grid(&points)?;
    map.q_limit = extrapolate_limit(&qs);
    Ok(map)
}

fn extrapolate_limit(qs: &[f64]) -> QLimit {
    let n = qs.len();
    let d1 = qs[n - 2] - qs[n - 3];
    let d2 = qs[n - 1] - qs[n - 2];
    if d2 <= 0.0 {
        return QLimit::Finite(qs[n - 1]);
    }
    let r = d2 / d1;
    if d1 > 0.0 && r < 0.95 {
        QLimit::Finite(qs[n - 1] + d2 * r / (1.0 - r))
    } else {
        QLimit::Infinite
    }
}

fn finite_q(t: f64, q: f64) -> Result<f64> {
    if q.is_finite() {
        Ok(q)
    } else {
        Err(Error::Domain(format!("Q({t}) is not finite")))
    }
}

impl TimeChangeMap {
    /// A map with analytic `Q`.
    pub fn analytic(horizon: Horizon, phi: Func, sigma: Func, q: Func, q_limit: QLimit) -> Self {
        TimeChangeMap {
            horizon,
            phi,
            sigma,
            q: QSource::Closed(q),
            q_limit,
            quad_tol: 0.0,
            tail: None,
            beta_invertible: true,
        }
    }

    /// Attach an evaluator of `(ln φ, ln Q)` in log-distance to `T`, used by
    /// boundedness checks where `T − t` underflows in plain time.
    pub fn with_tail(mut self, tail: TailFn) -> Self {
        self.tail = Some(tail);
        self
    }

    /// Mark `β` as possibly non-invertible (σ vanishing on an interior
    /// interval was detected).
    pub fn with_beta_invertible(mut self, ok: bool) -> Self {
        self.beta_invertible = ok;
        self
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }
    pub fn closed_form(&self) -> bool {
        matches!(self.q, QSource::Closed(_))
    }
    pub fn q_limit(&self) -> QLimit {
        self.q_limit
    }
    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }
    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }
    pub fn beta_invertible(&self) -> bool {
        self.beta_invertible
    }
    pub fn phi(&self, t: f64) -> f64 {
        (self.phi)(t)
    }
    pub fn sigma(&self, t: f64) -> f64 {
        (self.sigma)(t)
    }

    fn check_quadrature_reach(&self, t: f64) -> Result<()> {
        if let (QSource::Quadrature, Horizon::Finite { t: end }) = (&self.q, self.horizon) {
            if t > end * (1.0 - 1e-8) {
                return Err(Error::Domain(format!(
                    "Q({t}) is within 1e-8·T of T and the map is quadrature-backed"
                )));
            }
        }
        Ok(())
    }

    fn integrand(&self) -> impl Fn(f64) -> f64 + '_ {
        move |u| {
            let s = (self.sigma)(u);
            let p = (self.phi)(u);
            s * s / (p * p)
        }
    }

    pub fn q(&self, t: f64) -> Result<f64> {
        self.horizon.check_time(t)?;
        match &self.q {
            QSource::Closed(q) => finite_q(t, q(t)),
            QSource::Quadrature => {
                self.check_quadrature_reach(t)?;
                Ok(quad::adaptive_mixed(self.integrand(), 0.0, t, self.quad_tol, QUAD_REL_TOL, MAX_PANELS)?
                    .value)
            }
        }
    }

    /// `Q` on an increasing grid, integrating between consecutive points.
    pub fn q_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        match &self.q {
            QSource::Closed(q) => grid
                .iter()
                .map(|&t| {
                    self.horizon.check_time(t)?;
                    finite_q(t, q(t))
                })
                .collect(),
            QSource::Quadrature => {
                let mut out = Vec::with_capacity(grid.len());
                let mut acc = 0.0;
                let mut prev = 0.0;
                let tol = self.quad_tol / grid.len().max(1) as f64;
                for &t in grid {
                    self.horizon.check_time(t)?;
                    self.check_quadrature_reach(t)?;
                    if t < prev {
                        return Err(Error::Invalid("grid must be increasing".into()));
                    }
                    acc += quad::adaptive_mixed(self.integrand(), prev, t, tol, QUAD_REL_TOL, MAX_PANELS)?
                        .value;
                    prev = t;
                    out.push(acc);
                }
                Ok(out)
            }
        }
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        let q = self.q(t)?;
        if !(q > 0.0) {
            return Err(Error::Domain(format!("beta undefined at t = {t}: Q(t) = {q}")));
        }
        Ok(q.ln())
    }

    pub fn v(&self, t: f64) -> Result<f64> {
        let q = self.q(t)?;
        Ok((self.phi)(t) * q.max(0.0).sqrt())
    }

    /// `β'(t) = σ(t)² / (φ(t)² Q(t))`.
    pub fn beta_prime(&self, t: f64) -> Result<f64> {
        let q = self.q(t)?;
        let s = (self.sigma)(t);
        let p = (self.phi)(t);
        Ok(s * s / (p * p * q))
    }

    /// Covariance implied by the map, `φ(s)φ(t)Q(s∧t)`.
    pub fn cov(&self, s: f64, t: f64) -> Result<f64> {
        Ok((self.phi)(s) * (self.phi)(t) * self.q(s.min(t))?)
    }

    /// `β⁻¹(b)` by bisection on the monotone `Q`.
    pub fn beta_inverse(&self, b: f64) -> Result<f64> {
        if !self.beta_invertible {
            return Err(Error::Domain("beta is not invertible for this map".into()));
        }
        let target = b.exp();
        if let QLimit::Finite(lim) = self.q_limit {
            if target >= lim {
                return Err(Error::Domain(format!("beta value {b} at or beyond ln Q_limit")));
            }
        }
        let mut hi = match self.horizon {
            Horizon::Finite { t } => {
                let cap = match self.q {
                    QSource::Closed(_) => 1e-15,
                    QSource::Quadrature => 1e-8,
                };
                let mut k = 1;
                loop {
                    let gap = 0.5f64.powi(k).max(cap);
                    let h = t * (1.0 - gap);
                    if self.q(h)? >= target {
                        break h;
                    }
                    if gap == cap {
                        return Err(Error::Domain(format!(
                            "beta value {b} not attained before the horizon"
                        )));
                    }
                    k += 1;
                }
            }
            Horizon::Infinite { probe_max } => {
                let mut h = probe_max;
                while self.q(h)? < target {
                    h *= 2.0;
                    if !h.is_finite() {
                        return Err(Error::Domain(format!("beta value {b} not attained")));
                    }
                }
                h
            }
        };
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.q(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `(ln φ, ln Q)` at `t = T(1 − e^{−w})`; needs a finite horizon.
    pub fn tail_log(&self, w: f64) -> Result<(f64, f64)> {
        if let Some(tail) = &self.tail {
            return tail(w);
        }
        let end = match self.horizon {
            Horizon::Finite { t } => t,
            Horizon::Infinite { .. } => {
                return Err(Error::Domain("tail evaluation needs a finite horizon".into()))
            }
        };
        let t = -end * (-w).exp_m1();
        if t >= end {
            return Err(Error::Domain(format!("log-distance {w} collapses onto T")));
        }
        Ok(((self.phi)(t).ln(), self.q(t)?.ln()))
    }
}

/// A covariance function with mean, on `[lo, hi)` or `[lo, hi]`.
#[derive(Clone)]
pub struct CovarianceKernel {
    cov: Func2,
    mean: Func,
    domain: (f64, f64),
    closed_right: bool,
    label: String,
}

impl fmt::Debug for CovarianceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovarianceKernel")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("closed_right", &self.closed_right)
            .finish()
    }
}

impl CovarianceKernel {
    pub fn new(
        label: impl Into<String>,
        domain: (f64, f64),
        closed_right: bool,
        cov: Func2,
        mean: Func,
    ) -> Self {
        CovarianceKernel { cov, mean, domain, closed_right, label: label.into() }
    }

    /// Kernel `φ(s)φ(t)Q(s∧t)` and mean from a spec and its time change.
    /// Failed evaluations surface as NaN.
    pub fn from_spec(spec: &ProcessSpec, maps: &TimeChangeMap) -> Self {
        let m = maps.clone();
        let sp = spec.clone();
        CovarianceKernel {
            cov: Arc::new(move |s, t| m.cov(s, t).unwrap_or(f64::NAN)),
            mean: Arc::new(move |t| solve_mean(&sp, t).unwrap_or(f64::NAN)),
            domain: (0.0, spec.horizon.end()),
            closed_right: false,
            label: spec.label.clone(),
        }
    }

    pub fn cov(&self, s: f64, t: f64) -> f64 {
        (self.cov)(s, t)
    }
    pub fn mean(&self, t: f64) -> f64 {
        (self.mean)(t)
    }
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
    pub fn closed_right(&self) -> bool {
        self.closed_right
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && (t < self.domain.1 || (self.closed_right && t == self.domain.1))
    }

    /// Gram matrix on `times`, symmetrized from the upper triangle.
    pub fn gram(&self, times: &[f64]) -> Result<DMatrix<f64>> {
        let n = times.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            if !self.contains(times[i]) {
                return Err(Error::Domain(format!(
                    "time {} outside the kernel domain {:?}",
                    times[i], self.domain
                )));
            }
            for j in i..n {
                let c = self.cov(times[i], times[j]);
                if !c.is_finite() {
                    return Err(Error::Numerical(format!(
                        "kernel value at ({}, {}) is not finite",
                        times[i], times[j]
                    )));
                }
                g[(i, j)] = c;
                g[(j, i)] = c;
            }
        }
        Ok(g)
    }

    /// Smallest eigenvalue of the Gram matrix on `times`.
    pub fn min_eigenvalue(&self, times: &[f64]) -> Result<f64> {
        let g = self.gram(times)?;
        Ok(g.symmetric_eigenvalues().min())
    }
}
