//! α-Wiener bridges `dZ = −α Z/(T − t) dt + dB` and their time-dependent
//! generalization with `α(t)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Family;
use crate::error::{Error, Result};
use crate::process::{
    build_time_change, CovarianceKernel, Func, Horizon, ProcessSpec, QLimit, TimeChangeMap,
};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaWienerParams {
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
}

fn check_horizon(t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Invalid(format!("T must be positive and finite, got {t_end}")));
    }
    Ok(())
}

/// `Q(t) = ∫₀ᵗ (1 − u/T)^{−2α} du`, written through `ln(1 − t/T)` so that
/// the α = 1/2 branch `T ln(T/(T − t))` is the continuous limit.
fn alpha_q(alpha: f64, t_end: f64, t: f64) -> f64 {
    let lx = (-t / t_end).ln_1p();
    let c = 1.0 - 2.0 * alpha;
    if c == 0.0 {
        -t_end * lx
    } else {
        -t_end * (c * lx).exp_m1() / c
    }
}

/// `ln Q` at log-distance `w = −ln(1 − t/T)`.
fn alpha_ln_q_tail(alpha: f64, t_end: f64, w: f64) -> f64 {
    let c = 1.0 - 2.0 * alpha;
    if c == 0.0 {
        (t_end * w).ln()
    } else if c > 0.0 {
        t_end.ln() + (-(-c * w).exp_m1()).ln() - c.ln()
    } else {
        let d = -c;
        t_end.ln() + d * w + (-(-d * w).exp_m1()).ln() - d.ln()
    }
}

/// Spec, kernel and closed-form time change of the α-Wiener bridge.
///
/// The kernel is the two-branch display
/// `(T−s)^α (T−t)^α (T^{1−2α} − (T−s∧t)^{1−2α})/(1−2α)` for α ≠ 1/2 and
/// `√((T−s)(T−t)) ln(T/(T−s∧t))` for α = 1/2.
pub fn alpha_wiener_spec(p: &AlphaWienerParams) -> Result<Family> {
    check_horizon(p.t_end)?;
    if !p.alpha.is_finite() {
        return Err(Error::Invalid("alpha must be finite".into()));
    }
    let (alpha, t_end) = (p.alpha, p.t_end);
    let phi: Func = Arc::new(move |t| (alpha * (-t / t_end).ln_1p()).exp());
    let zero: Func = Arc::new(|_| 0.0);
    let one: Func = Arc::new(|_| 1.0);
    let label = format!("alpha-wiener(alpha={alpha}, T={t_end})");
    let horizon = Horizon::finite(t_end);
    let spec = ProcessSpec::new(label.clone(), horizon, phi.clone(), zero.clone(), one.clone(), 0.0)?;

    let cov = move |s: f64, t: f64| {
        let m = s.min(t);
        if alpha == 0.5 {
            ((t_end - s) * (t_end - t)).sqrt() * (t_end / (t_end - m)).ln()
        } else {
            let c = 1.0 - 2.0 * alpha;
            (t_end - s).powf(alpha) * (t_end - t).powf(alpha) * (t_end.powf(c) - (t_end - m).powf(c)) / c
        }
    };
    let kernel = CovarianceKernel::new(label, (0.0, t_end), false, Arc::new(cov), zero);
    let q_limit = if alpha < 0.5 {
        QLimit::Finite(t_end / (1.0 - 2.0 * alpha))
    } else {
        QLimit::Infinite
    };
    let maps = TimeChangeMap::analytic(
        horizon,
        phi,
        one,
        Arc::new(move |t| alpha_q(alpha, t_end, t)),
        q_limit,
    )
    .with_tail(Arc::new(move |w| Ok((-alpha * w, alpha_ln_q_tail(alpha, t_end, w)))));
    let (epsilon, bound_limit) = match boundedness_epsilon(p) {
        Ok((e, l)) => (Some(e), Some(l)),
        Err(_) => (None, None),
    };
    Ok(Family {
        name: "alpha-wiener".into(),
        spec: Some(spec),
        kernel,
        maps: Some(maps),
        epsilon,
        bound_limit,
        closed_form: true,
        general_bound: None,
    })
}

/// ε with `φ Q^{1/2+ε}` bounded, and the limit of that function at `T`:
/// ε = 1/2 with limit 0 for 0 < α ≤ 1/2; ε = 1/(2(2α−1)) with limit
/// `(2α−1)^{−α/(2α−1)} T^{α/(2α−1)}` for α > 1/2.
pub fn boundedness_epsilon(p: &AlphaWienerParams) -> Result<(f64, f64)> {
    check_horizon(p.t_end)?;
    let a = p.alpha;
    if !(a > 0.0) {
        return Err(Error::Invalid(format!(
            "alpha = {a} has no continuous extension to T; boundedness needs alpha > 0"
        )));
    }
    if a <= 0.5 {
        Ok((0.5, 0.0))
    } else {
        let k = 2.0 * a - 1.0;
        Ok((1.0 / (2.0 * k), k.powf(-a / k) * p.t_end.powf(a / k)))
    }
}

/// Parameters of the general α-Wiener bridge `dZ = −α(t) Z/(T − t) dt + dB`.
#[derive(Clone)]
pub struct GeneralAlphaParams {
    pub alpha_fn: Func,
    pub t_end: f64,
    /// `lim_{t↑T} α(t)`, when it exists.
    pub alpha_at_t: Option<f64>,
    /// Explicit `(δ₁, δ₂)`; chosen internally when absent.
    pub deltas: Option<(f64, f64)>,
}

impl std::fmt::Debug for GeneralAlphaParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralAlphaParams")
            .field("t_end", &self.t_end)
            .field("alpha_at_t", &self.alpha_at_t)
            .field("deltas", &self.deltas)
            .finish()
    }
}

/// Constants of the boundedness argument for the general α-Wiener bridge.
///
/// With `δ₁ ≤ α ≤ δ₂` on `[t₀, T)`:
/// `φ Q^{1/2+ε} ≤ C₃ (C₁ r^{2δ₁/(2ε+1)} + C₂/(2δ₂−1) (T−t₀)^{2δ₂−2δ₁/(2ε+1)} (T−t)^{κ})^{1/2+ε}`
/// where `r = (T−t)/(T−t₀)` and `κ = 1 − 2δ₂ + 2δ₁/(2ε+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralAlphaBound {
    pub alpha_at_t: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub epsilon: f64,
    /// κ above; zero (to rounding) for the ε of the α(T) ≥ 1/2 branch.
    pub exponent: f64,
    pub t0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Supremum of the right-hand side over `[t₀, T)`.
    pub sup_bound: Option<f64>,
}

/// `A(w) = ∫₀ᵗ α(u)/(T−u) du` at `w = −ln(1 − t/T)`, computed as
/// `∫₀^w α(T(1 − e^{−x})) dx`.
#[derive(Clone)]
struct AlphaIntegral {
    alpha_fn: Func,
    t_end: f64,
}

impl AlphaIntegral {
    fn at_logdist(&self, w: f64) -> Result<f64> {
        let a = self.alpha_fn.clone();
        let t_end = self.t_end;
        Ok(quad::adaptive_mixed(move |x| a(-t_end * (-x).exp_m1()), 0.0, w, 1e-14, 1e-14, 4000)?.value)
    }

    fn at_time(&self, t: f64) -> Result<f64> {
        self.at_logdist(-(-t / self.t_end).ln_1p())
    }

    /// `ln Q(w) = ln(T ∫₀^w e^{2A(x) − x} dx)`, shifted to avoid overflow.
    fn ln_q_logdist(&self, w: f64) -> Result<f64> {
        if w <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let g = |x: f64| -> Result<f64> { Ok(2.0 * self.at_logdist(x)? - x) };
        let mut shift = 0.0f64;
        for k in 0..=32 {
            shift = shift.max(g(w * k as f64 / 32.0)?);
        }
        let mut failure = None;
        let est = quad::adaptive_mixed(
            |x| match g(x) {
                Ok(v) => (v - shift).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            w,
            1e-300,
            1e-12,
            4000,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(self.t_end.ln() + shift + est.value.ln())
    }
}

fn choose_deltas(alpha_at_t: f64) -> (f64, f64) {
    let gap = (0.01 * alpha_at_t).min(0.2);
    let d1 = alpha_at_t - gap;
    let mut d2 = alpha_at_t + gap;
    if alpha_at_t < 0.5 {
        d2 = d2.min(0.5 * (alpha_at_t + 0.5));
    }
    (d1, d2)
}

/// Spec and quadrature-backed time change of the general α-Wiener bridge,
/// with the boundedness constants when `α(T) > 0` is supplied.
///
/// `δ₁, δ₂` default to `α(T)(1 ∓ 10⁻²)` (half-gap capped at 0.2 so that
/// `δ₂ − δ₁ < 1/2`; `δ₂` is kept below 1/2 when `α(T) < 1/2`). `t₀` is the
/// smallest point of a 1001-point grid accumulating at `T` after which
/// `δ₁ ≤ α ≤ δ₂` holds on every grid point.
pub fn general_alpha_spec(p: &GeneralAlphaParams) -> Result<Family> {
    check_horizon(p.t_end)?;
    let t_end = p.t_end;
    let integral = AlphaIntegral { alpha_fn: p.alpha_fn.clone(), t_end };
    let ai = integral.clone();
    let phi: Func = Arc::new(move |t| {
        if t == 0.0 {
            return 1.0;
        }
        ai.at_time(t).map(|a| (-a).exp()).unwrap_or(f64::NAN)
    });
    let zero: Func = Arc::new(|_| 0.0);
    let one: Func = Arc::new(|_| 1.0);
    let spec = ProcessSpec::new(
        format!("general-alpha-wiener(T={t_end})"),
        Horizon::finite(t_end),
        phi,
        zero,
        one,
        0.0,
    )?;
    let tail_integral = integral.clone();
    let maps = build_time_change(&spec, 1e-12)?.with_tail(Arc::new(move |w| {
        Ok((-tail_integral.at_logdist(w)?, tail_integral.ln_q_logdist(w)?))
    }));
    let kernel = CovarianceKernel::from_spec(&spec, &maps);

    let bound = match p.alpha_at_t {
        Some(a_t) if a_t > 0.0 => Some(general_bound(p, a_t, &integral, &maps)?),
        Some(a_t) => {
            return Err(Error::Invalid(format!("alpha(T) = {a_t} must be positive")));
        }
        None => None,
    };
    let family = Family {
        name: "general-alpha-wiener".into(),
        spec: Some(spec),
        kernel,
        maps: Some(maps),
        epsilon: bound.map(|b| b.epsilon),
        bound_limit: None,
        closed_form: false,
        general_bound: bound,
    };
    Ok(family)
}

fn general_bound(
    p: &GeneralAlphaParams,
    a_t: f64,
    integral: &AlphaIntegral,
    maps: &TimeChangeMap,
) -> Result<GeneralAlphaBound> {
    let (d1, d2) = match p.deltas {
        Some((d1, d2)) => {
            if !(0.0 < d1 && d1 < a_t && a_t < d2 && d2 < d1 + 0.5) {
                return Err(Error::Invalid(format!(
                    "deltas must satisfy 0 < d1 < alpha(T) < d2 < d1 + 1/2, got ({d1}, {d2})"
                )));
            }
            (d1, d2)
        }
        None => choose_deltas(a_t),
    };
    let epsilon = if a_t >= 0.5 {
        (1.0 + 2.0 * (d1 - d2)) / (2.0 * (2.0 * d2 - 1.0))
    } else {
        0.5
    };
    let exponent = 1.0 - 2.0 * d2 + 2.0 * d1 / (2.0 * epsilon + 1.0);
    let t_end = p.t_end;
    let grid: Vec<f64> = (0..=1000)
        .map(|k| -t_end * (-12.0 * k as f64 / 1000.0).exp_m1())
        .collect();
    let inside: Vec<bool> = grid
        .iter()
        .map(|&t| {
            let a = (p.alpha_fn)(t);
            d1 <= a && a <= d2
        })
        .collect();
    let t0 = (0..grid.len())
        .find(|&i| i > 0 && inside[i..].iter().all(|&b| b))
        .map(|i| grid[i]);
    let mut bound = GeneralAlphaBound {
        alpha_at_t: a_t,
        delta1: d1,
        delta2: d2,
        epsilon,
        exponent,
        t0,
        c1: None,
        c2: None,
        c3: None,
        sup_bound: None,
    };
    if let (Some(t0), true) = (t0, a_t >= 0.5) {
        let a0 = integral.at_time(t0)?;
        let c1 = maps.q(t0)?;
        let c2 = (2.0 * a0).exp();
        let c3 = (-a0).exp();
        let kappa = if exponent.abs() < 1e-12 { 0.0 } else { exponent };
        if kappa >= 0.0 {
            let inner = c1
                + c2 / (2.0 * d2 - 1.0)
                    * (t_end - t0).powf(2.0 * d2 - 2.0 * d1 / (2.0 * epsilon + 1.0) + kappa);
            bound.sup_bound = Some(c3 * inner.powf(0.5 + epsilon));
        }
        bound.c1 = Some(c1);
        bound.c2 = Some(c2);
        bound.c3 = Some(c3);
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wiener_bridge_special_case() {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha: 1.0, t_end: 1.0 }).unwrap();
        for &(s, t) in &[(0.1, 0.3), (0.25, 0.5), (0.6, 0.9), (0.7, 0.2)] {
            let want = f64::min(s, t) - s * t;
            assert!((fam.kernel.cov(s, t) - want).abs() < 1e-15);
        }
        assert!(fam.maps.as_ref().unwrap().beta(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn half_alpha_variance() {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha: 0.5, t_end: 1.0 }).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let want: f64 = (1.0 - t) * (-(1.0f64 - t).ln());
            assert!((fam.kernel.cov(t, t) - want).abs() < 1e-15);
        }
        let t = 1.0 - (-1f64).exp();
        assert!(fam.maps.unwrap().beta(t).unwrap().abs() < 1e-14);
    }

    #[test]
    fn epsilon_table() {
        let e = |a: f64| boundedness_epsilon(&AlphaWienerParams { alpha: a, t_end: 1.0 }).unwrap();
        assert_eq!(e(0.25), (0.5, 0.0));
        assert_eq!(e(0.5), (0.5, 0.0));
        assert_eq!(e(1.0), (0.5, 1.0));
        let (eps, lim) = e(2.0);
        assert!((eps - 1.0 / 6.0).abs() < 1e-15);
        assert!((lim - 3f64.powf(-2.0 / 3.0)).abs() < 1e-15);
        assert!(boundedness_epsilon(&AlphaWienerParams { alpha: 0.0, t_end: 1.0 }).is_err());
    }

    #[test]
    fn tail_form_matches_time_form() {
        for alpha in [0.25, 0.5, 1.0, 2.0] {
            let fam = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end: 1.5 }).unwrap();
            let maps = fam.maps.unwrap();
            for w in [0.1f64, 1.0, 5.0] {
                let t = -1.5 * (-w).exp_m1();
                let (lp, lq) = maps.tail_log(w).unwrap();
                assert!((lp - maps.phi(t).ln()).abs() < 1e-12);
                assert!((lq - maps.q(t).unwrap().ln()).abs() < 1e-12, "alpha={alpha} w={w}");
            }
        }
    }

    #[test]
    fn general_alpha_with_constant_alpha_reproduces_alpha_wiener() {
        for alpha in [0.3, 1.0, 2.0] {
            let p = GeneralAlphaParams {
                alpha_fn: Arc::new(move |_| alpha),
                t_end: 1.0,
                alpha_at_t: None,
                deltas: None,
            };
            let fam = general_alpha_spec(&p).unwrap();
            let closed = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end: 1.0 }).unwrap();
            let (m1, m2) = (fam.maps.unwrap(), closed.maps.unwrap());
            for t in [0.05, 0.3, 0.6, 0.9] {
                let q1 = m1.q(t).unwrap();
                let q2 = m2.q(t).unwrap();
                assert!((q1 - q2).abs() < 1e-10 * q2.max(1.0), "alpha={alpha} t={t}");
                assert!((m1.phi(t) - m2.phi(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_deltas_give_zero_exponent() {
        let p = GeneralAlphaParams {
            alpha_fn: Arc::new(|t| 1.0 + t),
            t_end: 1.0,
            alpha_at_t: Some(2.0),
            deltas: Some((1.9, 2.2)),
        };
        let b = general_alpha_spec(&p).unwrap().general_bound.unwrap();
        assert!((b.epsilon - 0.4 / 6.8).abs() < 1e-15);
        // 2ε + 1 = 2δ₁/(2δ₂ − 1), so κ vanishes identically
        assert!(b.exponent.abs() < 1e-12);
        assert!(general_alpha_spec(&GeneralAlphaParams { deltas: Some((1.9, 2.5)), ..p }).is_err());
    }
}
