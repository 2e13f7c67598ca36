//! Ornstein-Uhlenbeck type bridges from `a` to `b` over `[0, T]`, built on
//! `dX = q(t) X dt + σ(t) dB` with
//!
//! ```text
//! q̄(t) = ∫₀ᵗ q,   γ(s,t) = ∫ₛᵗ e^{2(q̄(t) − q̄(u))} σ(u)² du,
//! n_{x,b}(s,t) = γ(s,t)/γ(s,T) e^{q̄(T)−q̄(t)} b + γ(t,T)/γ(s,T) e^{q̄(t)−q̄(s)} x,
//! cov(Z_s, Z_t) = e^{q̄(t)−q̄(s)} γ(0,s) γ(t,T) / γ(0,T),   s ≤ t.
//! ```
//!
//! With constant coefficients `γ(s,t) = σ² (e^{2q(t−s)} − 1)/(2q)`
//! (`σ²(t − s)` at `q = 0`).

use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::process::{CovarianceKernel, Func, Horizon, ProcessSpec, QLimit, TimeChangeMap};
use crate::quad;

/// Coefficients of the OU-type bridge. `constant` carries `(q, σ)` when both
/// are constant, which selects the closed forms.
#[derive(Clone)]
pub struct OuBridgeParams {
    pub q_fn: Func,
    pub sigma_fn: Func,
    pub a: f64,
    pub b: f64,
    pub t_end: f64,
    pub constant: Option<(f64, f64)>,
}

impl std::fmt::Debug for OuBridgeParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OuBridgeParams")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("t_end", &self.t_end)
            .field("constant", &self.constant)
            .finish()
    }
}

impl OuBridgeParams {
    pub fn constant(q: f64, sigma: f64, a: f64, b: f64, t_end: f64) -> Self {
        OuBridgeParams {
            q_fn: Arc::new(move |_| q),
            sigma_fn: Arc::new(move |_| sigma),
            a,
            b,
            t_end,
            constant: Some((q, sigma)),
        }
    }

    pub fn general(q_fn: Func, sigma_fn: Func, a: f64, b: f64, t_end: f64) -> Self {
        OuBridgeParams { q_fn, sigma_fn, a, b, t_end, constant: None }
    }
}

/// Evaluator of `q̄` and `γ`, closed-form or by nested quadrature.
#[derive(Clone)]
struct Gamma {
    q_fn: Func,
    sigma_fn: Func,
    constant: Option<(f64, f64)>,
}

impl Gamma {
    fn qbar_between(&self, s: f64, t: f64) -> f64 {
        match self.constant {
            Some((q, _)) => q * (t - s),
            None => quad::adaptive_mixed(|u| (self.q_fn)(u), s, t, 1e-15, 1e-14, 4000)
                .map(|e| e.value)
                .unwrap_or(f64::NAN),
        }
    }

    fn qbar(&self, t: f64) -> f64 {
        self.qbar_between(0.0, t)
    }

    /// `γ` over an interval of length `len` ending at `t`; the length is
    /// passed separately so that `γ(t, T)` keeps full precision as `t ↑ T`.
    fn over(&self, t: f64, len: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        match self.constant {
            Some((q, sigma)) => {
                let s2 = sigma * sigma;
                if q == 0.0 {
                    s2 * len
                } else {
                    s2 * (2.0 * q * len).exp_m1() / (2.0 * q)
                }
            }
            None => {
                let s = t - len;
                quad::adaptive_mixed(
                    |u| {
                        let sg = (self.sigma_fn)(u);
                        (2.0 * self.qbar_between(u, t)).exp() * sg * sg
                    },
                    s,
                    t,
                    1e-300,
                    1e-12,
                    4000,
                )
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
            }
        }
    }

    fn gamma(&self, s: f64, t: f64) -> f64 {
        self.over(t, t - s)
    }
}

fn validate(p: &OuBridgeParams) -> Result<()> {
    if !(p.t_end.is_finite() && p.t_end > 0.0) {
        return Err(Error::Invalid(format!("T must be positive and finite, got {}", p.t_end)));
    }
    if !(p.a.is_finite() && p.b.is_finite()) {
        return Err(Error::Invalid("a and b must be finite".into()));
    }
    for k in 0..=256 {
        let t = p.t_end * k as f64 / 256.0;
        let s = (p.sigma_fn)(t);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Invalid(format!("sigma must be nonzero and finite, sigma({t}) = {s}")));
        }
        if !(p.q_fn)(t).is_finite() {
            return Err(Error::Invalid(format!("q is not finite at t = {t}")));
        }
    }
    Ok(())
}

/// `n_{x,b}(s,t)`: the bridge mean at `t` given `Z_s = x`.
pub fn ou_bridge_mean(p: &OuBridgeParams, s: f64, t: f64, x: f64) -> Result<f64> {
    validate(p)?;
    if !(0.0 <= s && s <= t && t < p.t_end) {
        return Err(Error::Domain(format!("need 0 <= s <= t < T, got s = {s}, t = {t}")));
    }
    let g = Gamma { q_fn: p.q_fn.clone(), sigma_fn: p.sigma_fn.clone(), constant: p.constant };
    Ok(mean_with(&g, p, s, t, x))
}

fn mean_with(g: &Gamma, p: &OuBridgeParams, s: f64, t: f64, x: f64) -> f64 {
    let t_end = p.t_end;
    let g_st = g.gamma(s, t);
    let g_tt = g.over(t_end, t_end - t);
    let g_s_end = g.gamma(s, t_end);
    let b_term = if p.b == 0.0 { 0.0 } else { g_st / g_s_end * g.qbar_between(t, t_end).exp() * p.b };
    let x_term = if x == 0.0 { 0.0 } else { g_tt / g_s_end * g.qbar_between(s, t).exp() * x };
    b_term + x_term
}

/// Spec, kernel and closed-form time change of the OU-type bridge:
/// `φ = γ(t,T) e^{q̄(t)}/γ(0,T)`, `ψ = e^{q̄(T)−q̄(t)} σ² b/γ(t,T)`, `ξ = a`,
/// `Q = e^{−2q̄(t)} γ(0,t) γ(0,T)/γ(t,T)`.
pub fn ou_bridge_kernel(p: &OuBridgeParams) -> Result<Family> {
    validate(p)?;
    let t_end = p.t_end;
    let g = Gamma { q_fn: p.q_fn.clone(), sigma_fn: p.sigma_fn.clone(), constant: p.constant };
    let g0t = g.gamma(0.0, t_end);
    let qbar_t = g.qbar(t_end);
    if !(g0t > 0.0 && g0t.is_finite() && qbar_t.is_finite()) {
        return Err(Error::Numerical(format!("gamma(0, T) = {g0t} is not a positive number")));
    }

    let gp = g.clone();
    let phi: Func = Arc::new(move |t| gp.over(t_end, t_end - t) * gp.qbar(t).exp() / g0t);
    let gp = g.clone();
    let sigma_fn = p.sigma_fn.clone();
    let b = p.b;
    let psi: Func = Arc::new(move |t| {
        if b == 0.0 {
            return 0.0;
        }
        let s = sigma_fn(t);
        gp.qbar_between(t, t_end).exp() * s * s * b / gp.over(t_end, t_end - t)
    });
    let label = match p.constant {
        Some((q, s)) => format!("ou-bridge(q={q}, sigma={s}, a={}, b={}, T={t_end})", p.a, p.b),
        None => format!("ou-bridge(a={}, b={}, T={t_end})", p.a, p.b),
    };
    let horizon = Horizon::finite(t_end);
    let spec = ProcessSpec::new(label.clone(), horizon, phi.clone(), psi, p.sigma_fn.clone(), p.a)?;

    let gq = g.clone();
    let q: Func = Arc::new(move |t| {
        (-2.0 * gq.qbar(t)).exp() * gq.gamma(0.0, t) * g0t / gq.over(t_end, t_end - t)
    });
    let maps = TimeChangeMap::analytic(horizon, phi, p.sigma_fn.clone(), q, QLimit::Infinite);
    let maps = if p.constant.is_some() {
        let gt = g.clone();
        maps.with_tail(Arc::new(move |w| {
            let d = t_end * (-w).exp();
            let t = t_end - d;
            let g_tail = gt.over(t_end, d);
            let qb = gt.qbar(t);
            let ln_phi = g_tail.ln() + qb - g0t.ln();
            let ln_q = -2.0 * qb + gt.gamma(0.0, t).ln() + g0t.ln() - g_tail.ln();
            Ok((ln_phi, ln_q))
        }))
    } else {
        maps
    };

    let gk = g.clone();
    let cov = move |s: f64, t: f64| {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        gk.qbar_between(s, t).exp() * gk.gamma(0.0, s) * gk.over(t_end, t_end - t) / g0t
    };
    let gm = g.clone();
    let pm = p.clone();
    let mean: Func = Arc::new(move |t| mean_with(&gm, &pm, 0.0, t, pm.a));
    let kernel = CovarianceKernel::new(label, (0.0, t_end), false, Arc::new(cov), mean);
    // φQ = e^{q̄(t)} ∫₀ᵗ e^{−2q̄} σ², bounded on [0, T) with limit e^{−q̄(T)} γ(0,T)
    let bound_limit = (-qbar_t).exp() * g0t;
    Ok(Family {
        name: "ou-bridge".into(),
        spec: Some(spec),
        kernel,
        maps: Some(maps),
        epsilon: Some(0.5),
        bound_limit: Some(bound_limit),
        closed_form: p.constant.is_some(),
        general_bound: None,
    })
}
