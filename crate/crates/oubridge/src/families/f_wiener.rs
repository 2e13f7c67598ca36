//! F-Wiener bridges: `dZ = −f(t)/(1 − F(t)) Z dt + √f(t) dB`, the Brownian
//! bridge run on the clock `F`, with
//!
//! ```text
//! cov(Z_s, Z_t) = F(s∧t) − F(s)F(t),   Q = F/(1 − F),   v = √(F(1 − F)).
//! ```

use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::process::{
    CovarianceKernel, Func, Horizon, ProcessSpec, QLimit, TailFn, TimeChangeMap,
};
use crate::quad;

/// Density `f`, distribution function `F`, and the first time `F` reaches 1.
#[derive(Clone)]
pub struct FWienerParams {
    pub density: Func,
    pub cdf: Func,
    /// `1 − F`, evaluated without cancellation when a closed form is known.
    pub survival: Func,
    pub horizon: Horizon,
    /// Optional `(ln φ, ln Q)` in log-distance to `T`.
    pub tail: Option<TailFn>,
    pub label: String,
}

impl std::fmt::Debug for FWienerParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FWienerParams")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .finish()
    }
}

impl FWienerParams {
    pub fn new(density: Func, cdf: Func, horizon: Horizon) -> Self {
        let c = cdf.clone();
        let survival: Func = Arc::new(move |t| 1.0 - c(t));
        FWienerParams { density, cdf, survival, horizon, tail: None, label: "f-wiener(custom)".into() }
    }

    /// Uniform law on `[0, T]`: the Wiener bridge on `[0, T]`.
    pub fn uniform(t_end: f64) -> Self {
        let mut p = Self::power(1.0, t_end);
        p.label = format!("f-wiener(uniform, T={t_end})");
        p
    }

    /// `F(t) = 1 − (1 − t/T)^α`, whose bridge has the α-Wiener drift.
    pub fn power(alpha: f64, t_end: f64) -> Self {
        let density: Func = Arc::new(move |t| {
            if t >= t_end {
                0.0
            } else {
                alpha / t_end * ((alpha - 1.0) * (-t / t_end).ln_1p()).exp()
            }
        });
        let cdf: Func = Arc::new(move |t| {
            if t >= t_end {
                1.0
            } else {
                -(alpha * (-t / t_end).ln_1p()).exp_m1()
            }
        });
        let survival: Func = Arc::new(move |t| {
            if t >= t_end {
                0.0
            } else {
                (alpha * (-t / t_end).ln_1p()).exp()
            }
        });
        let tail: TailFn = Arc::new(move |w| {
            let aw = alpha * w;
            Ok((-aw, aw + (-(-aw).exp_m1()).ln()))
        });
        FWienerParams {
            density,
            cdf,
            survival,
            horizon: Horizon::finite(t_end),
            tail: Some(tail),
            label: format!("f-wiener(power, alpha={alpha}, T={t_end})"),
        }
    }

    /// Exponential law with the given rate (infinite horizon).
    pub fn exponential(rate: f64, probe_max: f64) -> Self {
        FWienerParams {
            density: Arc::new(move |t| rate * (-rate * t).exp()),
            cdf: Arc::new(move |t| -(-rate * t).exp_m1()),
            survival: Arc::new(move |t| (-rate * t).exp()),
            horizon: Horizon::Infinite { probe_max },
            tail: None,
            label: format!("f-wiener(exponential, rate={rate})"),
        }
    }
}

/// Checks `F(0) = 0`, monotonicity of `F`, and `F(t) = ∫₀ᵗ f` to `10⁻⁶` on
/// probe points; returns whether `f` is nonzero at every interior probe
/// point (otherwise `β` may fail to be invertible).
fn check_consistency(p: &FWienerParams) -> Result<bool> {
    let f0 = (p.cdf)(0.0);
    if f0.abs() > 1e-12 {
        return Err(Error::Invalid(format!("F(0) must be 0, got {f0}")));
    }
    let end = p.horizon.probe_end();
    let grid: Vec<f64> = (1..256).map(|k| end * k as f64 / 256.0).collect();
    let mut prev = f0;
    let mut invertible = true;
    for &t in &grid {
        let ft = (p.cdf)(t);
        let dens = (p.density)(t);
        if !(ft.is_finite() && (0.0..=1.0).contains(&ft)) {
            return Err(Error::Invalid(format!("F({t}) = {ft} is not in [0, 1]")));
        }
        if !(dens.is_finite() && dens >= 0.0) {
            return Err(Error::Invalid(format!("f({t}) = {dens} must be a nonnegative number")));
        }
        if ft < prev {
            return Err(Error::Invalid(format!("F decreases before t = {t}")));
        }
        if dens == 0.0 {
            invertible = false;
        }
        prev = ft;
    }
    for &t in grid.iter().step_by(32) {
        let est = quad::adaptive_mixed(|u| (p.density)(u), 0.0, t, 1e-12, 1e-12, 4000)?;
        let ft = (p.cdf)(t);
        if (est.value - ft).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "F is inconsistent with f at t = {t}: F = {ft}, integral of f = {}",
                est.value
            )));
        }
    }
    Ok(invertible)
}

/// Spec, kernel and closed-form time change of the F-Wiener bridge.
/// Interior points with `F = 1` make `Q` infinite; such evaluations are
/// refused by the map.
pub fn f_wiener_spec(p: &FWienerParams) -> Result<Family> {
    let invertible = check_consistency(p)?;
    let (cdf, density) = (p.cdf.clone(), p.density.clone());
    let phi = p.survival.clone();
    let sigma: Func = Arc::new(move |t| density(t).max(0.0).sqrt());
    let spec = ProcessSpec::new(
        p.label.clone(),
        p.horizon,
        phi.clone(),
        Arc::new(|_| 0.0),
        sigma.clone(),
        0.0,
    )?;
    let q: Func = {
        let (cdf, survival) = (cdf.clone(), p.survival.clone());
        Arc::new(move |t| {
            let s = survival(t);
            if s <= 0.0 {
                f64::INFINITY
            } else {
                cdf(t) / s
            }
        })
    };
    let mut maps = TimeChangeMap::analytic(p.horizon, phi, sigma, q, QLimit::Infinite)
        .with_beta_invertible(invertible);
    if let Some(tail) = &p.tail {
        maps = maps.with_tail(tail.clone());
    }
    let kc = cdf.clone();
    let cov = move |s: f64, t: f64| {
        let (fs, ft) = (kc(s), kc(t));
        fs.min(ft) - fs * ft
    };
    let domain = (0.0, p.horizon.end());
    let kernel = CovarianceKernel::new(
        p.label.clone(),
        domain,
        p.horizon.is_finite(),
        Arc::new(cov),
        Arc::new(|_| 0.0),
    );
    Ok(Family {
        name: "f-wiener".into(),
        spec: Some(spec),
        kernel,
        maps: Some(maps),
        // φQ^{1/2+ε} = F at ε = 1/2
        epsilon: Some(0.5),
        bound_limit: Some(1.0),
        closed_form: true,
        general_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_the_wiener_bridge() {
        let fam = f_wiener_spec(&FWienerParams::uniform(1.0)).unwrap();
        let maps = fam.maps.unwrap();
        for &(s, t) in &[(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            assert!((fam.kernel.cov(s, t) - (f64::min(s, t) - s * t)).abs() < 1e-15);
        }
        assert!(maps.beta(0.5).unwrap().abs() < 1e-15);
        assert!((maps.v(0.5).unwrap().powi(2) - 0.25).abs() < 1e-15);
        assert!((maps.beta(0.25).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn power_law_drift_is_alpha_wiener() {
        let (alpha, t_end) = (2.0, 1.5);
        let p = FWienerParams::power(alpha, t_end);
        let spec = f_wiener_spec(&p).unwrap().spec.unwrap();
        for t in [0.1, 0.7, 1.2] {
            let hazard = (p.density)(t) / (1.0 - (p.cdf)(t));
            assert!((hazard - alpha / (t_end - t)).abs() < 1e-12);
            assert!((spec.log_phi_derivative(t, 1e-6) + alpha / (t_end - t)).abs() < 1e-6);
        }
    }

    #[test]
    fn inconsistent_pair_is_rejected() {
        let p = FWienerParams::new(Arc::new(|_| 2.0), Arc::new(|t| t), Horizon::finite(1.0));
        assert!(f_wiener_spec(&p).is_err());
    }

    #[test]
    fn interior_flat_density_flags_beta() {
        let f: Func = Arc::new(|t| if (0.4..0.6).contains(&t) { 0.0 } else { 1.25 });
        let cdf: Func = Arc::new(|t| {
            if t < 0.4 {
                1.25 * t
            } else if t < 0.6 {
                0.5
            } else {
                0.5 + 1.25 * (t - 0.6)
            }
        });
        let fam = f_wiener_spec(&FWienerParams::new(f, cdf, Horizon::finite(1.0))).unwrap();
        assert!(!fam.maps.unwrap().beta_invertible());
    }

    #[test]
    fn exponential_law_on_infinite_horizon() {
        let fam = f_wiener_spec(&FWienerParams::exponential(1.0, 10.0)).unwrap();
        let maps = fam.maps.unwrap();
        assert!((maps.q(2.0).unwrap() - 2f64.exp_m1()).abs() < 1e-12);
    }
}
