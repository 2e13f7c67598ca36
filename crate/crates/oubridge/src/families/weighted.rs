//! Weighted Wiener processes `Z = w B` and bridges `Z° = w B°`:
//!
//! ```text
//! process: φ = σ = w,        T = ∞,  Q = t,            Z̃ = w √t R(ln t)
//! bridge:  φ = w (1 − t), σ = w, T = 1,  Q = t/(1 − t),  Z̃ = w √(t(1 − t)) R(ln(t/(1 − t)))
//! ```

use std::sync::Arc;

use super::Family;
use crate::error::{Error, Result};
use crate::process::{CovarianceKernel, Func, Horizon, ProcessSpec, QLimit, TimeChangeMap};

#[derive(Clone)]
pub struct WeightParams {
    pub w: Func,
    pub bridge: bool,
    /// Right end of probe grids for the process on `[0, ∞)`.
    pub probe_max: f64,
    pub label: String,
}

impl std::fmt::Debug for WeightParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightParams")
            .field("label", &self.label)
            .field("bridge", &self.bridge)
            .field("probe_max", &self.probe_max)
            .finish()
    }
}

impl WeightParams {
    pub fn new(w: Func, bridge: bool) -> Self {
        WeightParams { w, bridge, probe_max: 10.0, label: "w".into() }
    }
}

pub fn weighted_spec(p: &WeightParams) -> Result<Family> {
    let w = p.w.clone();
    let w0 = w(0.0);
    if (w0 - 1.0).abs() > 1e-14 {
        return Err(Error::Invalid(format!("w(0) must be 1, got {w0}")));
    }
    let end = if p.bridge { 1.0 } else { p.probe_max };
    for k in 0..=256 {
        let t = end * k as f64 / 256.0;
        let v = w(t);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Invalid(format!("w must be positive, w({t}) = {v}")));
        }
    }
    let zero: Func = Arc::new(|_| 0.0);
    if p.bridge {
        let label = format!("weighted-bridge({})", p.label);
        let horizon = Horizon::finite(1.0);
        let wp = w.clone();
        let phi: Func = Arc::new(move |t| wp(t) * (1.0 - t));
        let spec = ProcessSpec::new(label.clone(), horizon, phi.clone(), zero.clone(), w.clone(), 0.0)?;
        let q: Func = Arc::new(|t| t / (1.0 - t));
        let wt = w.clone();
        let maps = TimeChangeMap::analytic(horizon, phi, w.clone(), q, QLimit::Infinite).with_tail(
            Arc::new(move |x| {
                let t = -(-x).exp_m1();
                Ok((wt(t).ln() - x, t.ln() + x))
            }),
        );
        let wk = w.clone();
        let cov = move |s: f64, t: f64| wk(s) * wk(t) * (s.min(t) - s * t);
        let kernel = CovarianceKernel::new(label, (0.0, 1.0), true, Arc::new(cov), zero);
        Ok(Family {
            name: "weighted".into(),
            spec: Some(spec),
            kernel,
            maps: Some(maps),
            // φQ^{1/2+ε} = w(t) t at ε = 1/2
            epsilon: Some(0.5),
            bound_limit: Some(w(1.0)),
            closed_form: true,
            general_bound: None,
        })
    } else {
        let label = format!("weighted-process({})", p.label);
        let horizon = Horizon::Infinite { probe_max: p.probe_max };
        let spec = ProcessSpec::new(label.clone(), horizon, w.clone(), zero.clone(), w.clone(), 0.0)?;
        let maps = TimeChangeMap::analytic(horizon, w.clone(), w.clone(), Arc::new(|t| t), QLimit::Infinite);
        let wk = w.clone();
        let cov = move |s: f64, t: f64| wk(s) * wk(t) * s.min(t);
        let kernel = CovarianceKernel::new(label, (0.0, f64::INFINITY), false, Arc::new(cov), zero);
        Ok(Family {
            name: "weighted".into(),
            spec: Some(spec),
            kernel,
            maps: Some(maps),
            epsilon: None,
            bound_limit: None,
            closed_form: true,
            general_bound: None,
        })
    }
}
