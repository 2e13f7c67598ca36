//! Supremum location of a standardized Gauss–Markov process.
//!
//! `Z*_t = (Z_t − E Z_t)/√var Z_t = R(β(t))`, so on `[t₁, t₂]`
//!
//! ```text
//! τ_{Z*,[t₁,t₂]} = β⁻¹(τ_{R,[β(t₁),β(t₂)]}) ≗ β⁻¹(β(t₁) + τ_{R,[0,L]}),   L = β(t₂) − β(t₁),
//! f_{τ_{Z*}}(t) = f_{τ_{R,[0,L]}}(β(t) − β(t₁)) β'(t).
//! ```

use serde::Serialize;

use super::density::{SupLocationConfig, SupLocationSolver};
use crate::error::{Error, Result};
use crate::process::{Horizon, TimeChangeMap};
use crate::quad::gauss_legendre;

/// A time-change map restricted to `[t₁, t₂]`.
#[derive(Debug, Clone)]
pub struct StandardizedProcessMap {
    pub label: String,
    pub maps: TimeChangeMap,
    pub t1: f64,
    pub t2: f64,
}

impl StandardizedProcessMap {
    pub fn new(label: impl Into<String>, maps: TimeChangeMap, t1: f64, t2: f64) -> Result<Self> {
        let end = match maps.horizon() {
            Horizon::Finite { t } => t,
            Horizon::Infinite { .. } => f64::INFINITY,
        };
        if !(t1.is_finite() && t2.is_finite() && 0.0 < t1 && t1 <= t2 && t2 < end) {
            return Err(Error::Invalid(format!("interval [{t1}, {t2}] must satisfy 0 < t1 <= t2 < T = {end}")));
        }
        Ok(StandardizedProcessMap { label: label.into(), maps, t1, t2 })
    }
}

/// The OU interval of a [`StandardizedProcessMap`] and the pullback `β⁻¹`.
#[derive(Debug, Clone)]
pub struct ArgmaxReduction {
    pub t1: f64,
    pub t2: f64,
    pub ou_interval: (f64, f64),
    maps: TimeChangeMap,
}

impl ArgmaxReduction {
    /// `L = β(t₂) − β(t₁)`.
    pub fn length(&self) -> f64 {
        self.ou_interval.1 - self.ou_interval.0
    }

    /// `β⁻¹(β(t₁) + r)` for `r ∈ [0, L]`.
    pub fn pullback(&self, r: f64) -> Result<f64> {
        let len = self.length();
        if !(r >= 0.0 && r <= len) {
            return Err(Error::Invalid(format!("OU offset {r} outside [0, {len}]")));
        }
        if r == 0.0 {
            return Ok(self.t1);
        }
        if r == len {
            return Ok(self.t2);
        }
        self.maps.beta_inverse(self.ou_interval.0 + r)
    }

    /// `β(t) − β(t₁)`.
    pub fn ou_offset(&self, t: f64) -> Result<f64> {
        Ok(self.maps.beta(t)? - self.ou_interval.0)
    }

    pub fn beta_prime(&self, t: f64) -> Result<f64> {
        self.maps.beta_prime(t)
    }
}

/// Probes `β' > 0` on `[t₁, t₂]` and returns the induced OU interval.
pub fn reduce_argmax(map: &StandardizedProcessMap) -> Result<ArgmaxReduction> {
    if !map.maps.beta_invertible() {
        return Err(Error::Domain(format!("beta of {} is not invertible", map.label)));
    }
    let (t1, t2) = (map.t1, map.t2);
    if t2 > t1 {
        for k in 0..=64 {
            let t = t1 + (t2 - t1) * k as f64 / 64.0;
            let d = map.maps.beta_prime(t)?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("beta is not strictly increasing near t = {t} (beta' = {d})")));
            }
        }
    }
    let b1 = map.maps.beta(t1)?;
    let b2 = if t2 == t1 { b1 } else { map.maps.beta(t2)? };
    Ok(ArgmaxReduction { t1, t2, ou_interval: (b1, b2), maps: map.maps.clone() })
}

/// Pulled-back density on `[t₁, t₂]`.
#[derive(Debug, Clone, Serialize)]
pub struct StandardizedArgmaxDensity {
    pub t1: f64,
    pub t2: f64,
    pub ou_interval: (f64, f64),
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    /// `f_{τ_R}` at the matching OU offsets.
    pub ou_f: Vec<f64>,
    pub residual: Vec<f64>,
    pub flagged: Vec<bool>,
    /// `∫ f_{τ_{Z*}}` over `[t₁, t₂]` and `∫ f_{τ_R}` over `[0, L]`.
    pub mass: f64,
    pub ou_mass: f64,
}

impl StandardizedArgmaxDensity {
    /// CSV with columns `t,f,ou_offset_density,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f,ou_density,residual\n");
        for i in 0..self.t.len() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", self.t[i], self.f[i], self.ou_f[i], self.residual[i]));
        }
        out
    }
}

/// Solver for the pulled-back density of one reduction.
pub struct StandardizedArgmaxSolver {
    pub reduction: ArgmaxReduction,
    pub ou: SupLocationSolver,
}

impl StandardizedArgmaxSolver {
    pub fn new(map: &StandardizedProcessMap, config: SupLocationConfig) -> Result<Self> {
        let reduction = reduce_argmax(map)?;
        if !(reduction.length() > 0.0) {
            return Err(Error::Invalid(format!(
                "degenerate interval [{}, {}]: the supremum location is t1 almost surely",
                map.t1, map.t2
            )));
        }
        let ou = SupLocationSolver::new(reduction.length(), config)?;
        Ok(StandardizedArgmaxSolver { reduction, ou })
    }

    /// `(f_{τ_{Z*}}(t), f_{τ_R}(β(t) − β(t₁)), residual)`.
    pub fn density_parts(&self, t: f64) -> Result<(f64, f64, f64)> {
        let r = self.reduction.ou_offset(t)?;
        let (f, g) = self.ou.density_pair(r)?;
        let d = self.reduction.beta_prime(t)?;
        Ok((f * d, f, (f - g).abs() * d))
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        Ok(self.density_parts(t)?.0)
    }

    /// `∫_a^b f_{τ_{Z*}}` with square-root substitutions at both ends.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let (t1, t2) = (self.reduction.t1, self.reduction.t2);
        if !(t1 <= a && a < b && b <= t2) {
            return Err(Error::Invalid(format!("mass window [{a}, {b}] not inside [{t1}, {t2}]")));
        }
        let mid = 0.5 * (a + b);
        let (gx, gw) = gauss_legendre(self.ou.config().mass_nodes);
        let half = (mid - a).sqrt();
        let mut total = 0.0;
        for (g, w) in gx.iter().zip(&gw) {
            let sg = 0.5 * (g + 1.0) * half;
            let wt = 0.5 * w * half * 2.0 * sg;
            total += wt * (self.density(a + sg * sg)? + self.density(b - sg * sg)?);
        }
        Ok(total)
    }
}

/// `f_{τ_{Z*}}` on `s_grid ⊂ (t₁, t₂)`.
pub fn argmax_density_of_standardized(
    map: &StandardizedProcessMap,
    s_grid: &[f64],
    config: SupLocationConfig,
) -> Result<StandardizedArgmaxDensity> {
    let solver = StandardizedArgmaxSolver::new(map, config)?;
    let red = &solver.reduction;
    let mut t = Vec::with_capacity(s_grid.len());
    let mut f = Vec::with_capacity(s_grid.len());
    let mut ou_f = Vec::with_capacity(s_grid.len());
    let mut residual = Vec::with_capacity(s_grid.len());
    let mut flagged = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        if !(s > red.t1 && s < red.t2) {
            return Err(Error::Invalid(format!("grid point {s} outside ({}, {})", red.t1, red.t2)));
        }
        let (fz, fr, res) = solver.density_parts(s)?;
        t.push(s);
        f.push(fz);
        ou_f.push(fr);
        residual.push(res);
        flagged.push(res > config.residual_tol * fz.abs().max(1.0));
    }
    Ok(StandardizedArgmaxDensity {
        t1: red.t1,
        t2: red.t2,
        ou_interval: red.ou_interval,
        t,
        f,
        ou_f,
        residual,
        flagged,
        mass: solver.mass(red.t1, red.t2)?,
        ou_mass: solver.ou.mass(0.0, red.length())?,
    })
}
