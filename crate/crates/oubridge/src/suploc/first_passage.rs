//! First-passage density `n_x(u, y)` of the stationary OU process
//! `dR = −R/2 du + dW` from `x` to a level `y > x`.
//!
//! The Laplace transform of the passage time at `λ = iα/2` is
//! `L(α) = Ĥ_{−iα}(−x/√2) / Ĥ_{−iα}(−y/√2)`, and for `u > 0`
//!
//! ```text
//! n_x(u, y) = (1/π) ∫₀^∞ cos(uα/2) Re L(α) dα,
//! ∫₀^U n_x(u, y) du = (1/π) ∫₀^∞ (2/α) sin(Uα/2) Re L(α) dα.
//! ```
//!
//! `Re L` is tabulated once per `(x, y)` on Gauss–Legendre panels of width
//! `min(4π/u_max, 2)`, graded geometrically towards `α = 0`. Panels are
//! appended until `|L|` stays below `trunc_tol` on three consecutive panels;
//! `|L|` decays like `exp(−(y − x)√(α/2))`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::hermite::{ln_hermite_hat, HERMITE_TOL};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FirstPassageConfig {
    /// Largest passage time the α-panels resolve.
    pub u_max: f64,
    /// Truncation threshold on `|L(α)|`.
    pub trunc_tol: f64,
    /// Largest admissible α.
    pub alpha_cap: f64,
    pub nodes_per_panel: usize,
    pub hermite_tol: f64,
    /// Largest negative quadrature noise clipped to zero.
    pub neg_tol: f64,
    /// `|Ĥ(−y/√2)|²` below this floor at a node is an error. The ratio is
    /// formed from logarithms, so `0` is safe when the level `y < 0` sits
    /// close to `x` and the table reaches large α.
    pub denominator_floor: f64,
}

impl Default for FirstPassageConfig {
    fn default() -> Self {
        FirstPassageConfig {
            u_max: 8.0,
            trunc_tol: 1e-12,
            alpha_cap: 1e5,
            nodes_per_panel: 16,
            hermite_tol: HERMITE_TOL,
            neg_tol: 1e-6,
            denominator_floor: 1e-30,
        }
    }
}

/// Tabulated `Re L(α)` for one pair `(x, y)`.
#[derive(Debug, Clone)]
pub struct FirstPassageDensity {
    pub x: f64,
    pub y: f64,
    pub config: FirstPassageConfig,
    alpha: Vec<f64>,
    weight: Vec<f64>,
    re_l: Vec<f64>,
}

/// `L(α)` for the passage from `x` to `y`.
pub fn passage_laplace(x: f64, y: f64, alpha: f64, tol: f64) -> Result<Complex64> {
    passage_laplace_floor(x, y, alpha, tol, FirstPassageConfig::default().denominator_floor)
}

fn passage_laplace_floor(x: f64, y: f64, alpha: f64, tol: f64, floor: f64) -> Result<Complex64> {
    let nu = Complex64::new(0.0, -alpha);
    let num = ln_hermite_hat(nu, -x / SQRT_2, tol)?;
    let den = ln_hermite_hat(nu, -y / SQRT_2, tol)?;
    if floor > 0.0 && 2.0 * den.re < floor.ln() {
        return Err(Error::Numerical(format!(
            "Hermite denominator |H|² = {:e} below {floor:e} at alpha = {alpha}",
            (2.0 * den.re).exp()
        )));
    }
    Ok((num - den).exp())
}

impl FirstPassageDensity {
    pub fn new(x: f64, y: f64, config: FirstPassageConfig) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && x < y) {
            return Err(Error::Invalid(format!("first passage needs finite x < y, got x = {x}, y = {y}")));
        }
        let c = config;
        if !(c.u_max > 0.0
            && c.trunc_tol > 0.0
            && c.alpha_cap > 0.0
            && c.nodes_per_panel > 0
            && c.neg_tol >= 0.0
            && c.denominator_floor >= 0.0)
        {
            return Err(Error::Invalid(format!("invalid first-passage configuration {c:?}")));
        }
        let pw = (4.0 * PI / c.u_max).min(2.0);
        let (gx, gw) = gauss_legendre(c.nodes_per_panel);
        let mut edges = vec![0.0];
        edges.extend((0..=20).map(|k| pw * 1e-8f64.powf(1.0 - k as f64 / 20.0)));
        let panel_nodes = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
            gx.iter().zip(&gw).map(|(&g, &w)| (lo + 0.5 * (g + 1.0) * (hi - lo), 0.5 * w * (hi - lo))).collect()
        };
        let eval_panel = |lo: f64, hi: f64| -> Result<Vec<(f64, f64, Complex64)>> {
            panel_nodes(lo, hi)
                .into_par_iter()
                .map(|(a, w)| Ok((a, w, passage_laplace_floor(x, y, a, c.hermite_tol, c.denominator_floor)?)))
                .collect()
        };
        let mut alpha = Vec::new();
        let mut weight = Vec::new();
        let mut re_l = Vec::new();
        let mut push = |nodes: Vec<(f64, f64, Complex64)>| -> f64 {
            let mut peak = 0.0f64;
            for (a, w, l) in nodes {
                alpha.push(a);
                weight.push(w);
                re_l.push(l.re);
                peak = peak.max(l.norm());
            }
            peak
        };
        for win in edges.windows(2) {
            push(eval_panel(win[0], win[1])?);
        }
        let mut quiet = 0;
        let mut lo = pw;
        while quiet < 3 {
            let hi = lo + pw;
            if hi > c.alpha_cap {
                let last = *re_l.last().unwrap_or(&f64::NAN);
                return Err(Error::Quadrature { achieved: last.abs(), requested: c.trunc_tol });
            }
            // Panels are batched so the parallel map has enough work.
            let batch: Vec<(f64, f64)> = (0..8).map(|k| (lo + k as f64 * pw, lo + (k + 1) as f64 * pw)).collect();
            let mut results = Vec::with_capacity(batch.len());
            for (a, b) in batch {
                if quiet >= 3 || b > c.alpha_cap {
                    break;
                }
                let panel = eval_panel(a, b)?;
                let peak = panel.iter().map(|p| p.2.norm()).fold(0.0, f64::max);
                quiet = if peak < c.trunc_tol { quiet + 1 } else { 0 };
                results.push(panel);
                lo = b;
            }
            for r in results {
                push(r);
            }
        }
        Ok(FirstPassageDensity { x, y, config, alpha, weight, re_l })
    }

    /// Largest α in the table.
    pub fn alpha_max(&self) -> f64 {
        self.alpha.last().copied().unwrap_or(0.0)
    }

    pub fn nodes(&self) -> usize {
        self.alpha.len()
    }

    /// The α-integral before clipping.
    pub fn raw_density(&self, u: f64) -> f64 {
        let s: f64 = self
            .alpha
            .iter()
            .zip(&self.weight)
            .zip(&self.re_l)
            .map(|((a, w), l)| w * (0.5 * u * a).cos() * l)
            .sum();
        s / PI
    }

    /// `n_x(u, y)`, negative quadrature noise clipped to zero.
    pub fn density(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Invalid(format!("passage time must be positive, got {u}")));
        }
        let raw = self.raw_density(u);
        if raw < -self.config.neg_tol {
            return Err(Error::Numerical(format!(
                "first-passage density {raw:e} at u = {u} is below -{:e}; refine the configuration",
                self.config.neg_tol
            )));
        }
        Ok(raw.max(0.0))
    }

    /// `P(τ ≤ U)` for the passage time `τ`.
    pub fn cdf(&self, upper: f64) -> f64 {
        if upper <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .alpha
            .iter()
            .zip(&self.weight)
            .zip(&self.re_l)
            .map(|((a, w), l)| w * 2.0 * (0.5 * upper * a).sin() / a * l)
            .sum();
        s / PI
    }
}

/// `n_x(u, y)` with the default configuration, resolving times up to
/// `max(u, 8)`.
pub fn first_passage_density(x: f64, y: f64, u: f64) -> Result<f64> {
    let config = FirstPassageConfig { u_max: u.max(FirstPassageConfig::default().u_max), ..Default::default() };
    FirstPassageDensity::new(x, y, config)?.density(u)
}
