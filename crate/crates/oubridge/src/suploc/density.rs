//! Density of the location `τ` of the supremum of the stationary OU process
//! `R` on `[0, T]`.
//!
//! With scale density `S_c'(y) = e^{(y²−c²)/2}` and speed density
//! `m_c(z) = 2e^{−(z²−c²)/2}` the joint density of
//! `(sup R, R_T, τ)` given `R₀ = x` is
//! `n_x(s, y) n_z(T−s, y) S_c'(y) m_c(z)` on `{x ≤ y, z ≤ y}`, free of `c`
//! (fixed to 0 here). Averaging `x` over the standard normal law gives
//!
//! ```text
//! f_τ(s) = 2 ∫ φ(y) Q(s, y) Q(T−s, y) dy,
//! Q(u, y) = ∫_{−∞}^y n_x(u, y) e^{−(x²−y²)/2} dx.
//! ```
//!
//! The Laplace transform `q(λ, y) = ∫₀^∞ e^{−λu} Q(u, y) du` solves the
//! Riccati equation `∂_y q = y q + 1 − 2λ q²` and decays as
//! `q → 0` when `y → −∞`, where it is started on the slow root
//! `q = 2/(√(y² + 8λ) − y)`. Its large-λ expansion
//! `q ~ Σ_{n≥1} e_n(y) (2λ)^{−n/2}` has `e_1 = 1`, `e_n = a_{n−2}(y)` with
//! `a_0 = y/2` and `a_{j+1} = (y a_j − a_j' − Σ_{i≤j} a_i a_{j−i})/2`.
//! Rewritten in powers of `(2λ + κ)^{−1/2}` with coefficients `C_m(y)`,
//! the first `M` terms invert in closed form,
//!
//! ```text
//! (2λ + κ)^{−m/2}  ↔  e^{−κu/2} 2^{−m/2} u^{m/2−1} / Γ(m/2),
//! ```
//!
//! and the remainder `ρ = Re(q − Σ C_m (2λ+κ)^{−m/2})` at `λ = iα/2` is
//! inverted by `(1/π) ∫₀^∞ cos(uα/2) ρ dα` on panels of width
//! `min(2π/T, 6)`, graded geometrically towards `α = 0` where `q` varies
//! on the scale `e^{−y²/2}`.
//!
//! Each `f_τ(s)` is computed with two Gauss–Legendre rules in `y`; their
//! difference is the reported residual.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::first_passage::{FirstPassageConfig, FirstPassageDensity};
use super::ode;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::special::normal_pdf;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupLocationConfig {
    /// Truncation of the level integral to `[−y_max, y_max]`.
    pub y_max: f64,
    pub y_nodes: usize,
    /// Node count of the second `y`-rule used for the residual.
    pub y_nodes_check: usize,
    /// Truncation of the α-integral.
    pub alpha_max: f64,
    /// Number `M` of inverted asymptotic terms.
    pub order: usize,
    pub kappa: f64,
    /// Level where the Riccati equation is started.
    pub y_start: f64,
    pub ode_rtol: f64,
    /// Residuals above `residual_tol · max(1, f)` flag a grid point.
    pub residual_tol: f64,
    /// Gauss–Legendre nodes per half-window in mass integrals.
    pub mass_nodes: usize,
}

impl Default for SupLocationConfig {
    fn default() -> Self {
        SupLocationConfig {
            y_max: 8.0,
            y_nodes: 80,
            y_nodes_check: 64,
            alpha_max: 600.0,
            order: 8,
            kappa: 2.0,
            y_start: -18.0,
            ode_rtol: 1e-12,
            residual_tol: 1e-6,
            mass_nodes: 80,
        }
    }
}

/// Scale and speed densities of `R`, normalized at `c`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaleSpeed {
    pub c: f64,
}

impl ScaleSpeed {
    /// `S_c'(y) = e^{(y² − c²)/2}`.
    pub fn scale_density(&self, y: f64) -> f64 {
        (0.5 * (y * y - self.c * self.c)).exp()
    }

    /// `m_c(dz)/dz = 2 e^{−(z² − c²)/2}`.
    pub fn speed_density(&self, z: f64) -> f64 {
        2.0 * (-0.5 * (z * z - self.c * self.c)).exp()
    }
}

/// `n_x(s, y) n_z(T−s, y) S_0'(y) m_0(z)` on `{x ≤ y, z ≤ y}`, zero off it
/// and on the diagonal `x = y` or `z = y`, where the passage time vanishes.
pub fn trivariate_density(x: f64, s: f64, y: f64, z: f64, t_end: f64) -> Result<f64> {
    if !(t_end > 0.0 && s > 0.0 && s < t_end) {
        return Err(Error::Invalid(format!("need 0 < s < T, got s = {s}, T = {t_end}")));
    }
    if !(x < y && z < y) {
        return Ok(0.0);
    }
    let u_max = t_end.max(FirstPassageConfig::default().u_max);
    let cfg = FirstPassageConfig { u_max, ..Default::default() };
    let left = FirstPassageDensity::new(x, y, cfg)?.density(s)?;
    let right = FirstPassageDensity::new(z, y, cfg)?.density(t_end - s)?;
    let cs = ScaleSpeed { c: 0.0 };
    Ok(left * right * cs.scale_density(y) * cs.speed_density(z))
}

/// Coefficients `C_1..C_M` at level `y` (index 0 unused).
#[allow(clippy::needless_range_loop)]
fn asymptotic_coefficients(y: f64, order: usize, kappa: f64) -> Vec<f64> {
    // a_j as coefficient vectors in increasing degree.
    let mut a: Vec<Vec<f64>> = vec![vec![0.0, 0.5]];
    for j in 0..order.saturating_sub(2) {
        let aj = &a[j];
        let mut next = vec![0.0; aj.len() + 1];
        for (k, c) in aj.iter().enumerate() {
            next[k + 1] += c;
            if k > 0 {
                next[k - 1] -= k as f64 * c;
            }
        }
        for i in 0..=j {
            for (p, ci) in a[i].iter().enumerate() {
                for (q, cj) in a[j - i].iter().enumerate() {
                    if p + q >= next.len() {
                        next.resize(p + q + 1, 0.0);
                    }
                    next[p + q] -= ci * cj;
                }
            }
        }
        a.push(next.into_iter().map(|c| 0.5 * c).collect());
    }
    let eval = |p: &[f64]| p.iter().rev().fold(0.0, |acc, c| acc * y + c);
    let mut e = vec![0.0; order + 1];
    if order >= 1 {
        e[1] = 1.0;
    }
    for n in 2..=order {
        e[n] = eval(&a[n - 2]);
    }
    let binom = |top: f64, k: usize| (0..k).fold(1.0, |r, i| r * (top - i as f64) / (i as f64 + 1.0));
    let mut c = vec![0.0; order + 1];
    for n in 1..=order {
        let mut v = e[n];
        for m in 1..n {
            if (n - m) % 2 == 0 {
                let k = (n - m) / 2;
                v -= c[m] * binom(-(m as f64) / 2.0, k) * kappa.powi(k as i32);
            }
        }
        c[n] = v;
    }
    c
}

/// Precomputed Laplace-domain data for one horizon `T`.
#[derive(Debug, Clone)]
pub struct SupLocationSolver {
    t_end: f64,
    config: SupLocationConfig,
    /// Levels of both rules, sorted.
    levels: Vec<f64>,
    /// `(level index, weight·φ(level))` for the main and check rules.
    main_rule: Vec<(usize, f64)>,
    check_rule: Vec<(usize, f64)>,
    coeffs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    alpha_w: Vec<f64>,
    /// `ρ` by level, then by α node.
    rho: Vec<Vec<f64>>,
    tail: f64,
}

impl SupLocationSolver {
    pub fn new(t_end: f64, config: SupLocationConfig) -> Result<Self> {
        let c = config;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Invalid(format!("T must be positive and finite, got {t_end}")));
        }
        if !(c.y_max > 0.0
            && c.y_nodes > 1
            && c.y_nodes_check > 1
            && c.alpha_max > 0.0
            && c.order >= 1
            && c.kappa > 0.0
            && c.y_start < -c.y_max
            && c.ode_rtol > 0.0
            && c.residual_tol > 0.0
            && c.mass_nodes > 0)
        {
            return Err(Error::Invalid(format!("invalid supremum-location configuration {c:?}")));
        }
        let rule = |n: usize| {
            let (x, w) = gauss_legendre(n);
            x.into_iter().zip(w).map(|(x, w)| (x * c.y_max, w * c.y_max)).collect::<Vec<_>>()
        };
        let (r1, r2) = (rule(c.y_nodes), rule(c.y_nodes_check));
        let mut tagged: Vec<(f64, usize, f64)> = r1
            .iter()
            .map(|&(y, w)| (y, 0, w))
            .chain(r2.iter().map(|&(y, w)| (y, 1, w)))
            .collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let levels: Vec<f64> = tagged.iter().map(|t| t.0).collect();
        let mut main_rule = Vec::new();
        let mut check_rule = Vec::new();
        for (i, &(y, which, w)) in tagged.iter().enumerate() {
            let entry = (i, w * normal_pdf(y));
            if which == 0 {
                main_rule.push(entry);
            } else {
                check_rule.push(entry);
            }
        }
        let coeffs: Vec<Vec<f64>> = levels.iter().map(|&y| asymptotic_coefficients(y, c.order, c.kappa)).collect();

        let pw = (2.0 * PI / t_end).min(6.0);
        let mut edges = vec![0.0];
        edges.extend((0..60).map(|k| pw * 1e-16f64.powf(1.0 - k as f64 / 59.0)));
        let n_pan = (c.alpha_max / pw).ceil() as usize;
        edges.extend((2..=n_pan).map(|k| k as f64 * pw));
        let (gx, gw) = gauss_legendre(16);
        let mut alpha = Vec::new();
        let mut alpha_w = Vec::new();
        for win in edges.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            for (g, w) in gx.iter().zip(&gw) {
                alpha.push(lo + 0.5 * (g + 1.0) * (hi - lo));
                alpha_w.push(0.5 * w * (hi - lo));
            }
        }

        let columns: Vec<Vec<f64>> = alpha
            .par_iter()
            .map(|&a| riccati_remainder(a, &levels, &coeffs, &c))
            .collect::<Result<_>>()?;
        let mut rho = vec![vec![0.0; alpha.len()]; levels.len()];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                rho[i][j] = *v;
            }
        }
        // Size of the neglected α-tail: |ρ| at the last panel times its
        // algebraic decay length.
        let last = alpha.len() - 1;
        let decay = 0.5 * (c.order as f64 + 1.0) - 1.0;
        let tail = main_rule
            .iter()
            .map(|&(i, w)| w.abs() * rho[i][last].abs())
            .fold(0.0, f64::max)
            * alpha[last]
            / decay.max(1.0)
            / PI;
        Ok(SupLocationSolver { t_end, config, levels, main_rule, check_rule, coeffs, alpha, alpha_w, rho, tail })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn config(&self) -> &SupLocationConfig {
        &self.config
    }

    pub fn alpha_nodes(&self) -> usize {
        self.alpha.len()
    }

    /// Estimated size of the neglected α-tail in `f_τ`-units.
    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    /// `Q(u, y)` at every tabulated level.
    fn q_levels(&self, u: f64) -> Vec<f64> {
        let cos: Vec<f64> = self.alpha.iter().zip(&self.alpha_w).map(|(a, w)| w * (0.5 * u * a).cos()).collect();
        let kappa = self.config.kappa;
        let basis: Vec<f64> = (0..=self.config.order)
            .map(|m| {
                if m == 0 {
                    return 0.0;
                }
                let h = 0.5 * m as f64;
                (-0.5 * kappa * u).exp() * 2f64.powf(-h) * u.powf(h - 1.0) / libm::tgamma(h)
            })
            .collect();
        self.rho
            .iter()
            .zip(&self.coeffs)
            .map(|(row, cm)| {
                let analytic: f64 = cm.iter().zip(&basis).skip(1).map(|(c, b)| c * b).sum();
                let rem: f64 = row.iter().zip(&cos).map(|(r, c)| r * c).sum();
                analytic + rem / PI
            })
            .collect()
    }

    /// `Q(u, y)` on the main level rule, as `(level, value)` pairs.
    pub fn q_profile(&self, u: f64) -> Vec<(f64, f64)> {
        let q = self.q_levels(u);
        self.main_rule.iter().map(|&(i, _)| (self.levels[i], q[i])).collect()
    }

    /// `f_τ(s)` under the main and the check level rules.
    pub fn density_pair(&self, s: f64) -> Result<(f64, f64)> {
        if !(s > 0.0 && s < self.t_end) {
            return Err(Error::Invalid(format!("s = {s} outside (0, {})", self.t_end)));
        }
        let a = self.q_levels(s);
        let b = self.q_levels(self.t_end - s);
        let f = |rule: &[(usize, f64)]| 2.0 * rule.iter().map(|&(i, w)| w * a[i] * b[i]).sum::<f64>();
        Ok((f(&self.main_rule), f(&self.check_rule)))
    }

    pub fn density(&self, s: f64) -> Result<f64> {
        Ok(self.density_pair(s)?.0)
    }

    /// `∫_a^b f_τ` for `0 ≤ a < b ≤ T`, with `s = a + σ²` and `s = b − σ²`
    /// on the two halves to absorb the endpoint singularities.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a < b && b <= self.t_end) {
            return Err(Error::Invalid(format!("mass window [{a}, {b}] not inside [0, {}]", self.t_end)));
        }
        let mid = 0.5 * (a + b);
        let (gx, gw) = gauss_legendre(self.config.mass_nodes);
        let half = (mid - a).sqrt();
        let mut total = 0.0;
        for (g, w) in gx.iter().zip(&gw) {
            let sg = 0.5 * (g + 1.0) * half;
            let wt = 0.5 * w * half * 2.0 * sg;
            total += wt * (self.density(a + sg * sg)? + self.density(b - sg * sg)?);
        }
        Ok(total)
    }

    /// Interior-renormalized distribution function on `[a, b]`, evaluated
    /// at each point of `points`.
    pub fn window_cdf(&self, a: f64, b: f64, points: &[f64]) -> Result<Vec<f64>> {
        let total = self.mass(a, b)?;
        points
            .iter()
            .map(|&p| {
                if p <= a {
                    Ok(0.0)
                } else if p >= b {
                    Ok(1.0)
                } else {
                    Ok(self.mass(a, p)? / total)
                }
            })
            .collect()
    }
}

/// `q(iα/2, y)` at every level.
fn riccati_q(alpha: f64, levels: &[f64], c: &SupLocationConfig) -> Result<Vec<Complex64>> {
    let lam = Complex64::new(0.0, 0.5 * alpha);
    let y0 = c.y_start;
    let disc = (y0 * y0 + 8.0 * lam).sqrt();
    let q0 = 2.0 / (disc - y0);
    let sol = ode::integrate(
        |y, q: &[Complex64; 1]| [y * q[0] + 1.0 - 2.0 * lam * q[0] * q[0]],
        y0,
        [q0],
        levels,
        c.ode_rtol,
        1e-300,
        1_000_000,
    )?;
    Ok(sol.into_iter().map(|q| q[0]).collect())
}

/// `ρ(α, y)` at every level for one α node.
fn riccati_remainder(alpha: f64, levels: &[f64], coeffs: &[Vec<f64>], c: &SupLocationConfig) -> Result<Vec<f64>> {
    let q = riccati_q(alpha, levels, c)?;
    let shifted = Complex64::new(c.kappa, alpha);
    let powers: Vec<Complex64> = (0..=c.order).map(|m| shifted.powf(-0.5 * m as f64)).collect();
    Ok(q
        .iter()
        .zip(coeffs)
        .map(|(q, cm)| {
            let sub: Complex64 = cm.iter().zip(&powers).skip(1).map(|(c, p)| c * p).sum();
            (q - sub).re
        })
        .collect())
}

/// Diagnostics of a density evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SupLocationDiagnostics {
    pub interior_window: (f64, f64),
    pub mass_interior: f64,
    pub mass_total: f64,
    pub max_residual: f64,
    pub flagged: usize,
    pub alpha_max: f64,
    pub alpha_nodes: usize,
    pub alpha_tail_estimate: f64,
    pub y_max: f64,
    pub y_nodes: usize,
    pub y_nodes_check: usize,
    pub order: usize,
    pub kappa: f64,
}

/// `f_τ` on a grid with residuals and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SupLocationDensity {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub residual: Vec<f64>,
    pub flagged: Vec<bool>,
    pub diagnostics: SupLocationDiagnostics,
    pub scale_speed: ScaleSpeed,
}

impl SupLocationDensity {
    /// CSV with columns `s,f,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,f,residual\n");
        for ((s, f), r) in self.s.iter().zip(&self.f).zip(&self.residual) {
            out.push_str(&format!("{s:.16e},{f:.16e},{r:.16e}\n"));
        }
        out
    }
}

/// Evaluates `f_τ` on `s_grid ⊂ (0, T)` from a prepared solver.
pub fn density_on_grid(solver: &SupLocationSolver, s_grid: &[f64]) -> Result<SupLocationDensity> {
    let t_end = solver.t_end;
    let cfg = solver.config;
    let pairs: Vec<(f64, f64)> = s_grid.par_iter().map(|&s| solver.density_pair(s)).collect::<Result<_>>()?;
    let f: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let residual: Vec<f64> = pairs.iter().map(|p| (p.0 - p.1).abs()).collect();
    let flagged: Vec<bool> =
        pairs.iter().map(|p| (p.0 - p.1).abs() > cfg.residual_tol * p.0.abs().max(1.0)).collect();
    let window = (t_end / 50.0, t_end - t_end / 50.0);
    let diagnostics = SupLocationDiagnostics {
        interior_window: window,
        mass_interior: solver.mass(window.0, window.1)?,
        mass_total: solver.mass(0.0, t_end)?,
        max_residual: residual.iter().copied().fold(0.0, f64::max),
        flagged: flagged.iter().filter(|&&b| b).count(),
        alpha_max: cfg.alpha_max,
        alpha_nodes: solver.alpha_nodes(),
        alpha_tail_estimate: solver.tail,
        y_max: cfg.y_max,
        y_nodes: cfg.y_nodes,
        y_nodes_check: cfg.y_nodes_check,
        order: cfg.order,
        kappa: cfg.kappa,
    };
    Ok(SupLocationDensity {
        t_end,
        s: s_grid.to_vec(),
        f,
        residual,
        flagged,
        diagnostics,
        scale_speed: ScaleSpeed { c: 0.0 },
    })
}

/// `f_τ` of the supremum location of `R` on `[0, T]` at `s_grid ⊂ (0, T)`.
pub fn sup_location_density(t_end: f64, s_grid: &[f64], config: SupLocationConfig) -> Result<SupLocationDensity> {
    let solver = SupLocationSolver::new(t_end, config)?;
    density_on_grid(&solver, s_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn solver() -> SupLocationSolver {
        SupLocationSolver::new(1.0, SupLocationConfig::default()).unwrap()
    }

    #[test]
    fn leading_coefficients() {
        let c = asymptotic_coefficients(0.7, 4, 0.0);
        assert_eq!(c[1], 1.0);
        assert!((c[2] - 0.35).abs() < 1e-15);
        // a_1 = (y·y/2 − 1/2 − y²/4)/2 = (y² − 2)/8
        assert!((c[3] - (0.49 - 2.0) / 8.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_transform_at_zero_matches_mills_ratio() {
        // q(0, y) = Φ(y)/φ(y), so ∫₀^∞ Q(u, y) du must reproduce it; check
        // the Riccati data directly at the smallest α node.
        let s = solver();
        let c = s.config;
        let col = riccati_remainder(0.0, &s.levels, &s.coeffs, &c).unwrap();
        for (i, &y) in s.levels.iter().enumerate().step_by(17) {
            let sub: f64 = s.coeffs[i].iter().enumerate().skip(1).map(|(m, cm)| cm * c.kappa.powf(-0.5 * m as f64)).sum();
            let want = normal_cdf(y) / normal_pdf(y);
            assert!((col[i] + sub - want).abs() < 1e-9 * want.max(1.0), "y = {y}");
        }
    }

    #[test]
    fn reference_values_and_mass() {
        let s = solver();
        let cases = [(0.5, 0.6783), (0.25, 0.7653), (0.1, 1.0535), (0.01, 2.9489), (0.001, 9.0443)];
        for (x, want) in cases {
            let (f, g) = s.density_pair(x).unwrap();
            assert!((f - want).abs() < 2e-4, "f({x}) = {f}");
            assert!((f - g).abs() < 1e-6 * f.max(1.0), "residual at {x}: {f} vs {g}");
        }
        assert!((s.mass(0.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn symmetry_and_universal_bound() {
        let s = solver();
        for k in 1..20 {
            let x = k as f64 / 20.0;
            let (a, b) = (s.density(x).unwrap(), s.density(1.0 - x).unwrap());
            assert!((a - b).abs() < 1e-10);
            assert!(a <= (1.0 / x).max(1.0 / (1.0 - x)));
        }
    }

    #[test]
    fn laplace_data_agree_with_hermite_passage_transform() {
        // q(λ, 0) = ∫_{−∞}^0 e^{−x²/2} L(α; x, 0) dx with L from the Hermite
        // integral representation.
        let c = SupLocationConfig::default();
        let (gx, gw) = gauss_legendre(60);
        for alpha in [0.5, 3.0, 20.0] {
            let q = riccati_q(alpha, &[0.0], &c).unwrap()[0];
            let mut acc = Complex64::new(0.0, 0.0);
            for (g, w) in gx.iter().zip(&gw) {
                let x = -4.5 * (g + 1.0);
                let l = super::super::first_passage::passage_laplace(x, 0.0, alpha, 1e-13).unwrap();
                acc += 4.5 * w * (-0.5 * x * x).exp() * l;
            }
            assert!((acc - q).norm() < 1e-8, "alpha {alpha}: {acc} vs {q}");
        }
    }

    #[test]
    fn trivariate_indicators_and_symmetry() {
        assert_eq!(trivariate_density(1.0, 0.5, 0.0, -1.0, 1.0).unwrap(), 0.0);
        assert_eq!(trivariate_density(-1.0, 0.5, 0.0, 1.0, 1.0).unwrap(), 0.0);
        let n = FirstPassageDensity::new(0.0, 1.0, FirstPassageConfig::default()).unwrap().density(1.0).unwrap();
        let got = trivariate_density(0.0, 1.0, 1.0, 0.0, 2.0).unwrap();
        assert!((got - n * n * 2.0 * 0.5f64.exp()).abs() < 1e-12);
    }
}
