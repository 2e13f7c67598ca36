//! Representability as a space-time scaled stationary OU process.
//!
//! For a spec with time change `(Q, β, v)` the identity
//!
//! ```text
//! cov(s, t) = v(s) v(t) e^{−|β(t) − β(s)|/2}
//! ```
//!
//! is checked on a grid. For a bare kernel the standardized correlation
//! `r(s,t) = cov(s,t)/√(var s · var t)` must be positive and multiplicative
//! along ordered triples, `r(s,t) = r(s,u) r(u,t)`; then
//! `β(t) − β(t₀) = −2 ln r(t₀, t)` for `t ≥ t₀`.
//!
//! Boundedness of `φ Q^{1/2+ε}` is decided on a grid in log-distance
//! `w = −ln(1 − t/T)`, where `T − t` stays resolvable.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::Family;
use crate::process::{CovarianceKernel, Horizon, TimeChangeMap};

/// Relative tolerance of the multiplicativity test.
pub const MULTIPLICATIVE_REL_TOL: f64 = 1e-6;
/// Absolute floor of the multiplicativity test, for underflowing `r`.
pub const MULTIPLICATIVE_ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparabilityVerdict {
    Pass,
    FailNegativeCorrelation,
    FailNonmultiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `cov(s, t)` and `r(s, t)` at a failing pair.
    Pair { s: f64, t: f64, cov: f64, r: f64 },
    /// `r(s, t)` against `r(s, u) r(u, t)` at a failing triple.
    Triple { s: f64, u: f64, t: f64, r_st: f64, product: f64 },
    /// Largest covariance-identity residual.
    Identity { s: f64, t: f64, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointExtension {
    None,
    ToT,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessRecord {
    pub epsilon: f64,
    /// Supremum of `φ Q^{1/2+ε}` over the grid.
    pub sup_value: f64,
    /// Extrapolated `lim_{t↑T} φ Q^{1/2+ε}`.
    pub limit_estimate: f64,
    pub bounded: bool,
    /// Largest log-distance `−ln(1 − t/T)` on the grid.
    pub w_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub label: String,
    pub representable: bool,
    /// Sup over grid pairs of the covariance-identity residual; `None` for
    /// bare kernels.
    pub max_identity_error: Option<f64>,
    pub tolerance: f64,
    pub separability_verdict: SeparabilityVerdict,
    pub witness: Option<Witness>,
    pub boundedness: Option<BoundednessRecord>,
    pub endpoint_extension: EndpointExtension,
    /// `β` reconstructed from the kernel, zero at the grid midpoint.
    pub reconstructed_beta: Option<Vec<f64>>,
    pub grid: Vec<f64>,
    pub message: String,
}

fn check_grid(grid: &[f64], domain: (f64, f64)) -> Result<()> {
    if grid.len() < 8 {
        return Err(Error::Invalid(format!("grid needs at least 8 points, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("grid must be strictly increasing".into()));
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo > domain.0 && hi < domain.1) {
        return Err(Error::Invalid(format!(
            "grid [{lo}, {hi}] must lie inside the open interval ({}, {})",
            domain.0, domain.1
        )));
    }
    Ok(())
}

/// 64 Chebyshev points on `(0, end)` plus 16 points accumulating
/// geometrically at each end, from `end/10` down to `end·10⁻⁷`.
pub fn default_grid(end: f64) -> Vec<f64> {
    let n = 64;
    let mut g: Vec<f64> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64;
            0.5 * end * (1.0 - theta.cos())
        })
        .collect();
    for k in 0..16 {
        let d = 10f64.powf(-1.0 - 6.0 * k as f64 / 15.0);
        g.push(end * d);
        g.push(end * (1.0 - d));
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// `n` Chebyshev points on `(0, end)`.
pub fn chebyshev_grid(end: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64;
            0.5 * end * (1.0 - theta.cos())
        })
        .collect()
}

/// Checks `cov(s,t) = v(s)v(t)e^{−|β(t)−β(s)|/2}` on all grid pairs, and the
/// multiplicativity of the kernel's standardized correlation.
pub fn verify_representation(
    kernel: &CovarianceKernel,
    maps: &TimeChangeMap,
    grid: &[f64],
    tol: f64,
) -> Result<RepresentationReport> {
    let end = maps.horizon().end();
    check_grid(grid, (0.0, end))?;
    let mut beta = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    for &t in grid {
        let b = maps
            .beta(t)
            .map_err(|e| Error::Domain(format!("beta undefined at grid point t = {t}: {e}")))?;
        beta.push(b);
        v.push(maps.v(t)?);
    }
    let rows: Vec<(f64, usize, usize)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, i, i);
            for j in i..grid.len() {
                let lhs = kernel.cov(grid[i], grid[j]);
                let rhs = v[i] * v[j] * (-0.5 * (beta[j] - beta[i]).abs()).exp();
                let r = (lhs - rhs).abs();
                if !(r <= best.0) {
                    best = (r, i, j);
                }
            }
            best
        })
        .collect();
    let (max_err, wi, wj) = rows
        .into_iter()
        .fold((0.0f64, 0, 0), |acc, x| if !(x.0 <= acc.0) { x } else { acc });
    let sep = separability(kernel, grid, MULTIPLICATIVE_REL_TOL)?;
    let identity_ok = max_err <= tol;
    let representable = identity_ok && sep.verdict == SeparabilityVerdict::Pass;
    let witness = if !identity_ok {
        Some(Witness::Identity { s: grid[wi], t: grid[wj], residual: max_err })
    } else {
        sep.witness
    };
    let message = if representable {
        "representable as v(t) R(beta(t)) on the grid".to_string()
    } else if !identity_ok {
        format!("covariance identity residual {max_err:e} exceeds tolerance {tol:e}")
    } else {
        "not representable with monotone time change".to_string()
    };
    Ok(RepresentationReport {
        label: kernel.label().to_string(),
        representable,
        max_identity_error: Some(max_err),
        tolerance: tol,
        separability_verdict: sep.verdict,
        witness,
        boundedness: None,
        endpoint_extension: EndpointExtension::None,
        reconstructed_beta: sep.beta,
        grid: grid.to_vec(),
        message,
    })
}

struct Separability {
    verdict: SeparabilityVerdict,
    witness: Option<Witness>,
    beta: Option<Vec<f64>>,
}

fn separability(kernel: &CovarianceKernel, grid: &[f64], rel_tol: f64) -> Result<Separability> {
    let n = grid.len();
    let var: Vec<f64> = grid.iter().map(|&t| kernel.cov(t, t)).collect();
    for (t, v) in grid.iter().zip(&var) {
        if !(*v > 0.0) {
            return Err(Error::Domain(format!(
                "variance {v} at t = {t}: standardized correlation undefined"
            )));
        }
    }
    let mut r = vec![vec![1.0; n]; n];
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let cv = kernel.cov(grid[i], grid[j]);
            if !cv.is_finite() {
                return Err(Error::Numerical(format!(
                    "kernel value at ({}, {}) is not finite",
                    grid[i], grid[j]
                )));
            }
            let rv = cv / (var[i] * var[j]).sqrt();
            r[i][j] = rv;
            r[j][i] = rv;
            c[i][j] = cv;
            c[j][i] = cv;
        }
    }
    // widest separation first, so the witness is the most extreme pair
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| (grid[b.1] - grid[b.0]).total_cmp(&(grid[a.1] - grid[a.0])).then(a.cmp(b)));
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| !(r[i][j] > 0.0)) {
        return Ok(Separability {
            verdict: SeparabilityVerdict::FailNegativeCorrelation,
            witness: Some(Witness::Pair { s: grid[i], t: grid[j], cov: c[i][j], r: r[i][j] }),
            beta: None,
        });
    }
    let worst = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut worst: Option<(f64, usize, usize, usize)> = None;
            for j in i + 2..n {
                for k in i + 1..j {
                    let prod = r[i][k] * r[k][j];
                    let diff = (r[i][j] - prod).abs();
                    let allowed = (rel_tol * r[i][j].abs()).max(MULTIPLICATIVE_ABS_FLOOR);
                    if diff > allowed {
                        let excess = diff / allowed;
                        if worst.is_none_or(|w| excess > w.0) {
                            worst = Some((excess, i, k, j));
                        }
                    }
                }
            }
            worst
        })
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2, b.3) < (a.1, a.2, a.3)) { b } else { a });
    if let Some((_, i, k, j)) = worst {
        return Ok(Separability {
            verdict: SeparabilityVerdict::FailNonmultiplicative,
            witness: Some(Witness::Triple {
                s: grid[i],
                u: grid[k],
                t: grid[j],
                r_st: r[i][j],
                product: r[i][k] * r[k][j],
            }),
            beta: None,
        });
    }
    let m = n / 2;
    let beta = (0..n)
        .map(|j| match j.cmp(&m) {
            std::cmp::Ordering::Less => 2.0 * r[j][m].ln(),
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -2.0 * r[m][j].ln(),
        })
        .collect();
    Ok(Separability { verdict: SeparabilityVerdict::Pass, witness: None, beta: Some(beta) })
}

/// Standardizes a bare kernel and tests positivity and multiplicativity of
/// its correlation; on success reconstructs `β` up to an additive constant
/// (zero at the grid midpoint). `rel_tol` is the per-triple relative
/// tolerance, with absolute floor [`MULTIPLICATIVE_ABS_FLOOR`].
pub fn kernel_representability(
    kernel: &CovarianceKernel,
    grid: &[f64],
    rel_tol: f64,
) -> Result<RepresentationReport> {
    let (lo, hi) = kernel.domain();
    if grid.len() < 2 {
        return Err(Error::Invalid("grid needs at least 2 points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("grid must be strictly increasing".into()));
    }
    if let Some(&t) = grid.iter().find(|&&t| !(t > lo && t < hi)) {
        return Err(Error::Invalid(format!("grid point {t} outside the open domain ({lo}, {hi})")));
    }
    let sep = separability(kernel, grid, rel_tol)?;
    let representable = sep.verdict == SeparabilityVerdict::Pass;
    let message = match sep.verdict {
        SeparabilityVerdict::Pass => "standardized correlation is positive and multiplicative".to_string(),
        SeparabilityVerdict::FailNegativeCorrelation => {
            "not representable with monotone time change: non-positive correlation".to_string()
        }
        SeparabilityVerdict::FailNonmultiplicative => {
            "not representable with monotone time change: correlation is not multiplicative".to_string()
        }
    };
    Ok(RepresentationReport {
        label: kernel.label().to_string(),
        representable,
        max_identity_error: None,
        tolerance: rel_tol,
        separability_verdict: sep.verdict,
        witness: sep.witness,
        boundedness: None,
        endpoint_extension: EndpointExtension::None,
        reconstructed_beta: sep.beta,
        grid: grid.to_vec(),
        message,
    })
}

/// Default largest log-distance for the boundedness grid. With an exact
/// tail evaluator the grid reaches past the peak of `e^{−aw} w^{1/2+ε}`
/// shapes (`40(1/2 + ε)`, at least 60); plain-time maps stop at `30`, and
/// quadrature-backed maps at `16` (`T − t ≈ 10⁻⁷ T`).
pub fn default_w_max(maps: &TimeChangeMap, epsilon: f64, has_tail: bool) -> f64 {
    if has_tail {
        (40.0 * (0.5 + epsilon)).max(60.0)
    } else if maps.closed_form() {
        30.0
    } else {
        16.0
    }
}

/// Log-distance grid: 200 log-spaced points on `[10⁻⁶, 1]`, then 800
/// uniform points on `(1, w_max]`.
pub fn boundedness_grid(w_max: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..200).map(|k| 10f64.powf(-6.0 + 6.0 * k as f64 / 199.0)).collect();
    g.extend((1..=800).map(|k| 1.0 + (w_max - 1.0) * k as f64 / 800.0));
    g
}

fn aitken(f: &[f64]) -> f64 {
    let n = f.len();
    let (f0, f1, f2) = (f[n - 3], f[n - 2], f[n - 1]);
    let d1 = f1 - f0;
    let d2 = f2 - f1;
    let den = d2 - d1;
    if den == 0.0 || !den.is_finite() || d2.abs() >= d1.abs() {
        return f2;
    }
    let est = f2 - d2 * d2 / den;
    if est.is_finite() {
        est
    } else {
        f2
    }
}

/// Evaluates `φ Q^{1/2+ε}` at `t = T(1 − e^{−w})` over `w_grid` (increasing),
/// through the map's log-distance evaluator.
///
/// `bounded` holds when the sup over the last decade `w ∈ [w_max − ln 10,
/// w_max]` is at most 1.01 times the sup before it; the limit is the Aitken
/// extrapolation of the last three values (geometric convergence in `w`).
pub fn check_boundedness(maps: &TimeChangeMap, epsilon: f64, w_grid: &[f64]) -> Result<BoundednessRecord> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !maps.horizon().is_finite() {
        return Err(Error::Domain("boundedness at T needs a finite horizon".into()));
    }
    if w_grid.len() < 4 || w_grid.windows(2).any(|w| !(w[1] > w[0])) || !(w_grid[0] > 0.0) {
        return Err(Error::Invalid("boundedness grid must be positive, increasing, 4+ points".into()));
    }
    let p = 0.5 + epsilon;
    let values: Vec<f64> = w_grid
        .par_iter()
        .map(|&w| {
            let (lp, lq) = maps.tail_log(w)?;
            Ok((lp + p * lq).exp())
        })
        .collect::<Result<_>>()?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("phi Q^(1/2+eps) evaluated to {v}")));
    }
    let w_max = *w_grid.last().unwrap();
    let cut = w_max - std::f64::consts::LN_10;
    let early = values
        .iter()
        .zip(w_grid)
        .filter(|(_, &w)| w < cut)
        .fold(0.0f64, |m, (v, _)| m.max(*v));
    let late = values
        .iter()
        .zip(w_grid)
        .filter(|(_, &w)| w >= cut)
        .fold(0.0f64, |m, (v, _)| m.max(*v));
    let sup_value = early.max(late);
    Ok(BoundednessRecord {
        epsilon,
        sup_value,
        limit_estimate: aitken(&values),
        bounded: late <= 1.01 * early,
        w_max,
        points: w_grid.len(),
    })
}

/// Full check of a family: identity and separability on `grid` (or the
/// default grid) for families with a time change, the separability test
/// alone for bare kernels; adds the boundedness record and endpoint
/// verdict when `ε` is known and the horizon is finite.
pub fn verify_family(fam: &Family, grid: Option<&[f64]>, tol: f64) -> Result<RepresentationReport> {
    let (lo, hi) = fam.kernel.domain();
    let end = match fam.maps.as_ref().map(|m| m.horizon()) {
        Some(Horizon::Infinite { probe_max }) => probe_max,
        _ => hi,
    };
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = default_grid(end - lo).into_iter().map(|t| t + lo).collect::<Vec<_>>();
            &owned
        }
    };
    match &fam.maps {
        None => kernel_representability(&fam.kernel, grid, MULTIPLICATIVE_REL_TOL),
        Some(maps) => {
            let mut report = verify_representation(&fam.kernel, maps, grid, tol)?;
            if let (Some(eps), true) = (fam.epsilon, maps.horizon().is_finite()) {
                let w_max = default_w_max(maps, eps, maps.has_tail());
                let b = check_boundedness(maps, eps, &boundedness_grid(w_max))?;
                if b.bounded && report.representable {
                    report.endpoint_extension = EndpointExtension::ToT;
                }
                report.boundedness = Some(b);
            }
            Ok(report)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{alpha_wiener_spec, counterexample_kernel, AlphaWienerParams, CounterexampleKind};

    #[test]
    fn wiener_bridge_passes_and_reconstructs_beta() {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha: 1.0, t_end: 1.0 }).unwrap();
        let grid = chebyshev_grid(1.0, 32);
        let rep = verify_representation(&fam.kernel, fam.maps.as_ref().unwrap(), &grid, 1e-10).unwrap();
        assert!(rep.representable, "{rep:?}");
        let beta = rep.reconstructed_beta.unwrap();
        let m = grid.len() / 2;
        let shift = (grid[m] / (1.0 - grid[m])).ln();
        for (t, b) in grid.iter().zip(beta) {
            assert!((b + shift - (t / (1.0 - t)).ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_area_witness_is_the_widest_pair() {
        let k = counterexample_kernel(CounterexampleKind::ZeroArea).kernel;
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let rep = kernel_representability(&k, &grid, 1e-6).unwrap();
        assert_eq!(rep.separability_verdict, SeparabilityVerdict::FailNegativeCorrelation);
        match rep.witness.unwrap() {
            Witness::Pair { s, t, cov, .. } => {
                assert_eq!((s, t), (0.1, 0.9));
                assert!((cov + 0.0143).abs() < 1e-12);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn perturbed_kernel_fails_multiplicativity() {
        let k = CovarianceKernel::new(
            "perturbed",
            (0.0, 1.0),
            false,
            std::sync::Arc::new(|s: f64, t: f64| s.min(t) - s * t + 0.01 * s * t * (1.0 - s) * (1.0 - t)),
            std::sync::Arc::new(|_| 0.0),
        );
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let rep = kernel_representability(&k, &grid, 1e-6).unwrap();
        assert_eq!(rep.separability_verdict, SeparabilityVerdict::FailNonmultiplicative);
        assert!(matches!(rep.witness, Some(Witness::Triple { .. })));
    }

    #[test]
    fn boundedness_limits_of_alpha_wiener() {
        for (alpha, want) in [(0.25, 0.0), (0.5, 0.0), (1.0, 1.0), (2.0, 3f64.powf(-2.0 / 3.0))] {
            let fam = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end: 1.0 }).unwrap();
            let maps = fam.maps.unwrap();
            let eps = fam.epsilon.unwrap();
            let b = check_boundedness(&maps, eps, &boundedness_grid(default_w_max(&maps, eps, true))).unwrap();
            assert!(b.bounded, "alpha={alpha}");
            assert!((b.limit_estimate - want).abs() < 1e-4, "alpha={alpha}: {b:?}");
        }
    }

    #[test]
    fn grid_preconditions() {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha: 1.0, t_end: 1.0 }).unwrap();
        let maps = fam.maps.unwrap();
        assert!(verify_representation(&fam.kernel, &maps, &[0.1, 0.2], 1e-8).is_err());
        let g: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        assert!(verify_representation(&fam.kernel, &maps, &g, 1e-8).is_err());
    }

    #[test]
    fn default_grid_reaches_both_ends() {
        let g = default_grid(2.0);
        assert_eq!(g.len(), 96);
        assert!(g[0] < 2.0 * 1e-6 && *g.last().unwrap() > 2.0 * (1.0 - 1e-6));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
