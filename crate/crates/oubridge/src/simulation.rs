//! Monte Carlo oracles.
//!
//! Every path `i` draws from its own ChaCha8 stream `(seed, i)`, so
//! ensembles do not depend on thread count or scheduling.
//!
//! - exact Gaussian vectors from a kernel by Cholesky with a jitter ladder;
//! - the exact Gauss-Markov recursion
//!   `Z̃_{k+1} = (φ_{k+1}/φ_k) Z̃_k + φ_{k+1} √(Q_{k+1} − Q_k) ξ_k`;
//! - Euler-Maruyama for the SDE;
//! - the stationary OU transition `R_{k+1} = e^{−Δ/2} R_k + √(1 − e^{−Δ}) ξ_k`;
//! - the transform `v(t) R(β(t))`;
//! - argmax histograms, covariance estimates and first-passage CDFs.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::process::{CovarianceKernel, ProcessSpec, TimeChangeMap};

/// The RNG of path `path` under `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    ExactGaussian,
    EulerMaruyama,
    OuRecursion,
    TransformOfOu,
}

/// Sampled paths, row-major `n_paths × times.len()`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub method: SamplingMethod,
    /// Set when Euler paths were cut short by a non-finite drift; `times`
    /// then ends at the last finite step.
    pub truncated: bool,
}

impl PathEnsemble {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.times.len();
        &self.values[i * m..(i + 1) * m]
    }

    /// Values at time index `j` across paths.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.path(i)[j]).collect()
    }

    /// CSV with a header row of times and one path per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.times.iter().map(|t| format!("{t:.16e}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n_paths {
            let row: Vec<String> = self.path(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MCEstimate {
    /// Sample mean and `sd/√n`.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MCEstimate { value: mean, stderr: (var / n as f64).sqrt(), n }
    }

    /// Sample proportion and its binomial standard error.
    pub fn proportion(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        MCEstimate { value: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), n }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Invalid("time grid is empty".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn fill_paths<F>(n_paths: usize, m: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let mut values = vec![0.0; n_paths * m];
    if m == 0 {
        return values;
    }
    values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let mut rng = path_rng(seed, i as u64);
        f(&mut rng, row);
    });
    values
}

/// Lower Cholesky factor of `g` restricted to coordinates of positive
/// variance, with jitter `10⁻¹⁴·tr/n`, escalating ×10 up to `10⁻⁸·tr/n`.
/// Returns the factor and the kept coordinate indices.
pub fn jittered_cholesky(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = g.nrows();
    let trace: f64 = (0..n).map(|i| g[(i, i)]).sum();
    let scale = if n > 0 { trace / n as f64 } else { 0.0 };
    let keep: Vec<usize> = (0..n).filter(|&i| g[(i, i)] > 1e-300 && g[(i, i)] > 1e-15 * scale).collect();
    let k = keep.len();
    let sub = DMatrix::from_fn(k, k, |i, j| g[(keep[i], keep[j])]);
    if k == 0 {
        return Ok((sub, keep));
    }
    if let Some(c) = Cholesky::new(sub.clone()) {
        return Ok((c.l(), keep));
    }
    let mut jitter = 1e-14 * scale;
    while jitter <= 1e-8 * scale * (1.0 + 1e-12) {
        let mut m = sub.clone();
        for i in 0..k {
            m[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c.l(), keep));
        }
        jitter *= 10.0;
    }
    let min_eig = sub.symmetric_eigenvalues().min();
    Err(Error::Numerical(format!(
        "Cholesky factorization failed after jitter {:e}; smallest eigenvalue {min_eig:e}",
        1e-8 * scale
    )))
}

/// Joint Gaussian vectors with the kernel's mean and covariance on `times`.
pub fn sample_exact(kernel: &CovarianceKernel, times: &[f64], n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_times(times)?;
    let g = kernel.gram(times)?;
    let (l, keep) = jittered_cholesky(&g)?;
    let mean: Vec<f64> = times.iter().map(|&t| kernel.mean(t)).collect();
    if let Some(t) = times.iter().zip(&mean).find(|(_, m)| !m.is_finite()).map(|(t, _)| t) {
        return Err(Error::Numerical(format!("kernel mean at t = {t} is not finite")));
    }
    let m = times.len();
    let k = keep.len();
    let values = fill_paths(n_paths, m, seed, |rng, row| {
        let xi = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &l * xi;
        row.copy_from_slice(&mean);
        for (a, &idx) in keep.iter().enumerate() {
            row[idx] += z[a];
        }
    });
    Ok(PathEnsemble {
        times: times.to_vec(),
        values,
        n_paths,
        seed,
        method: SamplingMethod::ExactGaussian,
        truncated: false,
    })
}

/// Exact samples of the centered process `Z̃` on `times` from the
/// Gauss-Markov recursion; with `standardized` the paths are divided by
/// `v(t)`, giving `Z* = R(β(t))`.
pub fn sample_gauss_markov(
    maps: &TimeChangeMap,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    standardized: bool,
) -> Result<PathEnsemble> {
    let (a, b, scale) = gauss_markov_coefficients(maps, times, standardized)?;
    let m = times.len();
    let values = fill_paths(n_paths, m, seed, |rng, row| {
        let mut z = 0.0;
        for k in 0..m {
            z = a[k] * z + b[k] * rng.sample::<f64, _>(StandardNormal);
            row[k] = z * scale[k];
        }
    });
    Ok(PathEnsemble {
        times: times.to_vec(),
        values,
        n_paths,
        seed,
        method: SamplingMethod::ExactGaussian,
        truncated: false,
    })
}

/// `(a_k, b_k, scale_k)` of the recursion `z_k = a_k z_{k−1} + b_k ξ_k`,
/// output `z_k·scale_k`.
fn gauss_markov_coefficients(
    maps: &TimeChangeMap,
    times: &[f64],
    standardized: bool,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_times(times)?;
    if times[0] < 0.0 {
        return Err(Error::Domain("times must be nonnegative".into()));
    }
    let q = maps.q_on_grid(times)?;
    let phi: Vec<f64> = times.iter().map(|&t| maps.phi(t)).collect();
    let m = times.len();
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let mut scale = vec![1.0; m];
    for k in 0..m {
        let (ratio, dq) = if k == 0 { (0.0, q[0]) } else { (phi[k] / phi[k - 1], q[k] - q[k - 1]) };
        a[k] = ratio;
        b[k] = phi[k] * dq.max(0.0).sqrt();
        if standardized {
            let v = phi[k] * q[k].sqrt();
            if !(v > 0.0) {
                return Err(Error::Domain(format!("cannot standardize at t = {}: v = {v}", times[k])));
            }
            scale[k] = 1.0 / v;
        }
    }
    Ok((a, b, scale))
}

/// Euler-Maruyama for the SDE on `[0, horizon_cut]` with step `dt`; the
/// step grid includes every record time, and paths are stored on
/// `record_times` only (all steps when `None`). `φ'/φ` is a centered
/// difference of `ln φ` with step `max(10⁻⁶, dt/100)`.
pub fn sample_euler(
    spec: &ProcessSpec,
    dt: f64,
    horizon_cut: f64,
    record_times: Option<&[f64]>,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    if !(horizon_cut > 0.0 && horizon_cut < spec.horizon().end()) {
        return Err(Error::Invalid(format!("horizon_cut {horizon_cut} must lie in (0, T)")));
    }
    let n_steps = (horizon_cut / dt).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n_steps).map(|k| (k as f64 * dt).min(horizon_cut)).collect();
    if let Some(rec) = record_times {
        check_times(rec)?;
        if rec[0] < 0.0 || *rec.last().unwrap() > horizon_cut {
            return Err(Error::Invalid("record times must lie in [0, horizon_cut]".into()));
        }
        grid.extend_from_slice(rec);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * dt);
    let h = (dt / 100.0).max(1e-6);
    let mut drift_a = Vec::with_capacity(grid.len());
    let mut drift_b = Vec::with_capacity(grid.len());
    let mut diff = Vec::with_capacity(grid.len());
    let mut last_ok = grid.len() - 1;
    for (k, &t) in grid.iter().enumerate().take(grid.len() - 1) {
        let a = spec.log_phi_derivative(t, h);
        let b = spec.psi(t);
        let s = spec.sigma(t);
        if !(a.is_finite() && b.is_finite() && s.is_finite()) {
            last_ok = k;
            break;
        }
        drift_a.push(a);
        drift_b.push(b);
        diff.push(s);
    }
    let truncated = last_ok + 1 < grid.len();
    let grid = &grid[..=last_ok];
    let record: Vec<usize> = match record_times {
        Some(rec) => rec
            .iter()
            .filter_map(|&r| grid.iter().position(|&g| (g - r).abs() <= 1e-12 * dt))
            .collect(),
        None => (0..grid.len()).collect(),
    };
    let times: Vec<f64> = record.iter().map(|&k| grid[k]).collect();
    let m = times.len();
    let xi0 = spec.xi();
    let values = fill_paths(n_paths, m, seed, |rng, row| {
        let mut z = xi0;
        let mut next = 0;
        for k in 0..grid.len() {
            if next < m && record[next] == k {
                row[next] = z;
                next += 1;
            }
            if k + 1 < grid.len() {
                let h = grid[k + 1] - grid[k];
                let noise: f64 = rng.sample(StandardNormal);
                z += (drift_a[k] * z + drift_b[k]) * h + diff[k] * h.sqrt() * noise;
            }
        }
    });
    Ok(PathEnsemble {
        times,
        values,
        n_paths,
        seed,
        method: SamplingMethod::EulerMaruyama,
        truncated,
    })
}

/// Stationary OU paths on `times` by the exact AR(1) transition.
pub fn sample_stationary_ou(times: &[f64], n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_times(times)?;
    let (a, b) = ou_coefficients(times);
    let m = times.len();
    let values = fill_paths(n_paths, m, seed, |rng, row| {
        let mut r = 0.0;
        for k in 0..m {
            r = a[k] * r + b[k] * rng.sample::<f64, _>(StandardNormal);
            row[k] = r;
        }
    });
    Ok(PathEnsemble {
        times: times.to_vec(),
        values,
        n_paths,
        seed,
        method: SamplingMethod::OuRecursion,
        truncated: false,
    })
}

fn ou_coefficients(times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = times.len();
    let mut a = vec![0.0; m];
    let mut b = vec![1.0; m];
    for k in 1..m {
        let d = times[k] - times[k - 1];
        a[k] = (-0.5 * d).exp();
        b[k] = (-(-d).exp_m1()).sqrt();
    }
    (a, b)
}

/// `v(t) R(β(t))` for an OU ensemble sampled on `β(target_times)`.
pub fn transform_paths(ou: &PathEnsemble, maps: &TimeChangeMap, target_times: &[f64]) -> Result<PathEnsemble> {
    check_times(target_times)?;
    if ou.times.len() != target_times.len() {
        return Err(Error::Invalid("OU grid and target grid differ in length".into()));
    }
    let mut v = Vec::with_capacity(target_times.len());
    for (&t, &b_ou) in target_times.iter().zip(&ou.times) {
        let b = maps.beta(t)?;
        if (b - b_ou).abs() > 1e-12 * b.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "beta({t}) = {b} is not on the OU grid (found {b_ou})"
            )));
        }
        v.push(maps.v(t)?);
    }
    let m = target_times.len();
    let mut values = ou.values.clone();
    values.par_chunks_mut(m).for_each(|row| {
        for (x, vk) in row.iter_mut().zip(&v) {
            *x *= vk;
        }
    });
    Ok(PathEnsemble {
        times: target_times.to_vec(),
        values,
        n_paths: ou.n_paths,
        seed: ou.seed,
        method: SamplingMethod::TransformOfOu,
        truncated: false,
    })
}

/// Samples `Z̃` through the representation: stationary OU on `β(times)`,
/// scaled by `v`.
pub fn sample_via_ou(maps: &TimeChangeMap, times: &[f64], n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let beta: Vec<f64> = times.iter().map(|&t| maps.beta(t)).collect::<Result<_>>()?;
    let ou = sample_stationary_ou(&beta, n_paths, seed)?;
    transform_paths(&ou, maps, times)
}

/// Sample covariance of columns `i`, `j`; the standard error is that of
/// the mean of centered products.
pub fn covariance_estimate(ens: &PathEnsemble, i: usize, j: usize) -> MCEstimate {
    let x = ens.column(i);
    let y = ens.column(j);
    covariance_of(&x, &y)
}

fn covariance_of(x: &[f64], y: &[f64]) -> MCEstimate {
    let n = x.len();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let est = MCEstimate::from_samples(&prods);
    MCEstimate { value: est.value * n as f64 / (n as f64 - 1.0).max(1.0), ..est }
}

/// All pairwise covariance estimates, `(value, stderr)` matrices.
pub fn covariance_matrix(ens: &PathEnsemble) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = ens.n_times();
    let cols: Vec<Vec<f64>> = (0..m).map(|j| ens.column(j)).collect();
    let mut val = DMatrix::zeros(m, m);
    let mut se = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let e = covariance_of(&cols[i], &cols[j]);
            val[(i, j)] = e.value;
            val[(j, i)] = e.value;
            se[(i, j)] = e.stderr;
            se[(j, i)] = e.stderr;
        }
    }
    (val, se)
}

/// Index of the first maximum of a path (leftmost tie-break).
pub fn argmax_index(path: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in path.iter().enumerate() {
        if v > path[best] {
            best = k;
        }
    }
    best
}

/// Normalized histogram of argmax locations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgmaxHistogram {
    pub bin_left: Vec<f64>,
    pub bin_right: Vec<f64>,
    pub mass: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
}

impl ArgmaxHistogram {
    /// Bins `[edges[b], edges[b+1])`, the last one closed.
    pub fn from_locations(locations: &[f64], edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("histogram edges must be increasing, 2+ values".into()));
        }
        let nb = edges.len() - 1;
        let mut counts = vec![0usize; nb];
        for &x in locations {
            if x < edges[0] || x > edges[nb] {
                continue;
            }
            let b = edges.partition_point(|&e| e <= x).saturating_sub(1).min(nb - 1);
            counts[b] += 1;
        }
        let n = locations.len();
        let (mass, stderr) = counts
            .iter()
            .map(|&c| {
                let e = MCEstimate::proportion(c, n.max(1));
                (e.value, e.stderr)
            })
            .unzip();
        Ok(ArgmaxHistogram {
            bin_left: edges[..nb].to_vec(),
            bin_right: edges[1..].to_vec(),
            mass,
            stderr,
            n,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,mass,stderr\n");
        for b in 0..self.mass.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.bin_left[b], self.bin_right[b], self.mass[b], self.stderr[b]
            ));
        }
        out
    }
}

/// Per-grid-point argmax histogram of an ensemble: one bin per grid time,
/// bounded by midpoints between neighbours.
pub fn argmax_histogram(ens: &PathEnsemble) -> Result<ArgmaxHistogram> {
    if ens.n_paths == 0 || ens.times.is_empty() {
        return Err(Error::Invalid("ensemble is empty".into()));
    }
    let t = &ens.times;
    let m = t.len();
    let mut edges = Vec::with_capacity(m + 1);
    edges.push(t[0]);
    for k in 1..m {
        edges.push(0.5 * (t[k - 1] + t[k]));
    }
    edges.push(if m > 1 { t[m - 1] } else { t[0] + 1.0 });
    if m > 1 && edges[m] <= edges[m - 1] {
        edges[m] = edges[m - 1] + f64::EPSILON;
    }
    let mut counts = vec![0usize; m];
    for i in 0..ens.n_paths {
        counts[argmax_index(ens.path(i))] += 1;
    }
    let n = ens.n_paths;
    let (mass, stderr) = counts
        .iter()
        .map(|&c| {
            let e = MCEstimate::proportion(c, n);
            (e.value, e.stderr)
        })
        .unzip();
    Ok(ArgmaxHistogram { bin_left: edges[..m].to_vec(), bin_right: edges[1..].to_vec(), mass, stderr, n })
}

/// Argmax grid indices of stationary OU paths on `times`, without storing
/// the paths.
pub fn ou_argmax_indices(times: &[f64], n_paths: usize, seed: u64) -> Result<Vec<usize>> {
    check_times(times)?;
    let (a, b) = ou_coefficients(times);
    Ok(streaming_argmax(&a, &b, None, n_paths, seed))
}

/// Argmax grid indices of Gauss-Markov paths (standardized when asked),
/// without storing the paths.
pub fn gauss_markov_argmax_indices(
    maps: &TimeChangeMap,
    times: &[f64],
    n_paths: usize,
    seed: u64,
    standardized: bool,
) -> Result<Vec<usize>> {
    let (a, b, scale) = gauss_markov_coefficients(maps, times, standardized)?;
    Ok(streaming_argmax(&a, &b, Some(&scale), n_paths, seed))
}

fn streaming_argmax(a: &[f64], b: &[f64], scale: Option<&[f64]>, n_paths: usize, seed: u64) -> Vec<usize> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            let mut z = 0.0;
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for k in 0..a.len() {
                z = a[k] * z + b[k] * rng.sample::<f64, _>(StandardNormal);
                let out = scale.map_or(z, |s| z * s[k]);
                if out > best {
                    best = out;
                    arg = k;
                }
            }
            arg
        })
        .collect()
}

/// Monte Carlo CDF `P(first passage of R from x to y ≤ u)` at each of
/// `u_values`, by the exact OU transition on steps `dt` with a
/// Brownian-bridge crossing test between steps (crossing probability
/// `exp(−2(y − a)(y − b)/dt)` given endpoints `a, b < y`).
pub fn first_passage_mc(x: f64, y: f64, u_values: &[f64], dt: f64, n_paths: usize, seed: u64) -> Result<Vec<MCEstimate>> {
    if !(x < y) {
        return Err(Error::Invalid(format!("need x < y, got x = {x}, y = {y}")));
    }
    if !(dt > 0.0) || u_values.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::Invalid("dt and u values must be positive".into()));
    }
    let u_max = u_values.iter().cloned().fold(0.0, f64::max);
    let n_steps = (u_max / dt).ceil() as usize;
    let a = (-0.5 * dt).exp();
    let b = (-(-dt).exp_m1()).sqrt();
    let hits: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            let mut r = x;
            for k in 1..=n_steps {
                let next = a * r + b * rng.sample::<f64, _>(StandardNormal);
                let u: f64 = rng.random();
                if next >= y || u < (-2.0 * (y - r) * (y - next) / dt).exp() {
                    return k as f64 * dt;
                }
                r = next;
            }
            f64::INFINITY
        })
        .collect();
    Ok(u_values
        .iter()
        .map(|&u| {
            let c = hits.iter().filter(|&&h| h <= u + 1e-12 * dt).count();
            MCEstimate::proportion(c, n_paths)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{alpha_wiener_spec, AlphaWienerParams};

    fn wiener_bridge() -> crate::families::Family {
        alpha_wiener_spec(&AlphaWienerParams { alpha: 1.0, t_end: 1.0 }).unwrap()
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let times = [0.1, 0.5, 0.9];
        let a = sample_stationary_ou(&times, 64, 7).unwrap();
        let b = sample_stationary_ou(&times, 64, 7).unwrap();
        let c = sample_stationary_ou(&times, 64, 8).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
        // path i depends only on (seed, i)
        let d = sample_stationary_ou(&times, 10, 7).unwrap();
        assert_eq!(&a.values[..30], &d.values[..]);
    }

    #[test]
    fn degenerate_time_gives_the_mean() {
        let fam = wiener_bridge();
        let ens = sample_exact(&fam.kernel, &[0.0, 0.5], 100, 1).unwrap();
        assert!(ens.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_sampling_variance() {
        let fam = wiener_bridge();
        let ens = sample_exact(&fam.kernel, &[0.25, 0.5, 0.75], 20_000, 3).unwrap();
        let e = covariance_estimate(&ens, 1, 1);
        assert!((e.value - 0.25).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn gauss_markov_matches_kernel() {
        let fam = wiener_bridge();
        let times = [0.2, 0.4, 0.8];
        let ens = sample_gauss_markov(fam.maps.as_ref().unwrap(), &times, 20_000, 5, false).unwrap();
        let (val, se) = covariance_matrix(&ens);
        for i in 0..3 {
            for j in 0..3 {
                let want = fam.kernel.cov(times[i], times[j]);
                assert!((val[(i, j)] - want).abs() < 4.0 * se[(i, j)], "{i},{j}");
            }
        }
    }

    #[test]
    fn vanishing_noise_follows_the_ode() {
        let spec = ProcessSpec::new(
            "ode",
            crate::process::Horizon::finite(1.0),
            std::sync::Arc::new(|t: f64| (1.0 - t).powi(2)),
            std::sync::Arc::new(|_| 0.0),
            std::sync::Arc::new(|_| 1e-300),
            1.5,
        )
        .unwrap();
        let ens = sample_euler(&spec, 1e-4, 0.5, Some(&[0.25, 0.5]), 3, 2).unwrap();
        assert!(!ens.truncated);
        for i in 0..3 {
            let p = ens.path(i);
            assert!((p[0] - 1.5 * 0.75f64.powi(2)).abs() < 1e-3);
            assert!((p[1] - 1.5 * 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn argmax_tie_breaks_left() {
        assert_eq!(argmax_index(&[1.0, 3.0, 3.0, 2.0]), 1);
        let ens = PathEnsemble {
            times: vec![0.0, 0.5, 1.0],
            values: vec![2.0; 6],
            n_paths: 2,
            seed: 0,
            method: SamplingMethod::OuRecursion,
            truncated: false,
        };
        let h = argmax_histogram(&ens).unwrap();
        assert_eq!(h.mass, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn ou_unit_variance_and_lag_correlation() {
        let times = [0.0, 0.7];
        let ens = sample_stationary_ou(&times, 40_000, 11).unwrap();
        let v = covariance_estimate(&ens, 1, 1);
        assert!((v.value - 1.0).abs() < 4.0 * v.stderr);
        let c = covariance_estimate(&ens, 0, 1);
        assert!((c.value - (-0.35f64).exp()).abs() < 4.0 * c.stderr);
    }

    #[test]
    fn jitter_ladder_reports_indefinite_matrices() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = jittered_cholesky(&g).unwrap_err();
        assert!(format!("{err}").contains("smallest eigenvalue"));
    }
}
