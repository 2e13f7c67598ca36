//! Command implementations. Each turns a merged [`RunConfig`] into an
//! [`Output`]: a JSON envelope, optional CSV files and a verdict.

use std::ops::Index;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use oubridge::families::{build_family, Family, FAMILY_KEYS};
use oubridge::representation::{boundedness_grid, check_boundedness, chebyshev_grid, default_w_max, verify_family};
use oubridge::simulation::{
    covariance_matrix, gauss_markov_argmax_indices, ou_argmax_indices, sample_euler, sample_exact,
    sample_gauss_markov, sample_via_ou, MCEstimate, PathEnsemble,
};
use oubridge::suploc::{
    density_on_grid, reduce_argmax, StandardizedArgmaxSolver, StandardizedProcessMap, SupLocationConfig,
    SupLocationSolver,
};
use oubridge::Horizon;

use crate::config::{GridSpec, Method, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A verified negative result (exit 2).
    Fail,
    /// Quadrature points flagged under `--strict` (exit 3).
    Flagged,
}

pub struct Output {
    pub status: Status,
    pub result: Value,
    /// CSV files written under `--out`, by name.
    pub files: Vec<(String, String)>,
    /// Printed instead of the JSON envelope when there is no `--out`.
    pub stdout_csv: Option<String>,
    /// One-line summary on stderr.
    pub summary: String,
}

impl Output {
    fn new(status: Status, result: Value, summary: String) -> Self {
        Output { status, result, files: Vec::new(), stdout_csv: None, summary }
    }

    pub fn emit(self, cfg: &RunConfig) -> Result<Status, CliError> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let envelope = json!({
            "command": cfg.command,
            "timestamp": timestamp,
            "config": cfg.to_json(),
            "result": self.result,
        });
        let text = serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n";
        match &cfg.out {
            Some(dir) => {
                write(dir, "config.json", &(serde_json::to_string_pretty(&cfg.to_json()).unwrap() + "\n"))?;
                let name = format!("{}.json", cfg.command.as_deref().unwrap_or("result"));
                write(dir, &name, &text)?;
                for (name, body) in &self.files {
                    write(dir, name, body)?;
                }
            }
            None => match &self.stdout_csv {
                Some(csv) => {
                    print!("{csv}");
                    eprint!("{text}");
                }
                None => print!("{text}"),
            },
        }
        eprintln!("{}", self.summary);
        Ok(self.status)
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command.as_deref() {
        Some("families") => families(),
        Some("kernel") => kernel(cfg),
        Some("verify") => verify(cfg),
        Some("boundedness") => boundedness(cfg),
        Some("simulate") => simulate(cfg),
        Some("compare") => compare(cfg),
        Some("suploc") => suploc(cfg),
        Some("reduce") => reduce(cfg),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

fn family(cfg: &RunConfig) -> Result<Family, CliError> {
    let name = cfg.family.as_deref().ok_or_else(|| CliError::Usage("--family is required".into()))?;
    Ok(build_family(name, cfg.params.as_ref().unwrap_or(&Value::Null))?)
}

/// The interval on which grids of a family are laid out.
fn span(fam: &Family) -> (f64, f64) {
    match fam.maps.as_ref().map(|m| m.horizon()) {
        Some(Horizon::Finite { t }) => (0.0, t),
        Some(Horizon::Infinite { probe_max }) => (0.0, probe_max),
        None => fam.kernel.domain(),
    }
}

fn chebyshev(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    chebyshev_grid(hi - lo, n).into_iter().map(|t| lo + t).collect()
}

fn uniform_interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

fn layout(grid: &GridSpec, lo: f64, hi: f64, chebyshev_layout: bool) -> Result<Vec<f64>, CliError> {
    let g = match grid {
        GridSpec::Count(0) => return Err(CliError::Usage("grid count must be positive".into())),
        GridSpec::Count(n) if chebyshev_layout => chebyshev(lo, hi, *n),
        GridSpec::Count(n) => uniform_interior(lo, hi, *n),
        GridSpec::Points(p) => p.clone(),
    };
    if g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|t| !(*t > lo && *t < hi)) {
        return Err(CliError::Usage(format!("grid must be strictly increasing inside ({lo}, {hi})")));
    }
    Ok(g)
}

fn e16(x: f64) -> String {
    format!("{x:.16e}")
}

fn families() -> Result<Output, CliError> {
    let params: [(&str, &str); 8] = [
        ("alpha-wiener", "alpha, T"),
        ("general-alpha-wiener", "alpha (expression in t), T, alpha_at_T, deltas [d1, d2]"),
        ("ou-bridge", "q, sigma (number or expression), a, b, T"),
        (
            "f-wiener",
            "distribution: uniform (T) | power (alpha, T) | exponential (rate, t_max) | custom (f, F, T or \"inf\", t_max)",
        ),
        ("weighted", "w (expression, w(0) = 1), bridge (bool), t_max"),
        ("zero-area", "none"),
        ("glued", "none"),
        ("custom", "phi, psi, sigma (expressions), T (number or \"inf\"), xi, t_max"),
    ];
    debug_assert!(params.iter().zip(FAMILY_KEYS).all(|(p, k)| p.0 == k));
    let list: Vec<Value> = params.iter().map(|(k, p)| json!({"key": k, "parameters": p})).collect();
    Ok(Output::new(Status::Pass, Value::Array(list), format!("{} families", params.len())))
}

fn kernel(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let (lo, hi) = span(&fam);
    let grid = layout(cfg.grid.as_ref().unwrap_or(&GridSpec::Count(16)), lo, hi, true)?;
    let mut csv = String::from("s,t,cov,representation,abs_diff\n");
    let mut worst = 0.0f64;
    for &s in &grid {
        for &t in &grid {
            let c = fam.kernel.cov(s, t);
            let rep = match &fam.maps {
                Some(m) => m.v(s)? * m.v(t)? * (-(m.beta(t)? - m.beta(s)?).abs() / 2.0).exp(),
                None => f64::NAN,
            };
            let d = (c - rep).abs();
            if d.is_finite() {
                worst = worst.max(d);
            }
            csv.push_str(&format!("{},{},{},{},{}\n", e16(s), e16(t), e16(c), e16(rep), e16(d)));
        }
    }
    let has_rep = fam.maps.is_some();
    let result = json!({
        "family": fam.name,
        "label": fam.kernel.label(),
        "grid": grid,
        "max_abs_diff": if has_rep { Some(worst) } else { None },
    });
    let mut out = Output::new(Status::Pass, result, format!("{} grid points, max |diff| {worst:.3e}", grid.len()));
    out.files.push(("kernel.csv".into(), csv.clone()));
    out.stdout_csv = Some(csv);
    Ok(out)
}

fn verify(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let (lo, hi) = span(&fam);
    let grid = match &cfg.grid {
        Some(g) => Some(layout(g, lo, hi, true)?),
        None => None,
    };
    let tol = cfg.tol.unwrap_or(if fam.closed_form { 1e-8 } else { 1e-6 });
    let report = verify_family(&fam, grid.as_deref(), tol)?;
    let status = if report.representable { Status::Pass } else { Status::Fail };
    let mut summary = format!("{}: {}", report.label, if report.representable { "representable" } else { "not representable" });
    if let Some(w) = &report.witness {
        summary.push_str(&format!("; witness {}", serde_json::to_string(w).unwrap()));
    }
    Ok(Output::new(status, serde_json::to_value(&report).unwrap(), summary))
}

fn boundedness(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let maps = fam.maps.as_ref().ok_or_else(|| CliError::Usage(format!("{} has no time change", fam.name)))?;
    if !maps.horizon().is_finite() {
        return Err(CliError::Usage("boundedness needs a finite horizon".into()));
    }
    let eps = cfg
        .epsilon
        .or(fam.epsilon)
        .ok_or_else(|| CliError::Usage(format!("no known epsilon for {}; pass --epsilon", fam.name)))?;
    let w_max = default_w_max(maps, eps, maps.has_tail());
    let rec = check_boundedness(maps, eps, &boundedness_grid(w_max))?;
    let status = if rec.bounded { Status::Pass } else { Status::Fail };
    let summary = format!("sup {:.6e}, limit {:.6e}, bounded {}", rec.sup_value, rec.limit_estimate, rec.bounded);
    let result = json!({
        "family": fam.name,
        "record": rec,
        "analytic_limit": fam.bound_limit,
        "general_bound": fam.general_bound,
    });
    Ok(Output::new(status, result, summary))
}

#[derive(Serialize)]
struct Moment {
    t: f64,
    mean: MCEstimate,
    var: MCEstimate,
    kernel_mean: f64,
    kernel_var: f64,
}

fn moments(ens: &PathEnsemble, fam: &Family) -> Vec<Moment> {
    (0..ens.n_times())
        .map(|j| {
            let col = ens.column(j);
            let mean = MCEstimate::from_samples(&col);
            let sq: Vec<f64> = col.iter().map(|x| (x - mean.value).powi(2)).collect();
            let t = ens.times[j];
            Moment { t, mean, var: MCEstimate::from_samples(&sq), kernel_mean: fam.kernel.mean(t), kernel_var: fam.kernel.cov(t, t) }
        })
        .collect()
}

fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let (lo, hi) = span(&fam);
    let times = layout(cfg.grid.as_ref().unwrap_or(&GridSpec::Count(9)), lo, hi, false)?;
    let n = cfg.paths.unwrap_or(1000);
    let seed = cfg.seed.unwrap_or(0);
    let method = cfg.method.unwrap_or(Method::Exact);
    let need_maps = || fam.maps.as_ref().ok_or_else(|| CliError::Usage(format!("{} has no time change", fam.name)));
    let ens = match method {
        Method::Exact => sample_exact(&fam.kernel, &times, n, seed)?,
        Method::ViaOu => sample_via_ou(need_maps()?, &times, n, seed)?,
        Method::GaussMarkov => sample_gauss_markov(need_maps()?, &times, n, seed, false)?,
        Method::Euler => {
            let spec = fam.spec.as_ref().ok_or_else(|| CliError::Usage(format!("{} has no SDE", fam.name)))?;
            let dt = cfg.dt.unwrap_or(1e-3);
            sample_euler(spec, dt, *times.last().unwrap(), Some(&times), n, seed)?
        }
    };
    let result = json!({
        "family": fam.name,
        "method": method,
        "n_paths": ens.n_paths,
        "seed": seed,
        "truncated": ens.truncated,
        "moments": moments(&ens, &fam),
    });
    let mut out = Output::new(Status::Pass, result, format!("{} paths on {} times", ens.n_paths, ens.n_times()));
    out.files.push(("paths.csv".into(), ens.to_csv()));
    Ok(out)
}

fn compare(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let maps = fam.maps.as_ref().ok_or_else(|| CliError::Usage(format!("{} has no time change", fam.name)))?;
    let (lo, hi) = span(&fam);
    let times = layout(cfg.grid.as_ref().unwrap_or(&GridSpec::Count(8)), lo, hi, false)?;
    let n = cfg.paths.unwrap_or(100_000);
    let seed = cfg.seed.unwrap_or(0);
    let z_max = cfg.z_max.unwrap_or(4.0);
    let exact = sample_exact(&fam.kernel, &times, n, seed)?;
    let via = sample_via_ou(maps, &times, n, seed.wrapping_add(1))?;
    let (c1, s1) = covariance_matrix(&exact);
    let (c2, s2) = covariance_matrix(&via);
    let m = times.len();
    let mut worst = (0.0f64, 0, 0);
    let mut z = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let se = (s1[(i, j)].powi(2) + s2[(i, j)].powi(2)).sqrt();
            z[i][j] = (c1[(i, j)] - c2[(i, j)]).abs() / se;
            if z[i][j] > worst.0 || z[i][j].is_nan() {
                worst = (z[i][j], i, j);
            }
        }
    }
    let (zw, i, j) = worst;
    let pass = zw <= z_max;
    let result = json!({
        "family": fam.name,
        "times": times,
        "n_paths": n,
        "seed": seed,
        "z_max": z_max,
        "max_z": zw,
        "at": [times[i], times[j]],
        "pass": pass,
        "cov_exact": rows(&c1, m),
        "cov_via_ou": rows(&c2, m),
        "z": z,
    });
    let summary = format!("max discrepancy {zw:.3} combined stderr at ({}, {}) vs limit {z_max}", times[i], times[j]);
    Ok(Output::new(if pass { Status::Pass } else { Status::Fail }, result, summary))
}

fn rows(c: &impl Index<(usize, usize), Output = f64>, m: usize) -> Vec<Vec<f64>> {
    (0..m).map(|i| (0..m).map(|j| c[(i, j)]).collect()).collect()
}

fn solver_config(cfg: &RunConfig) -> SupLocationConfig {
    let d = SupLocationConfig::default();
    SupLocationConfig {
        y_max: cfg.y_max.unwrap_or(d.y_max),
        y_nodes: cfg.y_nodes.unwrap_or(d.y_nodes),
        y_nodes_check: cfg.y_nodes_check.unwrap_or(d.y_nodes_check),
        alpha_max: cfg.alpha_max.unwrap_or(d.alpha_max),
        order: cfg.order.unwrap_or(d.order),
        kappa: cfg.kappa.unwrap_or(d.kappa),
        ode_rtol: cfg.ode_rtol.unwrap_or(d.ode_rtol),
        residual_tol: cfg.residual_tol.unwrap_or(d.residual_tol),
        mass_nodes: cfg.mass_nodes.unwrap_or(d.mass_nodes),
        ..d
    }
}

fn interval_of(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    cfg.interval.map(|[a, b]| (a, b)).ok_or_else(|| CliError::Usage("--interval T1 T2 is required".into()))
}

/// Monte Carlo CDF `P(τ ≤ t)` at `points` from argmax indices on `mc_times`.
struct McCheck {
    cdf: Vec<MCEstimate>,
    budget: Vec<f64>,
}

fn mc_cdf(idx: &[usize], mc_times: &[f64], points: &[f64]) -> McCheck {
    let n = idx.len();
    let mut locs: Vec<f64> = idx.iter().map(|&i| mc_times[i]).collect();
    locs.sort_by(f64::total_cmp);
    let rel_h = 1.0 / (mc_times.len() - 1) as f64;
    let cdf: Vec<MCEstimate> =
        points.iter().map(|&p| MCEstimate::proportion(locs.partition_point(|&t| t <= p), n)).collect();
    let budget = cdf.iter().map(|e| 3.0 * e.stderr + rel_h).collect();
    McCheck { cdf, budget }
}

fn mc_columns(csv: &str, mc: &McCheck, quad: &[f64]) -> (String, usize) {
    let mut lines = csv.lines();
    let mut out = format!("{},mc_cdf,mc_stderr,quad_cdf,mc_budget\n", lines.next().unwrap_or(""));
    let mut misses = 0;
    for (k, line) in lines.enumerate() {
        let e = mc.cdf[k];
        if (e.value - quad[k]).abs() > mc.budget[k] {
            misses += 1;
        }
        out.push_str(&format!("{line},{},{},{},{}\n", e16(e.value), e16(e.stderr), e16(quad[k]), e16(mc.budget[k])));
    }
    (out, misses)
}

fn suploc(cfg: &RunConfig) -> Result<Output, CliError> {
    let sc = solver_config(cfg);
    let strict = cfg.strict.unwrap_or(false);
    let mc_grid = cfg.mc_grid.unwrap_or(1024);
    let seed = cfg.seed.unwrap_or(0);
    if mc_grid == 0 {
        return Err(CliError::Usage("--mc-grid must be positive".into()));
    }
    let grid_spec = cfg.grid.clone().unwrap_or(GridSpec::Count(101));
    let (mut result, csv, flagged, points, quad, mc_idx, mc_times) = if cfg.family.is_some() {
        if cfg.t_end.is_some() {
            return Err(CliError::Usage("--T and --family are exclusive".into()));
        }
        let fam = family(cfg)?;
        let maps = fam.maps.clone().ok_or_else(|| CliError::Usage(format!("{} has no time change", fam.name)))?;
        let (t1, t2) = interval_of(cfg)?;
        let map = StandardizedProcessMap::new(fam.name.clone(), maps.clone(), t1, t2)?;
        let solver = StandardizedArgmaxSolver::new(&map, sc)?;
        let grid = layout(&grid_spec, t1, t2, false)?;
        let d = oubridge::suploc::argmax_density_of_standardized(&map, &grid, sc)?;
        let flagged = d.flagged.iter().filter(|&&b| b).count();
        let (quad, mc_idx, mc_times) = match cfg.mc_check {
            Some(n) => {
                let quad = grid.iter().map(|&t| solver.mass(t1, t)).collect::<Result<_, _>>()?;
                let times = (0..=mc_grid).map(|k| t1 + (t2 - t1) * k as f64 / mc_grid as f64).collect::<Vec<_>>();
                (quad, Some(gauss_markov_argmax_indices(&maps, &times, n, seed, true)?), times)
            }
            None => (Vec::new(), None, Vec::new()),
        };
        let csv = d.to_csv();
        (serde_json::to_value(&d).unwrap(), csv, flagged, grid, quad, mc_idx, mc_times)
    } else {
        let t_end = cfg.t_end.ok_or_else(|| CliError::Usage("either --T or --family with --interval is required".into()))?;
        let solver = SupLocationSolver::new(t_end, sc)?;
        let grid = layout(&grid_spec, 0.0, t_end, false)?;
        let d = density_on_grid(&solver, &grid)?;
        let flagged = d.diagnostics.flagged;
        let (quad, mc_idx, mc_times) = match cfg.mc_check {
            Some(n) => {
                let quad = grid.iter().map(|&s| solver.mass(0.0, s)).collect::<Result<_, _>>()?;
                let times = (0..=mc_grid).map(|k| t_end * k as f64 / mc_grid as f64).collect::<Vec<_>>();
                (quad, Some(ou_argmax_indices(&times, n, seed)?), times)
            }
            None => (Vec::new(), None, Vec::new()),
        };
        let csv = d.to_csv();
        (serde_json::to_value(&d).unwrap(), csv, flagged, grid, quad, mc_idx, mc_times)
    };
    let mut csv = csv;
    let mut status = if strict && flagged > 0 { Status::Flagged } else { Status::Pass };
    let mut summary = format!("{} points, {flagged} flagged", points.len());
    if let Some(idx) = mc_idx {
        let mc = mc_cdf(&idx, &mc_times, &points);
        let (with_mc, misses) = mc_columns(&csv, &mc, &quad);
        csv = with_mc;
        result["mc_check"] = json!({
            "n_paths": idx.len(),
            "grid_intervals": mc_grid,
            "seed": seed,
            "budget": "3 stderr + grid spacing / interval length",
            "misses": misses,
        });
        summary.push_str(&format!("; Monte Carlo CDF outside budget at {misses} points"));
        if misses > 0 && status == Status::Pass {
            status = Status::Fail;
        }
    }
    let mut out = Output::new(status, result, summary);
    out.files.push(("suploc.csv".into(), csv.clone()));
    out.stdout_csv = Some(csv);
    Ok(out)
}

fn reduce(cfg: &RunConfig) -> Result<Output, CliError> {
    let fam = family(cfg)?;
    let maps = fam.maps.clone().ok_or_else(|| CliError::Usage(format!("{} has no time change", fam.name)))?;
    let (t1, t2) = interval_of(cfg)?;
    let map = StandardizedProcessMap::new(fam.name.clone(), maps, t1, t2)?;
    let red = reduce_argmax(&map)?;
    let grid = if t2 > t1 { layout(cfg.grid.as_ref().unwrap_or(&GridSpec::Count(9)), t1, t2, false)? } else { Vec::new() };
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let r = red.ou_offset(t)?;
        let back = red.pullback(r)?;
        rows.push(json!({"t": t, "ou_offset": r, "beta_prime": red.beta_prime(t)?, "pullback_error": (back - t).abs()}));
    }
    let result = json!({
        "family": fam.name,
        "t1": t1,
        "t2": t2,
        "ou_interval": [red.ou_interval.0, red.ou_interval.1],
        "length": red.length(),
        "points": rows,
    });
    let summary = format!("[{t1}, {t2}] -> [{}, {}]", red.ou_interval.0, red.ou_interval.1);
    Ok(Output::new(Status::Pass, result, summary))
}
