//! Quadrature rules.
//!
//! - [`gauss_legendre`]: n-point Gauss–Legendre nodes on `[-1, 1]` by Newton
//!   iteration on the three-term recurrence.
//! - [`adaptive`]: globally adaptive Gauss–Kronrod (7/15) integration with
//!   bisection of the interval carrying the largest error estimate;
//!   [`adaptive_complex`] does the same for complex integrands.
//! - [`Composite`]: a fixed panel rule (Gauss–Legendre per panel) used when
//!   the same nodes are reused for many integrands.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton.
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut z = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and weights of a Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (
        x.iter().map(|&xi| c + h * xi).collect(),
        w.iter().map(|&wi| h * wi).collect(),
    )
}

/// Gauss–Legendre rule on a union of panels.
#[derive(Debug, Clone)]
pub struct Composite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Composite {
    /// `order` nodes on each panel `[edges[i], edges[i+1]]`.
    pub fn new(edges: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(order * edges.len());
        let mut weights = Vec::with_capacity(order * edges.len());
        for pair in edges.windows(2) {
            let h = 0.5 * (pair[1] - pair[0]);
            let c = 0.5 * (pair[1] + pair[0]);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(c + h * xi);
                weights.push(h * wi);
            }
        }
        Composite { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15-point panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `abs_tol`, with at most `max_panels` panels.
///
/// The integrand is never evaluated at the endpoints, so integrable endpoint
/// singularities are tolerated.
pub fn adaptive<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    adaptive_mixed(f, a, b, abs_tol, 0.0, max_panels)
}

/// As [`adaptive`], stopping once the error estimate is below
/// `max(abs_tol, rel_tol·|value|)`.
pub fn adaptive_mixed<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, panels: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Invalid(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    let (sign, lo, hi) = if a < b { (1.0, a, b) } else { (-1.0, b, a) };
    let (v, e) = gk15(&mut f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a: lo, b: hi, value: v, err: e });
    let mut total = v;
    let mut err = e;
    let target = |v: f64| abs_tol.max(rel_tol * v.abs());
    while err > target(total) {
        if heap.len() >= max_panels {
            return Err(Error::Quadrature { achieved: err, requested: target(total) });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::Quadrature { achieved: err, requested: target(total) });
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
        if !total.is_finite() {
            return Err(Error::Numerical("non-finite integrand value".into()));
        }
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    Ok(Estimate { value: sign * value, error, panels: heap.len() })
}

/// One Gauss–Kronrod 15-point panel for a complex integrand.
fn gk15_complex<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).norm())
}

/// Adaptive Gauss–Kronrod integration of a complex integrand over `[a, b]`
/// to absolute tolerance `abs_tol`; returns the value and error estimate.
pub fn adaptive_complex<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<(Complex64, f64)> {
    if a == b {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Invalid(format!("integration bounds must be finite and ordered: [{a}, {b}]")));
    }
    let mut panels = vec![(a, b, gk15_complex(&mut f, a, b))];
    loop {
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol {
            let value = panels.iter().map(|p| p.2 .0).sum();
            return Ok((value, err));
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature { achieved: err, requested: abs_tol });
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("at least one panel");
        let (lo, hi, _) = panels.swap_remove(i);
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            return Err(Error::Quadrature { achieved: err, requested: abs_tol });
        }
        let left = gk15_complex(&mut f, lo, m);
        let right = gk15_complex(&mut f, m, hi);
        if !(left.0.is_finite() && right.0.is_finite()) {
            return Err(Error::Numerical("non-finite integrand value".into()));
        }
        panels.push((lo, m, left));
        panels.push((m, hi, right));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn gk15_gauss_and_kronrod_parts_are_exact_to_their_degrees() {
        let mut calls = 0;
        for deg in 0..=22 {
            let mut f = |x: f64| {
                calls += 1;
                x.powi(deg)
            };
            let (v, e) = gk15(&mut f, 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "deg {deg}");
            if deg <= 13 {
                assert!(e < 1e-14, "Gauss-7 part should be exact at degree {deg}");
            }
        }
        assert_eq!(calls, 23 * 15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 500).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
        let est = adaptive(|x: f64| x.ln(), 0.0, 1.0, 1e-12, 500).unwrap();
        assert!((est.value + 1.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_failure_at_cap() {
        let r = adaptive(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10, 20);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let est = adaptive(|x: f64| x.exp(), 1.0, 0.0, 1e-12, 100).unwrap();
        assert!((est.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn composite_rule_integrates_oscillation() {
        let edges: Vec<f64> = (0..=20).map(|k| k as f64 * std::f64::consts::PI).collect();
        let rule = Composite::new(&edges, 16);
        let v = rule.integrate(|x| x.sin().powi(2));
        assert!((v - 10.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
