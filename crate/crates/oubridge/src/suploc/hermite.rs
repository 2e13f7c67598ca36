//! Normalized Hermite functions `Ĥ_ν(z) = H_ν(z)/H_ν(0)`, `Re ν ≤ 0`.
//!
//! For `w ≥ 0`
//!
//! ```text
//! Ĥ_ν(w) = (2/√π) ∫₀^∞ e^{−s²} (1 + w²/s²)^{ν/2} ds,
//! ```
//!
//! and `Hr_α(v) + i Hi_α(v)` is this integral at `ν = iα`, `w = |v|`.
//! With `s = w e^{−τ}` the integrand
//! `w exp(−τ − w²e^{−2τ}) (1 + e^{2τ})^{ν/2}` is analytic for
//! `|Im τ| < π/2` and decays super-exponentially as `Re τ → −∞` while
//! `|Im τ| < π/4`. The path is moved to `Im τ = c`, `c = ±π/6` with the
//! sign of `Im ν`, which turns the oscillation `e^{iατ}` into the damping
//! `e^{−|α c|}`. Beyond a cut `τ₁` the factor `G(x) = e^{−w²x}(1 + x)^{ν/2}`,
//! `x = e^{−2τ}`, is expanded in powers of `x` and integrated termwise;
//! the coefficients obey
//! `(k+1) g_{k+1} = (ν/2 − k − w²) g_k − w² g_{k−1}`.
//!
//! The integral is even in `w`, whereas `H_ν` is not. For `z < 0` the
//! function is continued through `p = Ĥ'/Ĥ`, which solves
//! `p' = 2zp − 2ν − p²` with `p(0) = ν Γ((1−ν)/2) / Γ(1−ν/2)`; integrating
//! towards negative `z` follows the dominant solution and is stable.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ode;
use crate::error::{Error, Result};
use crate::quad::adaptive_complex;
use crate::special::ln_gamma;

/// Absolute accuracy requested from [`hermite_real`] and [`hermite_imag`].
pub const HERMITE_TOL: f64 = 1e-12;

const MAX_PANELS: usize = 4000;

/// `Hr_α` and `Hi_α` for a fixed order.
#[derive(Debug, Clone, Copy)]
pub struct HermiteEval {
    pub alpha: f64,
    pub tol: f64,
}

impl HermiteEval {
    pub fn new(alpha: f64) -> Self {
        HermiteEval { alpha, tol: HERMITE_TOL }
    }

    /// `Hr_α(v) + i Hi_α(v)`.
    pub fn eval(&self, v: f64) -> Result<Complex64> {
        if !(self.alpha.is_finite() && v.is_finite()) {
            return Err(Error::Invalid(format!("Hermite arguments must be finite: alpha = {}, v = {v}", self.alpha)));
        }
        Ok(hermite_integral(Complex64::new(0.0, self.alpha), v.abs(), self.tol)?.0)
    }

    pub fn real(&self, v: f64) -> Result<f64> {
        Ok(self.eval(v)?.re)
    }

    pub fn imag(&self, v: f64) -> Result<f64> {
        Ok(self.eval(v)?.im)
    }
}

/// `Hr_α(v) = (2/√π) ∫₀^∞ e^{−s²} cos((α/2) ln(1 + v²/s²)) ds`.
pub fn hermite_real(alpha: f64, v: f64) -> Result<f64> {
    HermiteEval::new(alpha).real(v)
}

/// `Hi_α(v) = (2/√π) ∫₀^∞ e^{−s²} sin((α/2) ln(1 + v²/s²)) ds`.
pub fn hermite_imag(alpha: f64, v: f64) -> Result<f64> {
    HermiteEval::new(alpha).imag(v)
}

/// `ln(1 + e^{2τ})` on the principal branch for `|Im τ| < π/4`.
fn ln1p_exp2(tau: Complex64) -> Complex64 {
    if tau.re > 0.0 {
        2.0 * tau + (1.0 + (-2.0 * tau).exp()).ln()
    } else {
        (1.0 + (2.0 * tau).exp()).ln()
    }
}

/// The integral representation for `w ≥ 0`: value and error estimate.
pub fn hermite_integral(nu: Complex64, w: f64, tol: f64) -> Result<(Complex64, f64)> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::Invalid(format!("integral representation needs finite w >= 0, got {w}")));
    }
    if nu.re > 0.0 {
        return Err(Error::Invalid(format!("integral representation needs Re nu <= 0, got {nu}")));
    }
    let one = Complex64::new(1.0, 0.0);
    if w == 0.0 || nu == Complex64::new(0.0, 0.0) {
        return Ok((one, 0.0));
    }
    let c = if nu.im > 0.0 {
        PI / 6.0
    } else if nu.im < 0.0 {
        -PI / 6.0
    } else {
        0.0
    };
    let shift = Complex64::new(0.0, c);
    let ln_w = w.ln();
    let w2 = w * w;
    let damp = (2.0 * c).cos();
    let integrand = |t: f64| {
        if w2 * (-2.0 * t).exp() * damp > 745.0 {
            return Complex64::new(0.0, 0.0);
        }
        let tau = Complex64::new(t, 0.0) + shift;
        let e = ln_w - tau - w2 * (-2.0 * tau).exp() + 0.5 * nu * ln1p_exp2(tau);
        e.exp()
    };
    let t_lo = ln_w - 2.5;
    let t_hi = (0.5 * (10.0 * (0.5 * nu.norm() + w2 + 1.0)).ln()).max(t_lo + 1.0);
    let norm = 2.0 / PI.sqrt();
    let (body, body_err) = adaptive_complex(integrand, t_lo, t_hi, 0.5 * tol / norm, MAX_PANELS).map_err(|e| match e {
        Error::Quadrature { achieved, requested } => {
            Error::Quadrature { achieved: achieved * norm, requested: requested * norm }
        }
        other => other,
    })?;

    // Termwise tail beyond τ₁ = t_hi + ic.
    let tau1 = Complex64::new(t_hi, 0.0) + shift;
    let x1 = (-2.0 * tau1).exp();
    let lead = (ln_w + (nu - 1.0) * tau1).exp();
    let half_nu = 0.5 * nu;
    let (mut g_prev, mut g) = (Complex64::new(0.0, 0.0), one);
    let mut xk = one;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    let mut small = 0;
    for k in 0..400 {
        let kf = k as f64;
        let term = g * xk / (1.0 + 2.0 * kf - nu);
        tail += term;
        last = term.norm();
        small = if last < 1e-18 * (1.0 + tail.norm()) { small + 1 } else { 0 };
        if small >= 3 {
            break;
        }
        let g_next = ((half_nu - kf - w2) * g - w2 * g_prev) / (kf + 1.0);
        g_prev = g;
        g = g_next;
        xk *= x1;
    }
    tail *= lead;
    let err = norm * (body_err + last * lead.norm());
    if small < 3 || err > tol {
        return Err(Error::Quadrature { achieved: err, requested: tol });
    }
    Ok((norm * (body + tail), err))
}

/// `p(0) = Ĥ_ν'(0)`.
fn log_derivative_at_zero(nu: Complex64) -> Complex64 {
    if nu == Complex64::new(0.0, 0.0) {
        return nu;
    }
    nu * (ln_gamma((1.0 - nu) * 0.5) - ln_gamma(1.0 - nu * 0.5)).exp()
}

/// `ln Ĥ_ν(z)` by integrating the Riccati equation for `Ĥ'/Ĥ` from 0.
fn riccati_log(nu: Complex64, z: f64) -> Result<Complex64> {
    if z == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p0 = log_derivative_at_zero(nu);
    let zero = Complex64::new(0.0, 0.0);
    let sol = ode::integrate(
        |t, y: &[Complex64; 2]| [2.0 * t * y[0] - 2.0 * nu - y[0] * y[0], y[0]],
        0.0,
        [p0, zero],
        &[z],
        1e-12,
        1e-14,
        200_000,
    )?;
    Ok(sol[0][1])
}

/// `ln Ĥ_ν(z)` for real `z` and `Re ν ≤ 0`.
pub fn ln_hermite_hat(nu: Complex64, z: f64, tol: f64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::Invalid(format!("Hermite argument must be finite, got {z}")));
    }
    if z >= 0.0 {
        let (h, _) = hermite_integral(nu, z, tol)?;
        if h == Complex64::new(0.0, 0.0) {
            return Err(Error::Numerical(format!("Hermite function underflows at z = {z}, nu = {nu}")));
        }
        Ok(h.ln())
    } else {
        riccati_log(nu, z)
    }
}

/// `Ĥ_ν(z) = H_ν(z)/H_ν(0)` for real `z` and `Re ν ≤ 0`.
pub fn hermite_hat(nu: Complex64, z: f64, tol: f64) -> Result<Complex64> {
    Ok(ln_hermite_hat(nu, z, tol)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_values() {
        for alpha in [0.0, 0.3, 2.0, 40.0, -7.0] {
            assert_eq!(hermite_real(alpha, 0.0).unwrap(), 1.0);
            assert_eq!(hermite_imag(alpha, 0.0).unwrap(), 0.0);
        }
        for v in [0.1, 1.0, -2.5, 6.0] {
            assert_eq!(hermite_real(0.0, v).unwrap(), 1.0);
            assert_eq!(hermite_imag(0.0, v).unwrap(), 0.0);
        }
    }

    /// Trapezoid rule in `u = ln s` with 10⁶ nodes on the raw integrand.
    fn trapezoid_oracle(alpha: f64, v: f64) -> (f64, f64) {
        let (lo, hi) = (-45.0f64, 7.0f64.ln());
        let n = 1_000_000;
        let h = (hi - lo) / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..=n {
            let u = lo + i as f64 * h;
            let s = u.exp();
            let phase = 0.5 * alpha * (v * v / (s * s)).ln_1p();
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            let m = wt * (-s * s).exp() * s;
            re += m * phase.cos();
            im += m * phase.sin();
        }
        let c = 2.0 / PI.sqrt() * h;
        (c * re, c * im)
    }

    #[test]
    fn matches_trapezoid_oracle() {
        for (alpha, v) in [(2.0, 1.0), (15.0, 0.4), (-3.0, 2.5)] {
            let (re, im) = trapezoid_oracle(alpha, v);
            assert!((hermite_real(alpha, v).unwrap() - re).abs() < 1e-10, "Hr_{alpha}({v})");
            assert!((hermite_imag(alpha, v).unwrap() - im).abs() < 1e-10, "Hi_{alpha}({v})");
        }
    }

    #[test]
    fn order_minus_one_is_scaled_erfc() {
        let nu = Complex64::new(-1.0, 0.0);
        for z in [-1.5, -0.7, 0.0, 0.7, 2.0] {
            let h = hermite_hat(nu, z, 1e-13).unwrap();
            let want = (z * z).exp() * libm::erfc(z);
            assert!((h.re - want).abs() < 1e-11 * want, "z = {z}: {h} vs {want}");
            assert!(h.im.abs() < 1e-13);
        }
    }

    #[test]
    fn continuation_agrees_with_integral_for_small_positive_arguments() {
        for alpha in [0.5, 3.0, 25.0] {
            let nu = Complex64::new(0.0, -alpha);
            for z in [0.05, 0.3] {
                let via_ode = riccati_log(nu, z).unwrap().exp();
                let via_int = hermite_integral(nu, z, 1e-13).unwrap().0;
                assert!((via_ode - via_int).norm() < 1e-9, "alpha {alpha} z {z}: {via_ode} vs {via_int}");
            }
        }
    }

    #[test]
    fn large_orders_decay_like_exp_minus_w_sqrt_alpha() {
        let w: f64 = 0.8;
        for alpha in [200.0f64, 1500.0] {
            let h = HermiteEval::new(alpha).eval(w).unwrap();
            assert!(h.norm() < (-0.5 * w * alpha.sqrt()).exp(), "alpha {alpha}: {h}");
        }
    }
}
