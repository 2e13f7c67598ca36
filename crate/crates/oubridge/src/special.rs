//! Small special-function kit: normal law, complex log-gamma and the
//! Kolmogorov distribution tail.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(z)` for complex `z` off the non-positive integers (Lanczos, g = 7).
///
/// The imaginary part is defined modulo 2π; callers that exponentiate
/// differences are unaffected.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `ln sin(πz)` without overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = PI * z;
    if w.im > 1.0 {
        let i = Complex64::i();
        -i * w + (1.0 - (2.0 * i * w).exp()).ln() + Complex64::new(0.5f64.ln(), 0.5 * PI)
    } else if w.im < -1.0 {
        ln_sin_pi(z.conj()).conj()
    } else {
        w.sin().ln()
    }
}

/// Asymptotic Kolmogorov tail `P(√n D_n > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials_and_half_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            let v = ln_gamma(Complex64::new(n as f64, 0.0));
            assert!((v.re - fact.ln()).abs() < 1e-12 * fact.ln().abs().max(1.0), "n={n}");
            assert!(v.im.abs() < 1e-14);
            fact *= n as f64;
        }
        let half = ln_gamma(Complex64::new(0.5, 0.0));
        assert!((half.re - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_reflection_branch() {
        // Γ(−1/2) = −2√π
        let v = ln_gamma(Complex64::new(-0.5, 0.0)).exp();
        assert!((v.re + 2.0 * PI.sqrt()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_on_imaginary_direction_obeys_modulus_identity() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for y in [0.3, 2.0, 17.0, 150.0] {
            let v = ln_gamma(Complex64::new(0.5, y));
            let want = 0.5 * (PI.ln() - (PI * y).cosh().ln());
            assert!((v.re - want).abs() < 1e-10 * want.abs().max(1.0), "y={y}");
        }
        // |Γ(1 + iy)|² = πy / sinh(πy)
        for y in [0.7, 40.0] {
            let v = ln_gamma(Complex64::new(1.0, y));
            let want = 0.5 * ((PI * y).ln() - (PI * y).sinh().ln());
            assert!((v.re - want).abs() < 1e-10 * want.abs().max(1.0), "y={y}");
        }
    }

    #[test]
    fn ln_gamma_recurrence() {
        let z = Complex64::new(0.3, -4.2);
        let lhs = (ln_gamma(z + 1.0) - ln_gamma(z)).exp();
        assert!((lhs - z).norm() < 1e-12);
    }

    #[test]
    fn normal_law_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        let p = normal_cdf(1.96);
        assert!((p - 0.975_002_104_851_779_5).abs() < 1e-14, "{p}");
        assert!((normal_pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-16);
    }

    #[test]
    fn kolmogorov_tail_reference_point() {
        // the 5% critical value of the limiting distribution is 1.3581
        assert!((kolmogorov_tail(1.358_1) - 0.05).abs() < 1e-4);
    }
}
