//! Adaptive Dormand–Prince 5(4) stepping for small complex systems, with
//! steps clamped so that every requested output point is hit exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State<const N: usize> = [Complex64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each
/// of `outputs`, which must be monotone in the direction of integration.
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: State<N>,
    outputs: &[f64],
    rtol: f64,
    atol: f64,
    max_steps: usize,
) -> Result<Vec<State<N>>>
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&last) = outputs.last() else {
        return Ok(out);
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = (last - t0).abs();
    let mut h = (0.01 * span).max(1e-6);
    let mut steps = 0;
    for &target in outputs {
        if (target - t) * dir < 0.0 {
            return Err(Error::Invalid("ODE output points must be monotone".into()));
        }
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > max_steps {
                return Err(Error::Numerical(format!("ODE step budget {max_steps} exhausted at t = {t}")));
            }
            let remaining = (target - t).abs();
            let hit = h >= remaining;
            let step = dir * if hit { remaining } else { h };
            let k2 = f(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]));
            let k3 = f(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * step, &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + step,
                &axpy(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let t_new = if hit { target } else { t + step };
            let k7 = f(t_new, &y_new);
            let mut err2 = 0.0;
            for i in 0..N {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = atol + rtol * y[i].norm().max(y_new[i].norm());
                err2 += (e.norm() / scale).powi(2);
            }
            let err = (err2 / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                if h < 1e-14 * span.max(1.0) {
                    return Err(Error::Numerical(format!("ODE solution became non-finite near t = {t}")));
                }
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                if !hit {
                    h *= factor;
                }
            } else {
                h = step.abs() * factor.min(1.0);
                if h < 1e-14 * span.max(1.0) {
                    return Err(Error::Numerical(format!("ODE step size underflow at t = {t}")));
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_complex_system() {
        let w = Complex64::new(-0.3, 2.0);
        let outs = [0.5, 1.0, 3.0];
        let ys = integrate(|_, y: &[Complex64; 1]| [w * y[0]], 0.0, [Complex64::new(1.0, 0.0)], &outs, 1e-12, 1e-14, 100_000)
            .unwrap();
        for (t, y) in outs.iter().zip(&ys) {
            assert!((y[0] - (w * t).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn backward_integration() {
        let ys = integrate(|t, _: &[Complex64; 1]| [Complex64::new(2.0 * t, 0.0)], 2.0, [Complex64::new(4.0, 0.0)], &[1.0, -1.0], 1e-12, 1e-14, 10_000)
            .unwrap();
        assert!((ys[0][0].re - 1.0).abs() < 1e-12);
        assert!((ys[1][0].re - 1.0).abs() < 1e-12);
    }
}
