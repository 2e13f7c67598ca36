//! Two Gaussian kernels that are not space-time scaled stationary OU
//! kernels:
//!
//! - zero-area Wiener bridge on `[0, 1]`: `s∧t − st − 3st(1 − s)(1 − t)`,
//!   which is negative at `(ε, 1 − ε)` for small ε since it equals
//!   `ε²(−3ε² + 6ε − 2)` there;
//! - two independent Wiener bridges glued at `t = 1` on `[0, 2]`, whose
//!   cross-block covariance vanishes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::process::CovarianceKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleKind {
    ZeroArea,
    Glued,
}

#[derive(Debug, Clone)]
pub struct CounterexampleKernel {
    pub kind: CounterexampleKind,
    pub kernel: CovarianceKernel,
}

fn bridge(s: f64, t: f64) -> f64 {
    s.min(t) - s * t
}

pub fn counterexample_kernel(kind: CounterexampleKind) -> CounterexampleKernel {
    let kernel = match kind {
        CounterexampleKind::ZeroArea => CovarianceKernel::new(
            "zero-area",
            (0.0, 1.0),
            true,
            Arc::new(|s, t| bridge(s, t) - 3.0 * s * t * (1.0 - s) * (1.0 - t)),
            Arc::new(|_| 0.0),
        ),
        CounterexampleKind::Glued => CovarianceKernel::new(
            "glued",
            (0.0, 2.0),
            true,
            Arc::new(|s, t| {
                if s <= 1.0 && t <= 1.0 {
                    bridge(s, t)
                } else if s >= 1.0 && t >= 1.0 {
                    bridge(s - 1.0, t - 1.0)
                } else {
                    0.0
                }
            }),
            Arc::new(|_| 0.0),
        ),
    };
    CounterexampleKernel { kind, kernel }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_area_values() {
        let k = counterexample_kernel(CounterexampleKind::ZeroArea).kernel;
        let e: f64 = 0.1;
        let want = e * e * (-3.0 * e * e + 6.0 * e - 2.0);
        assert!((k.cov(e, 1.0 - e) - want).abs() < 1e-16);
        assert!((want + 0.0143).abs() < 1e-15);
        assert!((k.cov(0.5, 0.5) - 1.0 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn glued_blocks() {
        let k = counterexample_kernel(CounterexampleKind::Glued).kernel;
        assert_eq!(k.cov(0.5, 1.5), 0.0);
        assert_eq!(k.cov(0.5, 0.5), 0.25);
        assert_eq!(k.cov(1.5, 1.5), 0.25);
        assert_eq!(k.cov(1.0, 1.0), 0.0);
    }

    #[test]
    fn both_kernels_are_positive_semidefinite() {
        let grid: Vec<f64> = (1..40).map(|i| i as f64 / 20.0).collect();
        let g = counterexample_kernel(CounterexampleKind::Glued).kernel;
        assert!(g.min_eigenvalue(&grid).unwrap() > -1e-12);
        let z = counterexample_kernel(CounterexampleKind::ZeroArea).kernel;
        let inner: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        assert!(z.min_eigenvalue(&inner).unwrap() > -1e-12);
    }
}
