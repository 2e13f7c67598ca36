//! Property tests for the invariants of each module.

use proptest::prelude::*;

use oubridge::families::{
    alpha_wiener_spec, counterexample_kernel, f_wiener_spec, ou_bridge_kernel, AlphaWienerParams, CounterexampleKind,
    FWienerParams, OuBridgeParams,
};
use oubridge::representation::{kernel_representability, SeparabilityVerdict, MULTIPLICATIVE_REL_TOL};
use oubridge::simulation::{sample_exact, MCEstimate};
use oubridge::stationary_ou_cov;
use oubridge::suploc::{
    hermite_imag, hermite_real, reduce_argmax, FirstPassageConfig, FirstPassageDensity, StandardizedProcessMap,
    SupLocationConfig, SupLocationSolver,
};

fn sorted_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.001f64..0.999, 0.001f64..0.999).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

/// Strictly increasing grid of `n` points in `(lo, hi)`.
fn grid(lo: f64, hi: f64, n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(move |mut u| {
        u.sort_by(f64::total_cmp);
        let mut g: Vec<f64> = u.iter().map(|x| lo + (hi - lo) * (0.02 + 0.96 * x)).collect();
        g.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        g
    })
}

proptest! {
    #[test]
    fn stationary_kernel_is_multiplicative(a in -20.0f64..20.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0) {
        let (b, c) = (a + d1, a + d1 + d2);
        prop_assert_eq!(stationary_ou_cov(a, a), 1.0);
        let r = stationary_ou_cov(a, c);
        prop_assert!(r > 0.0 && r <= 1.0);
        prop_assert!((r - stationary_ou_cov(a, b) * stationary_ou_cov(b, c)).abs() <= 1e-15);
        prop_assert_eq!(stationary_ou_cov(a, b), stationary_ou_cov(b, a));
    }

    #[test]
    fn alpha_wiener_representation(alpha in 0.05f64..3.0, t_end in 0.5f64..3.0, (u, w) in sorted_pair()) {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end }).unwrap();
        let maps = fam.maps.unwrap();
        let (s, t) = (u * t_end, w * t_end);
        let cov = fam.kernel.cov(s, t);
        let rep = maps.v(s).unwrap() * maps.v(t).unwrap()
            * stationary_ou_cov(maps.beta(s).unwrap(), maps.beta(t).unwrap());
        prop_assert!((cov - rep).abs() <= 1e-9 * cov.abs().max(1.0), "{} vs {}", cov, rep);
        prop_assert!((fam.kernel.cov(t, s) - cov).abs() <= 1e-15 * cov.abs().max(1.0));
        prop_assert!((fam.kernel.cov(t, t) - maps.v(t).unwrap().powi(2)).abs() <= 1e-9 * cov.abs().max(1.0));
        if t > s {
            prop_assert!(maps.beta(t).unwrap() > maps.beta(s).unwrap());
        }
    }

    #[test]
    fn ou_bridge_variance_and_pinning(q in -2.0f64..2.0, sigma in 0.2f64..2.0, t_end in 0.5f64..3.0, u in 0.01f64..0.99) {
        prop_assume!(q.abs() > 1e-3);
        let fam = ou_bridge_kernel(&OuBridgeParams::constant(q, sigma, 0.0, 0.0, t_end)).unwrap();
        let t = u * t_end;
        // Variance of dZ = qZ dt + σ dB pinned at 0 on [0, T].
        let want = sigma * sigma * (q * t).sinh() * (q * (t_end - t)).sinh() / (q * (q * t_end).sinh());
        prop_assert!((fam.kernel.cov(t, t) - want).abs() <= 1e-10 * want.max(1.0));
        let near_end = t_end * (1.0 - 1e-9);
        prop_assert!(fam.kernel.cov(t, near_end).abs() <= 1e-7 * sigma * sigma * t_end.max(1.0));
    }

    #[test]
    fn kernels_are_positive_semidefinite(alpha in 0.3f64..4.0, g in grid(0.0, 1.0, 12)) {
        let fw = f_wiener_spec(&FWienerParams::power(alpha, 1.0)).unwrap();
        prop_assert!(fw.kernel.min_eigenvalue(&g).unwrap() >= -1e-12);
        let za = counterexample_kernel(CounterexampleKind::ZeroArea).kernel;
        prop_assert!(za.min_eigenvalue(&g).unwrap() >= -1e-12);
        let gl = counterexample_kernel(CounterexampleKind::Glued).kernel;
        let g2: Vec<f64> = g.iter().map(|t| 2.0 * t).collect();
        prop_assert!(gl.min_eigenvalue(&g2).unwrap() >= -1e-12);
    }

    #[test]
    fn zero_area_fails_on_grids_holding_its_witness(g in grid(0.12, 0.88, 10)) {
        let za = counterexample_kernel(CounterexampleKind::ZeroArea).kernel;
        let mut pts = vec![0.1];
        pts.extend(g);
        pts.push(0.9);
        let rep = kernel_representability(&za, &pts, MULTIPLICATIVE_REL_TOL).unwrap();
        prop_assert!(!rep.representable);
        prop_assert_eq!(rep.separability_verdict, SeparabilityVerdict::FailNegativeCorrelation);
        prop_assert!(rep.witness.is_some());
    }

    #[test]
    fn hermite_bounds_and_special_values(alpha in -60.0f64..60.0, v in -6.0f64..6.0) {
        let (hr, hi) = (hermite_real(alpha, v).unwrap(), hermite_imag(alpha, v).unwrap());
        prop_assert!(hr.abs() <= 1.0 + 1e-12 && hi.abs() <= 1.0 + 1e-12, "{} {}", hr, hi);
        prop_assert!((hermite_real(alpha, 0.0).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!(hermite_imag(alpha, 0.0).unwrap().abs() <= 1e-12);
        prop_assert!((hermite_real(0.0, v).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!(hermite_imag(0.0, v).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn exact_sampling_is_reproducible(seed in any::<u64>(), alpha in 0.2f64..2.0) {
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end: 1.0 }).unwrap();
        let times = [0.2, 0.5, 0.8];
        let a = sample_exact(&fam.kernel, &times, 64, seed).unwrap();
        let b = sample_exact(&fam.kernel, &times, 64, seed).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        prop_assert!(a.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn reduction_round_trips(alpha in 0.3f64..3.0, (u, w) in sorted_pair()) {
        prop_assume!(w - u > 1e-3);
        let fam = alpha_wiener_spec(&AlphaWienerParams { alpha, t_end: 1.0 }).unwrap();
        let map = StandardizedProcessMap::new("p", fam.maps.unwrap(), u, w).unwrap();
        let red = reduce_argmax(&map).unwrap();
        prop_assert!(red.length() > 0.0);
        let t = 0.5 * (u + w);
        let back = red.pullback(red.ou_offset(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-9, "{} vs {}", back, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn first_passage_is_a_sub_distribution(x in -2.0f64..1.0, gap in 0.3f64..2.0) {
        match FirstPassageDensity::new(x, x + gap, FirstPassageConfig::default()) {
            Ok(_) => {}
            Err(e) => prop_assert!(!e.is_usage() && x + gap < 0.0, "{}", e),
        }
        let config = FirstPassageConfig { denominator_floor: 0.0, ..Default::default() };
        let fp = FirstPassageDensity::new(x, x + gap, config).unwrap();
        let mut prev = 0.0;
        for k in 1..=32 {
            let u = 0.25 * k as f64;
            let c = fp.cdf(u);
            prop_assert!(c >= prev - 1e-9 && c <= 1.0 + 1e-8, "cdf({}) = {}", u, c);
            prop_assert!(fp.density(u).unwrap() >= 0.0);
            prev = c;
        }
    }

    #[test]
    fn sup_location_density_is_symmetric_and_bounded(t_end in 0.5f64..3.0) {
        let solver = SupLocationSolver::new(t_end, SupLocationConfig::default()).unwrap();
        let mut prev_mass = 0.0;
        for k in 1..=9 {
            let s = t_end * k as f64 / 20.0;
            let (a, b) = (solver.density(s).unwrap(), solver.density(t_end - s).unwrap());
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-6);
            prop_assert!(a <= (1.0 / s).max(1.0 / (t_end - s)) + 1e-6);
        }
        for h in [0.3, 0.1, 0.03, 0.01] {
            let m = solver.mass(h * t_end, (1.0 - h) * t_end).unwrap();
            prop_assert!(m >= prev_mass && m <= 1.0 + 1e-8);
            prev_mass = m;
        }
    }
}

#[test]
fn stderr_scales_like_inverse_root_n() {
    let fam = alpha_wiener_spec(&AlphaWienerParams { alpha: 1.0, t_end: 1.0 }).unwrap();
    let small = sample_exact(&fam.kernel, &[0.5], 10_000, 5).unwrap();
    let large = sample_exact(&fam.kernel, &[0.5], 40_000, 5).unwrap();
    let (a, b) = (MCEstimate::from_samples(&small.column(0)), MCEstimate::from_samples(&large.column(0)));
    assert!(a.stderr > 0.0 && b.stderr > 0.0);
    assert!((a.stderr / b.stderr - 2.0).abs() < 0.1, "{} / {}", a.stderr, b.stderr);
}
