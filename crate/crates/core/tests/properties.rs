use memlang_core::analytic::{q2_series, ResponseFunction};
use memlang_core::ensemble::{run_ensemble_with, EnsembleConfig, IcPolicy};
use memlang_core::expoly::ExpPoly;
use memlang_core::integrators::{IntegratorConfig, IntegratorKind, Potential};
use memlang_core::kernels::{j_coeff_kind, memory_kernel, unit_kernel};
use memlang_core::stats::{EnsembleStats, Moments};
use memlang_core::{CutoffKind, Execution, KernelSpec};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = CutoffKind> {
    prop::sample::select(CutoffKind::ALL.to_vec())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn kernels_are_even(kind in kind(), x in 0.0f64..50.0) {
        prop_assert_eq!(unit_kernel(kind, x), unit_kernel(kind, -x));
    }

    #[test]
    fn kernel_scales_with_omega(kind in kind(), omega in 0.1f64..100.0, t in 0.0f64..5.0) {
        let spec = KernelSpec::new(kind, 1.0, omega, 1.0, 1.0).unwrap();
        prop_assert!(close(memory_kernel(&spec, t), omega * unit_kernel(kind, omega * t), 1e-14));
    }

    #[test]
    fn lorentzian_j_bounded_by_limits(n in 0usize..=4, y in 0.0f64..60.0) {
        // |J_n(y)| grows monotonically towards |J_n(∞)| = 1/2
        let j = j_coeff_kind(CutoffKind::Lorentzian, n, y).unwrap();
        prop_assert!(j.abs() <= 0.5 + 1e-15);
        let j2 = j_coeff_kind(CutoffKind::Lorentzian, n, y + 0.5).unwrap();
        prop_assert!(j2.abs() >= j.abs() - 1e-15);
    }

    #[test]
    fn moments_merge_is_associative(
        xs in prop::collection::vec(-1e3f64..1e3, 3..200),
        cut in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let (a, b) = {
            let i = (cut.0 * xs.len() as f64) as usize;
            let j = (cut.1 * xs.len() as f64) as usize;
            (i.min(j), i.max(j))
        };
        let part = |r: &[f64]| r.iter().copied().collect::<Moments>();
        let (p, q, r) = (part(&xs[..a]), part(&xs[a..b]), part(&xs[b..]));
        let mut left = p;
        left.merge(&q);
        left.merge(&r);
        let mut qr = q;
        qr.merge(&r);
        let mut right = p;
        right.merge(&qr);
        let whole = part(&xs);
        prop_assert_eq!(left.n, whole.n);
        prop_assert!(close(left.mean, whole.mean, 1e-12));
        prop_assert!(close(right.mean, whole.mean, 1e-12));
        prop_assert!(close(left.variance(), whole.variance(), 1e-9));
        prop_assert!(close(right.variance(), whole.variance(), 1e-9));
    }

    #[test]
    fn ensemble_stats_merge_equals_concatenation(
        data in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4..120),
        cut in 0.0f64..1.0,
    ) {
        let split = (cut * data.len() as f64) as usize;
        let fill = |range: std::ops::Range<usize>| {
            let mut s = EnsembleStats::new(vec![0.0], 4);
            for i in range {
                s.record(i, 0, data[i].0, data[i].1);
            }
            s
        };
        let mut merged = fill(0..split);
        merged.merge(&fill(split..data.len()));
        let whole = fill(0..data.len());
        let (m, w) = (merged.row(0), whole.row(0));
        prop_assert_eq!(m.count, w.count);
        prop_assert!(close(m.q_var, w.q_var, 1e-10));
        prop_assert!(close(m.v_mean, w.v_mean, 1e-10));
        prop_assert!(m.q_var >= 0.0 && m.v_var >= 0.0);
    }

    #[test]
    fn series_vanishes_at_origin(delta in 0.0f64..1.0) {
        prop_assert_eq!(q2_series(delta, 0.0), 0.0);
    }

    #[test]
    fn exact_response_starts_at_rest(delta in 0.0f64..2.0) {
        let g = ResponseFunction::exact_lorentzian(delta).unwrap();
        prop_assert!(g.eval(0.0).abs() < 1e-12);
        // g → 1/(2J₀(∞)) = 1 at late times
        prop_assert!(close(g.eval(60.0 + 60.0 * delta), 1.0, 1e-9));
    }

    #[test]
    fn expoly_derivative_undoes_integral(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..4),
        rate in 0u32..3,
        tau in 0.0f64..4.0,
    ) {
        let mut p = ExpPoly::zero();
        for (k, c) in coeffs.iter().enumerate() {
            p = &p + &ExpPoly::monomial(*c, k, rate);
        }
        let back = p.integral().derivative();
        prop_assert!(close(back.eval(tau), p.eval(tau), 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn parallel_matches_sequential(seed in any::<u64>(), n_traj in 2usize..150, gaussian in any::<bool>()) {
        let spec = KernelSpec::new(CutoffKind::Lorentzian, 1.0, 5.0, 1.0, 1.0).unwrap();
        let ic = if gaussian {
            IcPolicy::GaussianV0 { q0: 0.1, variance: 1.0 }
        } else {
            IcPolicy::Fixed { q0: 0.0, v0: 0.5 }
        };
        let config = EnsembleConfig::new(
            IntegratorConfig::new(spec, Potential::harmonic(1.0), IntegratorKind::OuEmbedding, 0.01, 100),
            n_traj,
            seed,
        )
        .with_ic(ic)
        .with_stride(10);
        let a = run_ensemble_with(&config, Execution::Sequential).unwrap();
        let b = run_ensemble_with(&config, Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}
