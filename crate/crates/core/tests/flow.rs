use hs_lab::flow::{
    hausdorff_to_circle, hypotheses, monotonicity_check, reproducing_inequality, run_flow, verify_snapshot,
    TestFunction,
};
use hs_lab::grid::{projected_majorant, SolverOptions};
use hs_lab::korenblum::balayage_integral;
use hs_lab::obstacle::build_vt;
use hs_lab::{Snapshot, Weight};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn rms_radial_error(s: &Snapshot, rho: f64) -> f64 {
    let sum: f64 = s
        .boundary
        .iter()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - rho).powi(2))
        .sum();
    (sum / s.boundary.len() as f64).sqrt()
}

#[test]
fn flat_boundaries_are_circles() {
    for (c, t) in [(1.0, 0.25), (2.0, 0.5), (0.5, 0.2)] {
        let s = &run_flow(&Weight::flat(c), &[t], 129).unwrap()[0];
        let d = hausdorff_to_circle(s, (t / c).sqrt());
        assert!(d <= 2.0 * s.h, "c = {c}, t = {t}: {d} > 2h");
    }
}

#[test]
fn flat_boundary_error_is_first_order() {
    let ts = [0.04, 0.16, 0.36, 0.64];
    let err = |n| {
        run_flow(&Weight::flat(1.0), &ts, n)
            .unwrap()
            .iter()
            .map(|s| rms_radial_error(s, s.t.sqrt()))
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(257), err(513));
    assert!(coarse / fine >= 1.8, "{coarse} / {fine}");
}

#[test]
fn majorant_satisfies_complementarity() {
    for w in [
        Weight::flat(1.0),
        Weight::scaled_power(2.0, 1.0),
        Weight::poincare_scaled(4.0),
    ] {
        for t in [0.05, 0.3] {
            let opts = SolverOptions::default();
            let (vt, _) = build_vt(&w, t, 65, &opts).unwrap();
            let (s, stats) = projected_majorant(&vt, None, &opts).unwrap();
            let scale = vt
                .values
                .iter()
                .filter(|v| v.is_finite())
                .fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(
                stats.residual <= 1e-8 * scale,
                "{} t={t}: {}",
                w.label(),
                stats.residual
            );
            for (a, b) in s.values.iter().zip(&vt.values) {
                assert!(a >= b);
            }
        }
    }
}

#[test]
fn domains_contain_the_origin_ring() {
    let n = 129;
    for s in run_flow(&Weight::scaled_power(2.0, 1.0), &[0.02, 0.2], n).unwrap() {
        let c = n / 2;
        for (i, j) in [(c, c), (c + 1, c), (c - 1, c), (c, c + 1), (c, c - 1)] {
            assert!(s.membership[j * n + i], "t = {}: node ({i}, {j})", s.t);
        }
        assert!(verify_snapshot(&s).all_pass());
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 8,
        rng_seed: RngSeed::Fixed(7),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn domains_grow_with_t(a in 0.02..0.4f64, gap in 0.01..0.4f64, pick in 0usize..3) {
        let w = [Weight::flat(1.0), Weight::scaled_power(2.0, 1.0), Weight::scaled_power(1.0, -1.0)][pick].clone();
        let snaps = run_flow(&w, &[a, a + gap], 65).unwrap();
        prop_assert!(monotonicity_check(&snaps).all_pass());
    }
}

#[test]
fn reproducing_inequality_has_nonnegative_slack() {
    for nu in [
        Weight::flat(1.0),
        Weight::scaled_power(2.0, 1.0),
        Weight::example7(0.01, 1.0),
        Weight::alpha_power(0.25),
    ] {
        if !hypotheses(&nu).reproducing() {
            continue;
        }
        for u in TestFunction::ALL {
            let rep = reproducing_inequality(&nu, u, 256).unwrap();
            assert!(rep.all_pass(), "{} {}: {:?}", nu.label(), u.name(), rep.rows);
        }
    }
}

#[test]
fn balayage_bound_for_reproducing_weights() {
    for nu in [Weight::flat(1.0), Weight::scaled_power(2.0, 1.0)] {
        let v = balayage_integral(&nu).unwrap();
        assert!(v <= 1.0 + 1e-6, "{}: {v}", nu.label());
    }
}
