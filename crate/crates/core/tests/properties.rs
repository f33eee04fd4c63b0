use std::f64::consts::{PI, TAU};

use hs_lab::geodesics::{circle_residual, shoot};
use hs_lab::kernels::{compensator, gamma1, lap_gamma1, DiskPoint};
use hs_lab::korenblum::{big_f, divergence_boundary};
use hs_lab::num::Complex;
use hs_lab::surface::{curvature, eval_weight, geodesic_circle_radii, hyperbolicity_margin, mobius, mobius_pullback};
use hs_lab::{Point, Weight};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(7),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn interior(r_max: f64) -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..TAU).prop_map(move |(u, a)| {
        let r = r_max * u.sqrt();
        Point {
            re: r * a.cos(),
            im: r * a.sin(),
        }
    })
}

fn on_circle() -> impl Strategy<Value = Point> {
    (0.0..TAU).prop_map(|a| Point {
        re: a.cos(),
        im: a.sin(),
    })
}

fn families() -> impl Strategy<Value = Weight> {
    prop_oneof![
        (0.1..10.0f64).prop_map(Weight::flat),
        (0.1..10.0f64).prop_map(Weight::poincare_scaled),
        (0.0..2.0f64).prop_map(Weight::alpha_power),
        (0.001..0.1f64, 0.5..2.0f64).prop_map(|(c, a)| Weight::example7(c, a)),
        (0.5..4.0f64, -1.0..2.0f64).prop_map(|(c, b)| Weight::scaled_power(c, b)),
    ]
}

/// `¼∇²f` by the 5-point stencil.
fn fd_lap(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> f64 {
    (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * f(x, y)) / (4.0 * h * h)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn kernels_vanish_on_the_circle(z in on_circle(), w in interior(0.99)) {
        prop_assert_eq!(gamma1(z, w).unwrap(), 0.0);
        prop_assert_eq!(lap_gamma1(z, w).unwrap(), 0.0);
    }

    #[test]
    fn kernels_are_positive(z in interior(1.0 - 1e-6), w in interior(1.0 - 1e-6)) {
        if let Ok(v) = gamma1(z, w) {
            prop_assert!(v > 0.0, "gamma1 = {v}");
        }
        if let Ok(v) = compensator(z, w) {
            prop_assert!(v > 0.0, "compensator = {v}");
        }
    }

    #[test]
    fn gamma1_is_symmetric(z in interior(0.95), w in interior(0.95)) {
        prop_assume!((z.z() - w.z()).norm() > 1e-3);
        let (a, b) = (gamma1(z, w).unwrap(), gamma1(w, z).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-3), "{a} vs {b}");
    }

    #[test]
    fn lap_gamma1_matches_finite_differences(z in interior(0.9), w in interior(0.9)) {
        prop_assume!((z.z() - w.z()).norm() >= 0.1);
        let exact = lap_gamma1(z, w).unwrap();
        prop_assume!(exact.abs() >= 1e-2);
        let fd = fd_lap(|x, y| gamma1(Point { re: x, im: y }, w).unwrap(), z.re, z.im, 2.5e-4);
        prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs(), "fd {fd} exact {exact}");
    }

    /// `(1-|z|²)⁻¹ Δ Γ₁(·,ζ)` is harmonic away from `ζ`.
    #[test]
    fn gamma1_is_biharmonic_off_the_pole(z in interior(0.85), w in interior(0.85)) {
        prop_assume!((z.z() - w.z()).norm() >= 0.2);
        let f = |x: f64, y: f64| {
            let p = Point { re: x, im: y };
            lap_gamma1(p, w).unwrap() / (1.0 - p.norm_sqr())
        };
        let v = fd_lap(f, z.re, z.im, 1e-3);
        let scale = f(z.re, z.im).abs().max(1.0);
        prop_assert!(v.abs() <= 1e-3 * scale, "Δ = {v}");
    }

    #[test]
    fn weights_are_positive(w in families(), z in interior(0.99)) {
        prop_assert!(eval_weight(&w, z).unwrap() > 0.0);
    }

    #[test]
    fn poincare_curvature_is_constant(c in 0.1..10.0f64, z in interior(0.95)) {
        let k = curvature(&Weight::poincare_scaled(c), z).unwrap();
        prop_assert!((k + 4.0 / c).abs() <= 1e-9 * (4.0 / c), "κ = {k}");
    }

    #[test]
    fn pullback_preserves_curvature(w in families(), z0 in interior(0.6), z in interior(0.6)) {
        let pulled = mobius_pullback(&w, z0).unwrap();
        let image = mobius(z0.z(), z.z());
        let a = curvature(&pulled, z).unwrap();
        let b = curvature(&w, DiskPoint::from_complex(image).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn weakly_hyperbolic_weights_have_nonnegative_margin(z in interior(0.95)) {
        for (w, alpha) in [
            (Weight::scaled_power(2.0, 1.0), 0.5),
            (Weight::scaled_power(1.0, -1.0), 0.5),
            (Weight::flat(1.0), 0.0),
            (Weight::poincare_scaled(4.0), 1.0),
            (Weight::example7(0.01, 1.0), 1.0),
        ] {
            let m = hyperbolicity_margin(&w, alpha, z).unwrap();
            prop_assert!(m >= -1e-8, "{} α={alpha}: {m}", w.label());
        }
    }

    #[test]
    fn circle_roots_are_geodesic(c in 0.001..0.05f64, alpha in 0.5..2.0f64) {
        let w = Weight::example7(c, alpha);
        for r in geodesic_circle_radii(c, alpha) {
            let res = circle_residual(&w, r.sqrt()).unwrap();
            prop_assert!(res.abs() <= 1e-8, "r* = {r}: {res}");
        }
    }

    #[test]
    fn f_is_at_least_one(r in 0.001..0.999f64) {
        prop_assert!(big_f(r).unwrap() >= 1.0);
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn geodesic_speed_is_conserved(w in families(), start in interior(0.5), a in 0.0..TAU) {
        let dir = Complex::from_polar(1.0, a);
        let path = shoot(&w, start, dir, 0.5, 1e-3).unwrap();
        prop_assume!(path.nodes.iter().all(|n| n.position.norm() <= 0.8));
        prop_assert!(path.speed_drift() <= 1e-6, "drift {}", path.speed_drift());
    }

    #[test]
    fn geodesics_are_reversible(w in families(), start in interior(0.5), a in 0.0..TAU) {
        let step = 1e-3;
        let fwd = shoot(&w, start, Complex::from_polar(1.0, a), 0.5, step).unwrap();
        prop_assume!(!fwd.truncated);
        let end = fwd.nodes.last().unwrap();
        let back = shoot(&w, DiskPoint::from_complex(end.position).unwrap(), -end.velocity, 0.5, step).unwrap();
        let miss = (back.nodes.last().unwrap().position - start.z()).norm();
        prop_assert!(miss <= 10.0 * step * step, "miss {miss}");
    }
}

#[test]
fn geodesic_drift_is_fourth_order() {
    let start = Point::new(0.3, 0.1).unwrap();
    let dir = Complex::from_polar(1.0, 0.7);
    for w in [
        Weight::example7(0.01, 1.0),
        Weight::scaled_power(2.0, 1.0),
        Weight::alpha_power(1.0),
    ] {
        let coarse = shoot(&w, start, dir, 0.5, 1e-3).unwrap().speed_drift();
        let fine = shoot(&w, start, dir, 0.5, 5e-4).unwrap().speed_drift();
        assert!(coarse / fine >= 8.0, "{}: {coarse} / {fine}", w.label());
    }
}

#[test]
fn divergence_thresholds() {
    for alpha in [0.5, 1.0, 1.5] {
        let expect = PI / (PI + 2.0 * alpha * (4.0 - PI));
        let got = divergence_boundary(alpha, 1e-9).unwrap();
        assert!((got - expect).abs() <= 1e-3, "α = {alpha}: {got} vs {expect}");
    }
}
