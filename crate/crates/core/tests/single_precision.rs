//! The numerical core in `f32`, checked against the `f64` build.

use hs_lab::flow::{hausdorff_to_circle, run_flow, verify_snapshot};
use hs_lab::geodesics::shoot;
use hs_lab::kernels::{gamma1, lap_gamma1};
use hs_lab::num::Complex;
use hs_lab::surface::curvature;

#[test]
fn kernels_agree_with_double_precision() {
    for (a, b) in [
        ((0.1, 0.2), (-0.4, 0.3)),
        ((0.5, -0.5), (0.0, 0.7)),
        ((0.0, 0.0), (0.6, 0.1)),
    ] {
        let z32 = hs_lab::f32::Point::new(a.0 as f32, a.1 as f32).unwrap();
        let w32 = hs_lab::f32::Point::new(b.0 as f32, b.1 as f32).unwrap();
        let z64 = hs_lab::Point::new(a.0, a.1).unwrap();
        let w64 = hs_lab::Point::new(b.0, b.1).unwrap();
        let g = (gamma1(z32, w32).unwrap() as f64, gamma1(z64, w64).unwrap());
        let l = (lap_gamma1(z32, w32).unwrap() as f64, lap_gamma1(z64, w64).unwrap());
        assert!((g.0 - g.1).abs() <= 1e-5 * g.1.abs().max(1.0), "{g:?}");
        assert!((l.0 - l.1).abs() <= 1e-5 * l.1.abs().max(1.0), "{l:?}");
    }
}

#[test]
fn flat_flow_in_single_precision() {
    let w = hs_lab::f32::Weight::flat(1.0);
    let snaps = run_flow(&w, &[0.1f32, 0.3], 65).unwrap();
    for s in &snaps {
        assert!(verify_snapshot(s).all_pass());
        let d = hausdorff_to_circle(s, s.t.sqrt());
        assert!(d <= 2.0 * s.h, "t = {}: {d}", s.t);
        assert!((s.area_omega - s.t).abs() <= 5.0 * s.h * s.t);
    }
}

#[test]
fn single_precision_geometry() {
    let w = hs_lab::f32::Weight::poincare_scaled(4.0);
    let k = curvature(&w, hs_lab::f32::Point::new(0.3, -0.2).unwrap()).unwrap();
    assert!((k + 1.0).abs() < 1e-4);
    let path = shoot(&w, hs_lab::f32::Point::origin(), Complex::new(1.0f32, 0.0), 0.3, 1e-2).unwrap();
    assert!(path.nodes.iter().all(|n| n.position.im.abs() < 1e-6));
}
