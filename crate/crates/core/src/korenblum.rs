//! Korenblum-type estimates: the function `F(r)`, the constant `c_{p,α}`,
//! radial `p`-lengths of weights, the Poisson-kernel identity and the
//! balayage bound.

use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geodesics::radius_at_distance;
use crate::kernels::DiskPoint;
use crate::num::{lit, to_f64, Real};
use crate::obstacle::FlowSnapshot;
use crate::quadrature::{adaptive, AdaptiveOptions};
use crate::report::{CheckRow, VerificationReport};
use crate::surface::WeightSpec;

/// Width of the endpoint window `(1-δ, 1)` replaced by a power law.
pub const TAIL_WIDTH: f64 = 1e-4;

/// Exponent of the bound `F(r) ≤ (1-r)^{-4/π-ε}`.
pub fn f_exponent() -> f64 {
    4.0 / std::f64::consts::PI
}

/// A value that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaybeDivergent<T> {
    Finite(T),
    Divergent,
}

impl<T: Copy> MaybeDivergent<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Divergent => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Self::Divergent)
    }
}

fn tight() -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

fn check_r<T: Real>(r: T) -> Result<()> {
    if r > T::zero() && r < T::one() {
        Ok(())
    } else {
        Err(LabError::Domain(format!("r = {r} must lie in (0, 1)")))
    }
}

/// `log(1/(1-x))` accurate for small `x`.
fn log_inv_one_minus<T: Real>(x: T) -> T {
    -(-x).ln_1p()
}

/// `log F(r)` from the polar formula in `|z| = t`, valid for `r > ½`.
pub fn log_big_f_polar<T: Real>(r: T) -> Result<T> {
    check_r(r)?;
    if r <= lit(0.5) {
        return Err(LabError::Domain(format!("polar formula needs r > 1/2, got {r}")));
    }
    let a = lit::<T>(2.0) * r - T::one();
    let integrand = |t: T| {
        let num = ((T::one() - t * t) * (t * t - a * a)).max(T::zero()).sqrt();
        let arg = (num / (lit::<T>(2.0) * r * t)).min(T::one());
        t * log_inv_one_minus(t * t) * arg.asin()
    };
    let one_minus_r = T::one() - r;
    let v = adaptive(integrand, a, T::one(), tight()).value;
    Ok(lit::<T>(2.0) / (lit::<T>(std::f64::consts::PI) * one_minus_r * one_minus_r) * v)
}

/// `log F(r)` by nested adaptive quadrature in polar coordinates about the
/// center `r` of the disk `D(r, 1-r)`.
pub fn log_big_f_disk<T: Real>(r: T) -> Result<T> {
    check_r(r)?;
    let rad = T::one() - r;
    let inner_opts = AdaptiveOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 2000,
    };
    let outer = |phi: T| {
        let (c, s) = (phi.cos(), phi.sin());
        adaptive(
            |rho: T| {
                let (x, y) = (r + rho * c, rho * s);
                rho * log_inv_one_minus(x * x + y * y)
            },
            T::zero(),
            rad,
            inner_opts,
        )
        .value
    };
    let half_turn = adaptive(outer, T::zero(), lit(std::f64::consts::PI), tight()).value;
    Ok(lit::<T>(2.0) * half_turn / (lit::<T>(std::f64::consts::PI) * rad * rad))
}

/// `F(r) = exp{(1-r)⁻² ∫_{D(r,1-r)} log(1/(1-|z|²)) dΣ}`.
pub fn big_f<T: Real>(r: T) -> Result<T> {
    Ok(log_big_f(r)?.exp())
}

pub fn log_big_f<T: Real>(r: T) -> Result<T> {
    if r > lit(0.5) {
        log_big_f_polar(r)
    } else {
        log_big_f_disk(r)
    }
}

/// Endpoint exponent of `[(1-r²)F(r)]^q` at `r = 1` under the bound on `F`.
pub fn endpoint_exponent(p: f64, alpha: f64) -> f64 {
    let q = 2.0 * alpha * p / (1.0 - p);
    (1.0 - f_exponent()) * q
}

/// `π/(π + 2α(4-π))`, the upper end of the admissible range of `p`.
pub fn divergence_threshold(alpha: f64) -> f64 {
    let pi = std::f64::consts::PI;
    pi / (pi + 2.0 * alpha * (4.0 - pi))
}

/// `c_{p,α} = {∫₀¹ [(1-r²)F(r)]^{2αp/(1-p)} dr}^{1-p}`.
///
/// On `(1-δ, 1)`, `δ =` [`TAIL_WIDTH`], the integrand is replaced by the
/// power law `g(1-δ)((1-r)/δ)^e` with `e` from [`endpoint_exponent`] and
/// integrated exactly; the result is flagged divergent when `e ≤ -1`.
pub fn c_p_alpha(p: f64, alpha: f64) -> Result<MaybeDivergent<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LabError::Domain(format!("p = {p} must lie in (0, 1)")));
    }
    if !(alpha >= 0.0) {
        return Err(LabError::Domain(format!("alpha = {alpha} must be nonnegative")));
    }
    let q = 2.0 * alpha * p / (1.0 - p);
    if q == 0.0 {
        return Ok(MaybeDivergent::Finite(1.0));
    }
    let e = endpoint_exponent(p, alpha);
    if e <= -1.0 {
        return Ok(MaybeDivergent::Divergent);
    }
    let g = |r: f64| -> f64 {
        let lf = log_big_f(r).unwrap_or(f64::NAN);
        (q * ((1.0 - r * r).ln() + lf)).exp()
    };
    let cut = 1.0 - TAIL_WIDTH;
    let opts = AdaptiveOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let body = adaptive(g, 0.0, cut, opts).value;
    let tail = g(cut) * TAIL_WIDTH / (e + 1.0);
    let total = body + tail;
    if !total.is_finite() {
        return Err(LabError::Domain(
            "c_p_alpha quadrature produced a non-finite value".into(),
        ));
    }
    Ok(MaybeDivergent::Finite(total.powf(1.0 - p)))
}

/// Smallest `p` at which [`c_p_alpha`] reports divergence, located by
/// bisection on the flag to width `tol`.
pub fn divergence_boundary(alpha: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    if !c_p_alpha_flag(hi, alpha)? {
        return Ok(1.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if c_p_alpha_flag(mid, alpha)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn c_p_alpha_flag(p: f64, alpha: f64) -> Result<bool> {
    let q = 2.0 * alpha * p / (1.0 - p);
    if q == 0.0 {
        return Ok(false);
    }
    Ok(endpoint_exponent(p, alpha) <= -1.0)
}

/// Exponent `β` with `ω(r) ≈ C(1-r)^β` as `r → 1` along the positive axis.
pub fn boundary_exponent<T: Real>(w: &WeightSpec<T>) -> Result<f64> {
    if let Some(p) = w.radial_profile() {
        let lead = p
            .terms
            .iter()
            .filter(|(c, _)| *c != T::zero())
            .map(|&(_, b)| to_f64(b))
            .fold(f64::INFINITY, f64::min);
        return Ok(if lead.is_finite() { lead } else { 0.0 });
    }
    let at = |d: f64| -> Result<f64> {
        Ok(to_f64(w.value(DiskPoint {
            re: lit(1.0 - d),
            im: T::zero(),
        })?))
    };
    let (d1, d2) = (1e-3, 1e-4);
    Ok((at(d2)?.ln() - at(d1)?.ln()) / (d2.ln() - d1.ln()))
}

/// `∫₀¹ ω(r)^p dr` along the positive radius.
pub fn radial_p_length<T: Real>(w: &WeightSpec<T>, p: f64) -> Result<MaybeDivergent<f64>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(LabError::Domain(format!("p = {p} must lie in (0, 1]")));
    }
    let beta = boundary_exponent(w)?;
    if p * beta <= -1.0 + 1e-9 {
        return Ok(MaybeDivergent::Divergent);
    }
    let mut failure = None;
    let v = adaptive(
        |r: f64| match w.value(DiskPoint {
            re: lit(r),
            im: T::zero(),
        }) {
            Ok(v) => to_f64(v).powf(p),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        0.0,
        1.0,
        AdaptiveOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_intervals: 4000,
        },
    )
    .value;
    match failure {
        Some(e) => Err(e),
        None => Ok(MaybeDivergent::Finite(v)),
    }
}

/// Left side of the Poisson-kernel identity at `z`: the support of
/// `r ↦ χ_{D(r,1-r)}(z)` is located by bisection on the membership test
/// and `(1-r)⁻²` integrated over it.
pub fn pk_lhs(z: DiskPoint<f64>) -> Result<f64> {
    if !z.is_interior() {
        return Err(LabError::Domain("identity needs an interior point".into()));
    }
    let inside = |r: f64| {
        let (dx, dy) = (z.re - r, z.im);
        dx * dx + dy * dy < (1.0 - r) * (1.0 - r)
    };
    if !inside(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r0 = 0.5 * (lo + hi);
    Ok(adaptive(|r: f64| 1.0 / ((1.0 - r) * (1.0 - r)), 0.0, r0, tight()).value)
}

/// Right side `(1-|z|²)/|1-z|²`.
pub fn pk_rhs(z: DiskPoint<f64>) -> f64 {
    (1.0 - z.norm_sqr()) / ((1.0 - z.re).powi(2) + z.im * z.im)
}

/// `∫_𝔻 ν(z)(1-|z|²)/|1-z|² dΣ(z)`.
pub fn balayage_integral<T: Real>(nu: &WeightSpec<T>) -> Result<f64> {
    let mut failure = None;
    let inner = AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2000,
    };
    let total = adaptive(
        |rho: f64| {
            let ang = adaptive(
                |th: f64| {
                    let z = DiskPoint {
                        re: lit(rho * th.cos()),
                        im: lit(rho * th.sin()),
                    };
                    let v = match nu.value(z) {
                        Ok(v) => to_f64(v),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    };
                    let pk = (1.0 - rho * rho) / (1.0 - 2.0 * rho * th.cos() + rho * rho);
                    v * pk
                },
                -std::f64::consts::PI,
                std::f64::consts::PI,
                inner,
            )
            .value;
            ang * rho / std::f64::consts::PI
        },
        0.0,
        1.0,
        AdaptiveOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_intervals: 2000,
        },
    )
    .value;
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// One row of an `F` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FSample {
    pub r: f64,
    pub f: f64,
    pub log_ratio: f64,
}

/// `F` and `log F(r) / log(1/(1-r))` on the given radii.
pub fn f_table(rs: &[f64]) -> Result<Vec<FSample>> {
    use rayon::prelude::*;
    rs.par_iter()
        .map(|&r| {
            let lf = log_big_f(r)?;
            Ok(FSample {
                r,
                f: lf.exp(),
                log_ratio: lf / (1.0 / (1.0 - r)).ln(),
            })
        })
        .collect()
}

/// Writes `r, F, log-ratio` rows.
pub fn write_f_csv<W: Write>(rows: &[FSample], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let err = |e: csv::Error| LabError::Io(std::io::Error::other(e));
    wr.write_record(["r", "F", "log-ratio"]).map_err(err)?;
    for s in rows {
        wr.write_record([
            format!("{:.12e}", s.r),
            format!("{:.12e}", s.f),
            format!("{:.12e}", s.log_ratio),
        ])
        .map_err(err)?;
    }
    wr.flush()?;
    Ok(())
}

/// One entry of a `c_{p,α}` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpaEntry {
    pub p: f64,
    pub alpha: f64,
    pub c: MaybeDivergent<f64>,
}

pub fn cpa_table(ps: &[f64], alphas: &[f64]) -> Result<Vec<CpaEntry>> {
    let mut out = Vec::new();
    for &alpha in alphas {
        for &p in ps {
            out.push(CpaEntry {
                p,
                alpha,
                c: c_p_alpha(p, alpha)?,
            });
        }
    }
    Ok(out)
}

/// Upper end `π/(8-2π)` of the admissible `α` for the containment bound.
pub fn containment_alpha_limit() -> f64 {
    std::f64::consts::PI / (8.0 - 2.0 * std::f64::consts::PI)
}

/// Checks `D(t) ⊂ B(0, c_α√t)` for a radial weight: every boundary vertex
/// must satisfy `|z| ≤ ρ* + 2h`, where `ρ*` is the Euclidean radius at
/// metric distance `c_{½,α}√t` from the origin.
pub fn containment_check(s: &FlowSnapshot<f64>, w: &WeightSpec<f64>, alpha: f64) -> Result<VerificationReport> {
    let name = format!("containment alpha={alpha}");
    let h = s.h;
    let tol = 2.0 * h;
    let rmax = 1.0 - s.distance_to_circle();
    let mut report = VerificationReport::new();
    if !w.is_radial() {
        report.push(CheckRow::not_applicable(name, f64::NAN, tol).on_grid(s.n, h));
        return Ok(report);
    }
    let mut margin = f64::INFINITY;
    for i in 0..20 {
        let r = 0.05 * i as f64;
        margin = margin.min(w.hyperbolicity_margin(alpha, DiskPoint { re: r, im: 0.0 })?);
    }
    let admissible = alpha >= 0.0 && alpha < containment_alpha_limit() && margin >= -1e-8;
    let radius = match c_p_alpha(0.5, alpha)? {
        MaybeDivergent::Finite(c) => radius_at_distance(w, c * s.t.sqrt())?,
        MaybeDivergent::Divergent => 1.0,
    };
    let row = if admissible {
        CheckRow::within(name, rmax - radius, tol)
    } else {
        CheckRow::not_applicable(name, rmax - radius, tol)
    };
    report.push(row.on_grid(s.n, h));
    Ok(report)
}

/// Seeded Korenblum suite: `F(0⁺) = e`, agreement of the two quadrature
/// routes on `(½, 0.99)`, the tail log-ratio on `[0.99, 0.999]`, the
/// `c_{p,1}` divergence threshold and the Poisson-kernel identity.
pub fn korenblum_suite(seed: u64) -> Result<VerificationReport> {
    use rand::{Rng, SeedableRng};
    let mut rep = VerificationReport::new();
    let f0: f64 = big_f(1e-7)?;
    rep.push(CheckRow::within("F(0+) - e", (f0 - std::f64::consts::E).abs(), 1e-4));

    let mut worst = 0.0f64;
    for k in 1..40 {
        let r = 0.5 + 0.49 * k as f64 / 40.0;
        let (a, b) = (log_big_f_polar(r)?, log_big_f_disk(r)?);
        worst = worst.max(((a - b).exp() - 1.0).abs());
    }
    rep.push(CheckRow::within("F polar vs disk (rel)", worst, 1e-6));

    let rs: Vec<f64> = (0..=45).map(|k| 0.99 + 0.009 * k as f64 / 45.0).collect();
    let tail = f_table(&rs)?
        .iter()
        .map(|s| s.log_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    rep.push(CheckRow::within("tail log-ratio", tail, f_exponent() + 0.05));

    let pi = std::f64::consts::PI;
    let threshold = divergence_boundary(1.0, 1e-9)?;
    rep.push(CheckRow::within(
        "c_p,1 divergence threshold",
        (threshold - pi / (pi + 2.0 * (4.0 - pi))).abs(),
        1e-3,
    ));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r = 0.95 * rng.gen::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.gen::<f64>();
        let z = DiskPoint::from_polar(r, th)?;
        let rhs = pk_rhs(z);
        worst = worst.max((pk_lhs(z)? - rhs).abs() / rhs.max(1.0));
    }
    rep.push(CheckRow::within("Poisson kernel identity", worst, 1e-6));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_near_zero_is_e() {
        let f: f64 = big_f(1e-7).unwrap();
        assert!((f - std::f64::consts::E).abs() < 1e-5, "{f}");
    }

    #[test]
    fn polar_and_disk_routes_agree() {
        for &r in &[0.6f64, 0.8, 0.95] {
            let a = log_big_f_polar(r).unwrap().exp();
            let b = log_big_f_disk(r).unwrap().exp();
            assert!((a - b).abs() < 1e-8, "r = {r}: {a} vs {b}");
        }
    }

    #[test]
    fn f_at_least_one() {
        for &r in &[0.1f64, 0.3, 0.5, 0.7, 0.9, 0.999] {
            assert!(big_f(r).unwrap() >= 1.0);
        }
    }

    #[test]
    fn f_rejects_bad_r() {
        assert!(big_f(0.0f64).is_err());
        assert!(big_f(1.0f64).is_err());
        assert!(log_big_f_polar(0.4f64).is_err());
    }

    #[test]
    fn cpa_examples() {
        assert_eq!(c_p_alpha(0.3, 0.0).unwrap(), MaybeDivergent::Finite(1.0));
        let c = c_p_alpha(1e-9, 1.0).unwrap().finite().unwrap();
        assert!((c - 1.0).abs() < 1e-6);
        let c = c_p_alpha(0.5, 1.0).unwrap();
        assert!(c.finite().is_some_and(|v| v.is_finite() && v > 0.0));
        assert!(c_p_alpha(0.9, 1.0).unwrap().is_divergent());
        assert!((endpoint_exponent(0.5, 1.0) - 2.0 * (1.0 - 4.0 / std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn radial_lengths() {
        let v = radial_p_length(&WeightSpec::flat(1.0), 0.3).unwrap().finite().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = radial_p_length(&WeightSpec::scaled_power(2.0, 1.0), 0.5)
            .unwrap()
            .finite()
            .unwrap();
        assert!((v - 2f64.sqrt() * std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert!(radial_p_length(&WeightSpec::poincare_scaled(4.0), 0.5)
            .unwrap()
            .is_divergent());
    }

    #[test]
    fn pk_identity_sample() {
        let z = DiskPoint::new(0.3, -0.5).unwrap();
        assert!((pk_lhs(z).unwrap() - pk_rhs(z)).abs() < 1e-9);
    }

    #[test]
    fn balayage_of_reproducing_weights() {
        let a = balayage_integral(&WeightSpec::flat(1.0)).unwrap();
        assert!((a - 1.0).abs() < 1e-6, "{a}");
        let b = balayage_integral(&WeightSpec::scaled_power(2.0, 1.0)).unwrap();
        assert!((b - 1.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn suite_passes() {
        let rep = korenblum_suite(3).unwrap();
        assert!(rep.all_pass(), "{}", rep.render_table());
    }

    #[test]
    fn f_csv_columns() {
        let rows = f_table(&[0.9]).unwrap();
        let mut buf = Vec::new();
        write_f_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("r,F,log-ratio\n"));
    }
}
