//! Geodesics of conformal metrics `ω|dz|²`: shooting with a fixed-step
//! Runge-Kutta integrator, residuals of the geodesic equation and radial
//! metric distances.

use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::kernels::DiskPoint;
use crate::num::{lit, to_f64, Complex, Real};
use crate::quadrature::{adaptive, AdaptiveOptions};
use crate::report::{CheckRow, VerificationReport};
use crate::surface::{geodesic_circle_radii, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicNode<T> {
    pub t: T,
    pub position: Complex<T>,
    pub velocity: Complex<T>,
    /// `ω(γ)|γ'|²`.
    pub metric_speed: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath<T> {
    pub nodes: Vec<GeodesicNode<T>>,
    pub step: T,
    pub weight: String,
    /// Set when integration stopped at `|γ| > 1 - 10·step`.
    pub truncated: bool,
}

impl<T: Real> GeodesicPath<T> {
    /// `max |s(t) - s(0)| / s(0)` divided by the parameter length.
    pub fn speed_drift(&self) -> T {
        let s0 = self.nodes[0].metric_speed;
        let len = self.nodes.last().map_or(T::zero(), |n| n.t);
        let worst = self
            .nodes
            .iter()
            .map(|n| ((n.metric_speed - s0) / s0).abs())
            .fold(T::zero(), T::max);
        if len > T::zero() {
            worst / len.max(T::one())
        } else {
            worst
        }
    }

    /// Writes `t, x, y, speed` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        let err = |e: csv::Error| LabError::Io(std::io::Error::other(e));
        wr.write_record(["t", "x", "y", "speed"]).map_err(err)?;
        for n in &self.nodes {
            wr.write_record([
                format!("{:.12e}", to_f64(n.t)),
                format!("{:.12e}", to_f64(n.position.re)),
                format!("{:.12e}", to_f64(n.position.im)),
                format!("{:.12e}", to_f64(n.metric_speed)),
            ])
            .map_err(err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn point<T: Real>(z: Complex<T>) -> DiskPoint<T> {
    DiskPoint { re: z.re, im: z.im }
}

/// `γ'' = -(ω_z/ω)(γ) (γ')²`.
fn accel<T: Real>(w: &WeightSpec<T>, z: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
    let p = point(z);
    let c = w.dz(p)? / w.value(p)?;
    Ok(-(c * v * v))
}

/// Integrates the geodesic equation from `start` with initial velocity
/// `dir` over parameter length `length`.
pub fn shoot<T: Real>(
    w: &WeightSpec<T>,
    start: DiskPoint<T>,
    dir: Complex<T>,
    length: T,
    step: T,
) -> Result<GeodesicPath<T>> {
    if !start.is_interior() {
        return Err(LabError::Domain("geodesic start must be interior".into()));
    }
    if !(step > T::zero()) || !(length >= T::zero()) {
        return Err(LabError::Domain("step and length must be positive".into()));
    }
    let steps = (length / step).round().to_usize().unwrap_or(0).max(1);
    let h = length / lit(steps as f64);
    let limit = T::one() - lit::<T>(10.0) * h;
    let node = |t: T, z: Complex<T>, v: Complex<T>| -> Result<GeodesicNode<T>> {
        Ok(GeodesicNode {
            t,
            position: z,
            velocity: v,
            metric_speed: w.value(point(z))? * v.norm_sqr(),
        })
    };
    let mut z = start.z();
    let mut v = dir;
    let mut nodes = vec![node(T::zero(), z, v)?];
    let half = lit::<T>(0.5);
    let sixth = lit::<T>(1.0 / 6.0);
    let mut truncated = false;
    for k in 1..=steps {
        let a1 = accel(w, z, v)?;
        let (z2, v2) = (z + v * (h * half), v + a1 * (h * half));
        let a2 = accel(w, z2, v2)?;
        let (z3, v3) = (z + v2 * (h * half), v + a2 * (h * half));
        let a3 = accel(w, z3, v3)?;
        let (z4, v4) = (z + v3 * h, v + a3 * h);
        let a4 = accel(w, z4, v4)?;
        let zn = z + (v + v2 * lit::<T>(2.0) + v3 * lit::<T>(2.0) + v4) * (h * sixth);
        let vn = v + (a1 + a2 * lit::<T>(2.0) + a3 * lit::<T>(2.0) + a4) * (h * sixth);
        if zn.norm() > limit {
            truncated = true;
            break;
        }
        z = zn;
        v = vn;
        nodes.push(node(h * lit(k as f64), z, v)?);
    }
    Ok(GeodesicPath {
        nodes,
        step: h,
        weight: w.label(),
        truncated,
    })
}

/// Max over interior nodes of `|γ'' + (ω_z/ω)(γ')²|` with a centered
/// second difference for `γ''`.
pub fn geodesic_residual<T: Real>(w: &WeightSpec<T>, path: &GeodesicPath<T>) -> Result<T> {
    if path.nodes.len() < 3 {
        return Err(LabError::Domain("geodesic residual needs at least 3 nodes".into()));
    }
    let h2 = path.step * path.step;
    let mut worst = T::zero();
    for win in path.nodes.windows(3) {
        let dd = (win[2].position - win[1].position * lit::<T>(2.0) + win[0].position) / h2;
        let r = dd - accel(w, win[1].position, win[1].velocity)?;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Residual of the circle `ρ e^{it}` in the geodesic equation.
pub fn circle_residual<T: Real>(w: &WeightSpec<T>, rho: T) -> Result<T> {
    let p = w
        .radial_profile()
        .ok_or_else(|| LabError::NotApplicable(format!("{} is not radial", w.label())))?;
    Ok(p.circle_residual(rho))
}

/// Circle `ρ e^{it}` sampled as a path, for residual checks with the
/// analytic parametrization.
pub fn circle_path<T: Real>(w: &WeightSpec<T>, rho: T, step: T) -> Result<GeodesicPath<T>> {
    let n = (lit::<T>(std::f64::consts::TAU) / step)
        .round()
        .to_usize()
        .unwrap_or(3)
        .max(3);
    let h = lit::<T>(std::f64::consts::TAU) / lit(n as f64);
    let mut nodes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = h * lit(k as f64);
        let e = Complex::new(t.cos(), t.sin());
        let z = e * rho;
        let v = Complex::new(-t.sin(), t.cos()) * rho;
        nodes.push(GeodesicNode {
            t,
            position: z,
            velocity: v,
            metric_speed: w.value(point(z))? * v.norm_sqr(),
        });
    }
    Ok(GeodesicPath {
        nodes,
        step: h,
        weight: w.label(),
        truncated: false,
    })
}

/// Metric length `∫₀^r √ω₀(s²) ds` of the radial segment `[0, r]`.
pub fn radial_distance<T: Real>(w: &WeightSpec<T>, r: T) -> Result<T> {
    let p = w
        .radial_profile()
        .ok_or_else(|| LabError::NotApplicable(format!("{} is not radial", w.label())))?;
    if !(r >= T::zero() && r <= T::one()) {
        return Err(LabError::Domain(format!("radius {r} outside [0, 1]")));
    }
    if r == T::one() && p.singular_at_boundary() {
        return Ok(T::infinity());
    }
    let opts = AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    Ok(adaptive(|s: T| p.value(s * s).sqrt(), T::zero(), r, opts).value)
}

/// Euclidean radius `ρ` with `radial_distance(w, ρ) = d`, or 1 when the
/// whole radius is shorter than `d`.
pub fn radius_at_distance<T: Real>(w: &WeightSpec<T>, d: T) -> Result<T> {
    let total = radial_distance(w, T::one() - lit(1e-12))?;
    if total <= d {
        return Ok(T::one());
    }
    let (mut lo, mut hi) = (T::zero(), T::one() - lit(1e-12));
    for _ in 0..200 {
        if hi - lo <= lit::<T>(1e-13) {
            break;
        }
        let mid = (lo + hi) / lit(2.0);
        if radial_distance(w, mid)? < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / lit(2.0))
}

/// Roots and circle checks for the weight `c/(1-|z|²)² + (1-|z|²)^{2α}`.
#[derive(Debug, Clone, Serialize)]
pub struct Example7Demo {
    pub c: f64,
    pub alpha: f64,
    /// Roots `r*` in `|z|²`.
    pub roots: Vec<f64>,
    pub root_residuals: Vec<f64>,
    /// Residuals at `0.9·√r*`.
    pub off_residuals: Vec<f64>,
    /// Largest `||γ| - √r₂|` along one tangential loop from `√r₂`.
    pub shot_deviation: f64,
    /// Minimum hyperbolicity margin over the sample grid.
    pub margin_min: f64,
    pub checks: VerificationReport,
}

/// Sample radii and angles of the hyperbolicity scan.
const MARGIN_RADII: usize = 96;
const MARGIN_ANGLES: usize = 8;

/// Integration step for the tangential loop; the outer circle is unstable
/// and amplifies radial errors by about 10¹¹ over one loop.
pub const EXAMPLE7_STEP: f64 = 2.5e-4;

pub fn example7_demo(c: f64, alpha: f64, step: f64) -> Result<Example7Demo> {
    let w = WeightSpec::example7(c, alpha);
    w.validate()?;
    let roots = geodesic_circle_radii(c, alpha);
    let root_residuals = roots
        .iter()
        .map(|&r| circle_residual(&w, r.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let off_residuals = roots
        .iter()
        .map(|&r| circle_residual(&w, 0.9 * r.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = VerificationReport::new();
    checks.push(CheckRow::within("root count", (roots.len() as f64 - 2.0).abs(), 0.0));
    let mut shot_deviation = f64::NAN;
    if let Some(&r2) = roots.last() {
        let rho = r2.sqrt();
        let path = shoot(
            &w,
            DiskPoint::new(rho, 0.0)?,
            Complex::new(0.0, 1.0),
            std::f64::consts::TAU * rho,
            step,
        )?;
        shot_deviation = path
            .nodes
            .iter()
            .map(|n| (n.position.norm() - rho).abs())
            .fold(0.0, f64::max);
        if path.truncated {
            shot_deviation = f64::INFINITY;
        }
    }
    for (k, (&on, &off)) in root_residuals.iter().zip(&off_residuals).enumerate() {
        checks.push(CheckRow::within(format!("root {k} residual"), on, 1e-8));
        checks.push(CheckRow::exceeds(format!("root {k} off-circle residual"), off, 1e-2));
    }
    checks.push(CheckRow::within("tangential shot deviation", shot_deviation, 1e-3));
    let mut margin_min = f64::INFINITY;
    for i in 0..MARGIN_RADII {
        let r = 0.95 * i as f64 / (MARGIN_RADII - 1) as f64;
        for j in 0..MARGIN_ANGLES {
            let a = std::f64::consts::TAU * j as f64 / MARGIN_ANGLES as f64;
            margin_min = margin_min.min(w.hyperbolicity_margin(alpha, DiskPoint::from_polar(r, a)?)?);
        }
    }
    checks.push(CheckRow::within("hyperbolicity margin deficit", -margin_min, 0.0));
    Ok(Example7Demo {
        c,
        alpha,
        roots,
        root_residuals,
        off_residuals,
        shot_deviation,
        margin_min,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type W = WeightSpec<f64>;

    fn p(re: f64, im: f64) -> DiskPoint<f64> {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn flat_geodesic_is_straight() {
        let w = W::flat(1.0);
        let dir = Complex::new(0.6, 0.8);
        let path = shoot(&w, p(-0.2, -0.3), dir, 0.5, 1e-3).unwrap();
        let last = path.nodes.last().unwrap();
        assert!((last.position - (Complex::new(-0.2, -0.3) + dir * 0.5)).norm() < 1e-13);
        assert!(geodesic_residual(&w, &path).unwrap() < 1e-8);
    }

    #[test]
    fn poincare_radial_path_stays_real() {
        let w = W::poincare_scaled(4.0);
        let path = shoot(&w, p(0.0, 0.0), Complex::new(1.0, 0.0), 1.0, 1e-3).unwrap();
        assert!(path.nodes.iter().all(|n| n.position.im == 0.0));
        let last = path.nodes.last().unwrap();
        let exact = 1f64.tanh();
        assert!((last.position.re - exact).abs() < 1e-10);
    }

    #[test]
    fn example7_circle_residuals() {
        let w = W::example7(0.01, 1.0);
        let roots: Vec<f64> = geodesic_circle_radii(0.01, 1.0);
        for &r in &roots {
            assert!(circle_residual(&w, r.sqrt()).unwrap() <= 1e-8);
            assert!(circle_residual(&w, 0.9 * r.sqrt()).unwrap() > 1e-2);
        }
        let path = circle_path(&w, roots[1].sqrt(), 1e-3).unwrap();
        assert!(geodesic_residual(&w, &path).unwrap() < 1e-5);
    }

    #[test]
    fn example7_demo_report() {
        let demo = example7_demo(0.01, 1.0, EXAMPLE7_STEP).unwrap();
        assert_eq!(demo.roots.len(), 2);
        assert!(demo.roots[0] > 0.35 && demo.roots[0] < 0.45);
        assert!(demo.roots[1] > 0.5 && demo.roots[1] < 0.7);
        assert!(demo.shot_deviation < 1e-3);
        assert!(demo.checks.all_pass(), "{}", demo.checks.render_table());
    }

    #[test]
    fn radial_distance_examples() {
        assert!((radial_distance(&W::flat(1.0), 0.37).unwrap() - 0.37).abs() < 1e-14);
        let r = 0.8;
        let d = radial_distance(&W::poincare_scaled(4.0), r).unwrap();
        assert!((d - ((1.0 + r) / (1.0 - r)).ln()).abs() < 1e-11);
        let d = radial_distance(&W::scaled_power(2.0, 1.0), 1.0).unwrap();
        assert!((d - 2f64.sqrt() * std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert!(matches!(
            radial_distance(
                &crate::surface::mobius_pullback(&W::example7(1.0, 1.0), p(0.3, 0.0)).unwrap(),
                0.5
            ),
            Err(LabError::NotApplicable(_))
        ));
        let rho = radius_at_distance(&W::flat(4.0), 0.5).unwrap();
        assert!((rho - 0.25).abs() < 1e-12);
    }

    #[test]
    fn csv_columns() {
        let w = W::flat(1.0);
        let path = shoot(&w, p(0.0, 0.0), Complex::new(1.0, 0.0), 0.01, 5e-3).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y,speed\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
