//! The Hele-Shaw exponential map: rings are boundaries of `D(r²)` for the
//! weight pulled back to the basepoint, rays are the orthogonal
//! trajectories through them.

use serde::Serialize;

use crate::contour::{self, Loop};
use crate::error::{LabError, Result};
use crate::grid::SolverOptions;
use crate::kernels::DiskPoint;
use crate::num::{lit, to_f64, Complex, Real};
use crate::obstacle::{FlowSnapshot, FlowSolver};
use crate::report::{CheckRow, VerificationReport};
use crate::surface::{mobius, mobius_pullback, WeightSpec};

/// Chart of `Φ` on a polar grid.
#[derive(Debug, Clone)]
pub struct ExpMapChart<T> {
    pub z0: Complex<T>,
    pub radii: Vec<T>,
    pub angles: Vec<T>,
    /// Chart coordinates in the pulled-back frame, `frame[i][j]` on ring
    /// `i` and ray `j`; `Φ = φ_{z₀}(-q)`.
    pub frame: Vec<Vec<Complex<T>>>,
    /// Boundary loops of `D(r_i²)` in the pulled-back frame, oriented so
    /// the frame coordinates read `-p`.
    pub rings: Vec<Loop<T>>,
    pub n: usize,
    pub h: T,
    /// Pulled-back weight at the frame origin.
    pub omega_origin: T,
    pub radial: bool,
}

impl<T: Real> ExpMapChart<T> {
    /// `Φ(r_i e^{iθ_j})` in disk coordinates.
    pub fn point(&self, i: usize, j: usize) -> Complex<T> {
        mobius(self.z0, -self.frame[i][j])
    }

    pub fn points(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.radii.len())
            .map(|i| (0..self.angles.len()).map(|j| self.point(i, j)).collect())
            .collect()
    }
}

/// Serialized chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartDocument {
    pub z0: [f64; 2],
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// Ring-major `Φ(r_i e^{iθ_j})`.
    pub points: Vec<[f64; 2]>,
    pub checks: VerificationReport,
}

impl ChartDocument {
    pub fn new<T: Real>(chart: &ExpMapChart<T>, checks: VerificationReport) -> Self {
        Self {
            z0: [to_f64(chart.z0.re), to_f64(chart.z0.im)],
            radii: chart.radii.iter().map(|&r| to_f64(r)).collect(),
            angles: chart.angles.iter().map(|&a| to_f64(a)).collect(),
            points: chart
                .points()
                .into_iter()
                .flatten()
                .map(|p| [to_f64(p.re), to_f64(p.im)])
                .collect(),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chart serializes")
    }
}

fn c2<T: Real>(p: [T; 2]) -> Complex<T> {
    Complex::new(p[0], p[1])
}

/// Unit tangent at `p`: principal axis of the loop vertices within arc
/// length `span` either side, oriented along the loop.
fn tangent_at<T: Real>(lp: &Loop<T>, p: Complex<T>, span: T) -> Complex<T> {
    let m = lp.len();
    let k = nearest_segment(lp, p);
    let mut pts = vec![p];
    let mut ends = [p, p];
    for (e, forward) in [true, false].into_iter().enumerate() {
        let (mut cur, mut idx) = (p, if forward { (k + 1) % m } else { k });
        let mut left = span;
        for _ in 0..m {
            let v = c2(lp[idx]);
            let d = (v - cur).norm();
            if d >= left {
                cur = cur + (v - cur) * (left / d);
                pts.push(cur);
                break;
            }
            left = left - d;
            cur = v;
            pts.push(v);
            idx = if forward { (idx + 1) % m } else { (idx + m - 1) % m };
        }
        ends[e] = cur;
    }
    let chord = ends[0] - ends[1];
    let count = lit::<T>(pts.len() as f64);
    let mean = pts.iter().fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b) / count;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for q in &pts {
        let d = *q - mean;
        sxx = sxx + d.re * d.re;
        sxy = sxy + d.re * d.im;
        syy = syy + d.im * d.im;
    }
    let theta = (lit::<T>(2.0) * sxy).atan2(sxx - syy) / lit(2.0);
    let axis = Complex::new(theta.cos(), theta.sin());
    if axis.re * chord.re + axis.im * chord.im < T::zero() {
        -axis
    } else {
        axis
    }
}

/// Polar Fourier fit `r(φ) = a₀ + Σ_{k≤K} aₖ cos kφ + bₖ sin kφ` of a ring
/// that is star-shaped about the frame origin.
#[derive(Debug, Clone)]
struct RingShape<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

/// Mode count resolvable on a ring of mean radius `rho`.
fn ring_modes<T: Real>(rho: T, h: T) -> usize {
    to_f64(rho / (h * lit(4.0))).floor().clamp(2.0, RING_MODES as f64) as usize
}

const RING_MODES: usize = 16;
const RING_SAMPLES: usize = 512;

impl<T: Real> RingShape<T> {
    /// `None` when some ray from the origin meets the loop other than once.
    fn fit(lp: &Loop<T>, h: T) -> Option<Self> {
        let origin = Complex::new(T::zero(), T::zero());
        let mut r = Vec::with_capacity(RING_SAMPLES);
        for j in 0..RING_SAMPLES {
            let phi = lit::<T>(std::f64::consts::TAU * (j as f64 + 0.5) / RING_SAMPLES as f64);
            let d = Complex::new(phi.cos(), phi.sin());
            if ray_hits(lp, origin, d) != 1 {
                return None;
            }
            r.push(ray_hit(lp, origin, d)?.norm());
        }
        let scale = lit::<T>(2.0 / RING_SAMPLES as f64);
        let mean = r.iter().fold(T::zero(), |a, &b| a + b) / lit(RING_SAMPLES as f64);
        let modes = ring_modes(mean, h);
        let mut cos = vec![T::zero(); modes + 1];
        let mut sin = vec![T::zero(); modes + 1];
        for (j, &rj) in r.iter().enumerate() {
            let phi = std::f64::consts::TAU * (j as f64 + 0.5) / RING_SAMPLES as f64;
            for k in 0..=modes {
                let a = lit::<T>(k as f64 * phi);
                cos[k] = cos[k] + rj * a.cos() * scale;
                sin[k] = sin[k] + rj * a.sin() * scale;
            }
        }
        cos[0] = cos[0] / lit(2.0);
        Some(Self { cos, sin })
    }

    fn normal(&self, p: Complex<T>) -> Complex<T> {
        let phi = p.arg();
        let (mut r, mut dr) = (T::zero(), T::zero());
        for k in 0..self.cos.len() {
            let kk = lit::<T>(k as f64);
            let (c, s) = ((kk * phi).cos(), (kk * phi).sin());
            r = r + self.cos[k] * c + self.sin[k] * s;
            dr = dr + kk * (self.sin[k] * c - self.cos[k] * s);
        }
        let n = Complex::new(r, -dr) * Complex::new(phi.cos(), phi.sin());
        n / n.norm()
    }
}

/// Number of crossings of the ray `p + s d`, `s > 0`, with `lp`.
fn ray_hits<T: Real>(lp: &Loop<T>, p: Complex<T>, d: Complex<T>) -> usize {
    let m = lp.len();
    (0..m)
        .filter(|&k| {
            let a = c2(lp[k]);
            let e = c2(lp[(k + 1) % m]) - a;
            let den = d.re * e.im - d.im * e.re;
            if den == T::zero() {
                return false;
            }
            let w = a - p;
            let s = (w.re * e.im - w.im * e.re) / den;
            let u = (w.re * d.im - w.im * d.re) / den;
            s > T::zero() && u >= T::zero() && u < T::one()
        })
        .count()
}

/// Outward unit normal of ring `lp` at `p`.
fn ring_normal<T: Real>(lp: &Loop<T>, shape: Option<&RingShape<T>>, p: Complex<T>, h: T) -> Complex<T> {
    match shape {
        Some(s) => s.normal(p),
        None => outward(tangent_at(lp, p, tangent_span(lp, h))),
    }
}

/// Arc window for tangents on `lp`: a quarter of its mean radius, at least
/// `4h`.
fn tangent_span<T: Real>(lp: &Loop<T>, h: T) -> T {
    let r = (contour::signed_area(lp).abs() / lit(std::f64::consts::PI)).sqrt();
    (r * lit(0.25)).max(h * lit(4.0))
}

/// Outward normal of a counterclockwise loop with tangent `t`.
fn outward<T: Real>(t: Complex<T>) -> Complex<T> {
    Complex::new(t.im, -t.re)
}

/// Segment of `lp` closest to `p`.
fn nearest_segment<T: Real>(lp: &Loop<T>, p: Complex<T>) -> usize {
    let m = lp.len();
    let mut best = (T::infinity(), 0);
    for k in 0..m {
        let d = contour::distance_to_segment(lp[k], lp[(k + 1) % m], [p.re, p.im]);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Nearest hit of the ray `p + s d`, `s > 0`, with `lp`.
fn ray_hit<T: Real>(lp: &Loop<T>, p: Complex<T>, d: Complex<T>) -> Option<Complex<T>> {
    let m = lp.len();
    let mut best: Option<(T, Complex<T>)> = None;
    for k in 0..m {
        let a = c2(lp[k]);
        let e = c2(lp[(k + 1) % m]) - a;
        let den = d.re * e.im - d.im * e.re;
        if den == T::zero() {
            continue;
        }
        let w = a - p;
        let s = (w.re * e.im - w.im * e.re) / den;
        let u = (w.re * d.im - w.im * d.re) / den;
        if s > T::zero() && u >= T::zero() && u <= T::one() && best.is_none_or(|(b, _)| s < b) {
            best = Some((s, p + d * s));
        }
    }
    best.map(|(_, q)| q)
}

/// Chart from precomputed snapshots of `D(r_i²)` in the pulled-back frame.
pub fn chart_from_snapshots<T: Real>(
    z0: Complex<T>,
    radii: &[T],
    snaps: &[FlowSnapshot<T>],
    n_theta: usize,
    omega_origin: T,
    radial: bool,
) -> Result<ExpMapChart<T>> {
    if snaps.len() != radii.len() || snaps.is_empty() {
        return Err(LabError::Domain("one snapshot per ring is required".into()));
    }
    if n_theta < 3 {
        return Err(LabError::Domain("at least three rays are required".into()));
    }
    let angles: Vec<T> = (0..n_theta)
        .map(|j| lit::<T>(std::f64::consts::TAU * j as f64 / n_theta as f64))
        .collect();
    let rings: Vec<Loop<T>> = snaps.iter().map(|s| s.boundary.clone()).collect();
    let h = snaps[0].h;
    let shapes: Vec<Option<RingShape<T>>> = rings.iter().map(|lp| RingShape::fit(lp, h)).collect();
    let mut traj: Vec<Vec<Complex<T>>> = Vec::with_capacity(radii.len());
    let origin = Complex::new(T::zero(), T::zero());
    let mut first = Vec::with_capacity(n_theta);
    for &a in &angles {
        let d = -Complex::new(a.cos(), a.sin());
        first.push(ray_hit(&rings[0], origin, d).ok_or_else(|| LabError::ChartBuild {
            ring: 0,
            angle: to_f64(a),
            reason: "seed ray misses the first boundary".into(),
        })?);
    }
    traj.push(first);
    for i in 1..radii.len() {
        let mut next = Vec::with_capacity(n_theta);
        for (j, &p) in traj[i - 1].iter().enumerate() {
            let lost = || LabError::ChartBuild {
                ring: i,
                angle: to_f64(angles[j]),
                reason: "normal ray misses the next boundary".into(),
            };
            let n0 = ring_normal(&rings[i - 1], shapes[i - 1].as_ref(), p, h);
            next.push(ray_hit(&rings[i], p, n0).ok_or_else(lost)?);
        }
        traj.push(next);
    }
    let frame = traj
        .into_iter()
        .map(|ring| ring.into_iter().map(|p| -p).collect())
        .collect();
    Ok(ExpMapChart {
        z0,
        radii: radii.to_vec(),
        angles,
        frame,
        rings,
        n: snaps[0].n,
        h: snaps[0].h,
        omega_origin,
        radial,
    })
}

/// Builds the chart on `n_r` equispaced radii up to `r_max` and `n_θ`
/// equispaced angles, solving each `D(r_i²)` on an `n×n` grid.
pub fn build_chart<T: Real>(
    w: &WeightSpec<T>,
    z0: DiskPoint<T>,
    r_max: T,
    n_r: usize,
    n_theta: usize,
    n: usize,
) -> Result<ExpMapChart<T>> {
    let (solver, radii) = chart_solver(w, z0, r_max, n_r, n)?;
    let ts: Vec<T> = radii.iter().map(|&r| r * r).collect();
    let snaps = crate::flow::run_flow_with(&solver, &ts)?;
    let origin = solver.weight.value(DiskPoint::origin())?;
    chart_from_snapshots(z0.z(), &radii, &snaps, n_theta, origin, solver.weight.is_radial())
}

fn chart_solver<T: Real>(
    w: &WeightSpec<T>,
    z0: DiskPoint<T>,
    r_max: T,
    n_r: usize,
    n: usize,
) -> Result<(FlowSolver<T>, Vec<T>)> {
    if n_r < 2 {
        return Err(LabError::Domain("at least two rings are required".into()));
    }
    if !(r_max > T::zero() && r_max < T::one()) {
        return Err(LabError::Domain(format!("r_max = {r_max} must lie in (0, 1)")));
    }
    let pulled = mobius_pullback(w, z0)?;
    let solver = FlowSolver::new(&pulled, n, SolverOptions::default())?;
    let radii = (1..=n_r).map(|i| r_max * lit(i as f64 / n_r as f64)).collect();
    Ok((solver, radii))
}

fn angle_between<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    (a.re * b.im - a.im * b.re)
        .atan2(a.re * b.re + a.im * b.im)
        .abs()
        .to_degrees()
}

fn segments_cross<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> bool {
    let orient = |p: Complex<T>, q: Complex<T>, r: Complex<T>| {
        let v = (q - p).re * (r - p).im - (q - p).im * (r - p).re;
        v.signum()
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < T::zero() && o3 * o4 < T::zero()
}

/// Least-squares `q ≈ a + b ζ` over the given rings, `ζ = r e^{iθ}`.
pub fn linear_fit<T: Real>(chart: &ExpMapChart<T>, rings: usize) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let (mut s1, mut sz, mut szz, mut sq, mut szq) = (T::zero(), zero, T::zero(), zero, zero);
    for i in 0..rings.min(chart.radii.len()) {
        for (j, &a) in chart.angles.iter().enumerate() {
            let zeta = Complex::from_polar(chart.radii[i], a);
            let q = chart.frame[i][j];
            s1 = s1 + T::one();
            sz = sz + zeta;
            szz = szz + zeta.norm_sqr();
            sq = sq + q;
            szq = szq + zeta.conj() * q;
        }
    }
    // normal equations [s1, sz; conj(sz), szz] [a; b] = [sq; szq]
    let det = s1 * szz - sz.norm_sqr();
    let a = (sq * szz - sz * szq) / det;
    let b = (szq * s1 - sz.conj() * sq) / det;
    (a, b)
}

/// Ring placement, orthogonality, first-order asymptotics, initial
/// directions and injectivity of a chart.
pub fn chart_checks<T: Real>(chart: &ExpMapChart<T>) -> VerificationReport {
    let (n, h) = (chart.n, to_f64(chart.h));
    let nr = chart.radii.len();
    let nt = chart.angles.len();
    let mut report = VerificationReport::new();

    let on_ring = (0..nr)
        .flat_map(|i| (0..nt).map(move |j| (i, j)))
        .map(|(i, j)| {
            let p = -chart.frame[i][j];
            to_f64(contour::distance_to_loop(&chart.rings[i], [p.re, p.im]))
        })
        .fold(0.0, f64::max);
    report.push(CheckRow::within("rings on flow boundaries", on_ring, 2.0 * h).on_grid(n, h));

    let shapes: Vec<Option<RingShape<T>>> = chart.rings.iter().map(|lp| RingShape::fit(lp, chart.h)).collect();
    let mut orth = 0.0f64;
    for i in 1..nr.saturating_sub(1) {
        for j in 0..nt {
            let p = -chart.frame[i][j];
            let dir = chart.frame[i - 1][j] - chart.frame[i + 1][j];
            let t = ring_normal(&chart.rings[i], shapes[i].as_ref(), p, chart.h) * Complex::new(T::zero(), T::one());
            orth = orth.max((to_f64(angle_between(dir, t)) - 90.0).abs());
        }
    }
    report.push(CheckRow::within("orthogonality deviation deg", orth, 1.0).on_grid(n, h));

    let (a, b) = linear_fit(chart, 2);
    let target = to_f64(chart.omega_origin).powf(-0.5);
    let slope = to_f64(b.norm());
    report
        .push(CheckRow::within("asymptotic slope relative error", (slope - target).abs() / target, 0.05).on_grid(n, h));
    let intercept = to_f64((mobius(chart.z0, -a) - chart.z0).norm());
    report.push(CheckRow::within("asymptotic intercept", intercept, 2.0 * h).on_grid(n, h));

    let mut dir_err = 0.0f64;
    for (j, &a) in chart.angles.iter().enumerate() {
        let p = -chart.frame[0][j];
        let d = -ring_normal(&chart.rings[0], shapes[0].as_ref(), p, chart.h);
        dir_err = dir_err.max(to_f64(angle_between(d, Complex::from_polar(T::one(), a))));
    }
    report.push(CheckRow::within("initial direction deg", dir_err, 1.0).on_grid(n, h));

    let mut crossings = 0usize;
    let mut min_gap = f64::INFINITY;
    for i in 0..nr {
        let mut total = 0.0;
        for j in 0..nt {
            let (p, q) = (chart.frame[i][j], chart.frame[i][(j + 1) % nt]);
            min_gap = min_gap.min(to_f64((q - p).norm()));
            let turn = to_f64(q.arg() - p.arg());
            let turn = turn.rem_euclid(std::f64::consts::TAU);
            total += turn;
            if i + 1 < nr {
                let (p1, q1) = (chart.frame[i + 1][j], chart.frame[i + 1][(j + 1) % nt]);
                if segments_cross(p, p1, q, q1) {
                    crossings += 1;
                }
            }
        }
        if (total - std::f64::consts::TAU).abs() > 1e-9 {
            crossings += 1;
        }
    }
    report.push(CheckRow::within("trajectory crossings", crossings as f64, 0.0).on_grid(n, h));
    report.push(CheckRow::exceeds("minimum ring spacing", min_gap, 0.0).on_grid(n, h));

    if chart.radial {
        let worst = chart
            .frame
            .iter()
            .map(|ring| {
                let rs: Vec<f64> = ring.iter().map(|q| to_f64(q.norm())).collect();
                let mean = rs.iter().sum::<f64>() / rs.len() as f64;
                rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rs.len() as f64
            })
            .fold(0.0, f64::max);
        report.push(CheckRow::within("ring radial variance", worst, 4.0 * h * h).on_grid(n, h));
    }
    report
}

/// Step-refinement study: charts with `n_r`, `2n_r` and `4n_r` rings share
/// one set of snapshots and first ring; returns `(e₁, e₂)`, the RMS
/// frame-coordinate change at the common radii between successive charts.
pub fn refinement_errors<T: Real>(
    w: &WeightSpec<T>,
    z0: DiskPoint<T>,
    r_max: T,
    n_r: usize,
    n_theta: usize,
    n: usize,
) -> Result<(f64, f64)> {
    let (solver, coarse) = chart_solver(w, z0, r_max, n_r, n)?;
    let steps = 4 * (n_r - 1);
    let r0 = coarse[0];
    let radii: Vec<T> = (0..=steps)
        .map(|k| r0 + (r_max - r0) * lit(k as f64 / steps as f64))
        .collect();
    let ts: Vec<T> = radii.iter().map(|&r| r * r).collect();
    let snaps = crate::flow::run_flow_with(&solver, &ts)?;
    let origin = solver.weight.value(DiskPoint::origin())?;
    let radial = solver.weight.is_radial();
    let chart = |stride: usize| -> Result<ExpMapChart<T>> {
        let idx: Vec<usize> = (0..=steps).step_by(stride).collect();
        let r: Vec<T> = idx.iter().map(|&i| radii[i]).collect();
        let s: Vec<FlowSnapshot<T>> = idx.iter().map(|&i| snaps[i].clone()).collect();
        chart_from_snapshots(z0.z(), &r, &s, n_theta, origin, radial)
    };
    let (c4, c2, c1) = (chart(4)?, chart(2)?, chart(1)?);
    let diff = |a: &ExpMapChart<T>, b: &ExpMapChart<T>, ratio: usize| -> f64 {
        let (mut sum, mut count) = (0.0f64, 0usize);
        for (i, ring) in a.frame.iter().enumerate().skip(1) {
            for (p, q) in ring.iter().zip(&b.frame[i * ratio]) {
                sum += to_f64((*p - *q).norm_sqr());
                count += 1;
            }
        }
        (sum / count as f64).sqrt()
    };
    Ok((diff(&c4, &c2, 2), diff(&c2, &c1, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_square() {
        let sq: Loop<f64> = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        let q = ray_hit(&sq, Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)).unwrap();
        assert!((q - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(ray_hit(&sq, Complex::new(2.0, 0.0), Complex::new(1.0, 0.0)).is_none());
    }

    #[test]
    fn fit_recovers_linear_map() {
        let radii = vec![0.1, 0.2];
        let angles: Vec<f64> = (0..8).map(|j| j as f64 * 0.25 * std::f64::consts::PI).collect();
        let frame = radii
            .iter()
            .map(|&r| {
                angles
                    .iter()
                    .map(|&a| Complex::new(0.01, -0.02) + Complex::new(0.7, 0.1) * Complex::from_polar(r, a))
                    .collect()
            })
            .collect();
        let chart = ExpMapChart {
            z0: Complex::new(0.0, 0.0),
            radii,
            angles,
            frame,
            rings: vec![],
            n: 33,
            h: 1.0 / 16.0,
            omega_origin: 1.0,
            radial: false,
        };
        let (a, b) = linear_fit(&chart, 2);
        assert!((a - Complex::new(0.01, -0.02)).norm() < 1e-14);
        assert!((b - Complex::new(0.7, 0.1)).norm() < 1e-14);
    }

    #[test]
    fn flat_chart_is_identity() {
        let chart = build_chart(&WeightSpec::flat(1.0f64), DiskPoint::origin(), 0.6, 3, 16, 129).unwrap();
        for i in 0..3 {
            for j in 0..16 {
                let want = Complex::from_polar(chart.radii[i], chart.angles[j]);
                assert!((chart.point(i, j) - want).norm() < 2.0 * chart.h);
            }
        }
        let rep = chart_checks(&chart);
        assert!(rep.all_pass(), "{}", rep.render_table());
    }
}
