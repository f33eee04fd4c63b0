//! Flow runs and the checks made on computed domains: mean values,
//! monotonicity, topology, the W-estimate, the reproducing inequality and
//! the boundary-density dichotomy.

use std::collections::VecDeque;
use std::str::FromStr;

use crate::contour;
use crate::error::{LabError, Result};
use crate::grid::{self, GridField, SolverOptions};
use crate::kernels::DiskPoint;
use crate::num::{lit, to_f64, Complex, Real};
use crate::obstacle::{fan_integral, FlowSnapshot, FlowSolver};
use crate::quadrature::DiskRule;
use crate::report::{CheckRow, VerificationReport};
use crate::surface::WeightSpec;

/// Largest exterior turning angle accepted at a boundary vertex, degrees.
pub const TURNING_LIMIT: f64 = 150.0;

/// Snapshots of `D(t)` for an increasing schedule.
pub fn run_flow<T: Real>(w: &WeightSpec<T>, ts: &[T], n: usize) -> Result<Vec<FlowSnapshot<T>>> {
    if ts.is_empty() {
        return Ok(Vec::new());
    }
    check_schedule(ts)?;
    let solver = FlowSolver::new(w, n, SolverOptions::default())?;
    run_flow_with(&solver, ts)
}

pub fn run_flow_with<T: Real>(solver: &FlowSolver<T>, ts: &[T]) -> Result<Vec<FlowSnapshot<T>>> {
    check_schedule(ts)?;
    ts.iter()
        .map(|&t| {
            solver.snapshot(t).map_err(|e| LabError::AtTime {
                t: to_f64(t),
                source: Box::new(e),
            })
        })
        .collect()
}

fn check_schedule<T: Real>(ts: &[T]) -> Result<()> {
    if let Some(t) = ts.iter().find(|t| !(**t > T::zero())) {
        return Err(LabError::Domain(format!("flow time {t} must be positive")));
    }
    if ts.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(LabError::Domain("flow times must be strictly increasing".into()));
    }
    Ok(())
}

/// `|∫_{D(t)} h ω dΣ - t h(0)|` for `h = 1, Re z, Im z, …, Re z^N, Im z^N`.
pub fn mean_value_residuals<T: Real>(s: &FlowSnapshot<T>, w: &WeightSpec<T>, degree: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(2 * degree + 1);
    let area = fan_integral(&s.loops, |z| w.value(DiskPoint { re: z.re, im: z.im }))?;
    out.push((area - s.t).abs());
    for k in 1..=degree {
        let mut pair = [T::zero(); 2];
        for (part, slot) in pair.iter_mut().enumerate() {
            let v = fan_integral(&s.loops, |z| {
                let p = z.powi(k as i32);
                let h = if part == 0 { p.re } else { p.im };
                Ok(h * w.value(DiskPoint { re: z.re, im: z.im })?)
            })?;
            *slot = v.abs();
        }
        out.extend(pair);
    }
    Ok(out)
}

/// Inclusion of each membership set in the next.
pub fn monotonicity_check<T: Real>(snaps: &[FlowSnapshot<T>]) -> VerificationReport {
    let mut report = VerificationReport::new();
    for pair in snaps.windows(2) {
        let lost = pair[0]
            .membership
            .iter()
            .zip(&pair[1].membership)
            .filter(|(a, b)| **a && !**b)
            .count();
        report.push(
            CheckRow::within(
                format!("inclusion t={} in t={}", pair[0].t, pair[1].t),
                lost as f64,
                0.0,
            )
            .on_grid(pair[0].n, to_f64(pair[0].h)),
        );
    }
    report
}

fn components(n: usize, cells: &[bool], diagonal: bool) -> usize {
    let mut seen = vec![false; n * n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    let steps: &[(isize, isize)] = if diagonal {
        &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
    } else {
        &[(1, 0), (-1, 0), (0, 1), (0, -1)]
    };
    for start in 0..n * n {
        if !cells[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k % n) as isize, (k / n) as isize);
            for &(di, dj) in steps {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                    continue;
                }
                let m = b as usize * n + a as usize;
                if cells[m] && !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }
    count
}

/// Discrete topology and regularity checks on one snapshot: the
/// membership set is 4-connected, its complement is 8-connected (no holes),
/// there is exactly one boundary loop and no vertex turns by more than
/// [`TURNING_LIMIT`] degrees.
pub fn verify_snapshot<T: Real>(s: &FlowSnapshot<T>) -> VerificationReport {
    let (n, h) = (s.n, to_f64(s.h));
    let inside = components(n, &s.membership, false);
    let outside: Vec<bool> = s.membership.iter().map(|b| !b).collect();
    let holes = components(n, &outside, true).saturating_sub(1);
    let turning = s
        .loops
        .iter()
        .map(|lp| to_f64(contour::max_turning_angle(lp)))
        .fold(0.0, f64::max);
    let mut report = VerificationReport::new();
    report
        .push(CheckRow::within("membership 4-connected", inside.abs_diff(1) as f64, 0.0).on_grid(n, h))
        .push(CheckRow::within("complement connected", holes as f64, 0.0).on_grid(n, h))
        .push(CheckRow::within("single boundary loop", s.loops.len().abs_diff(1) as f64, 0.0).on_grid(n, h))
        .push(CheckRow::exceeds("turning angle margin", TURNING_LIMIT - turning, 0.0).on_grid(n, h));
    report
}

/// Two-sided Hausdorff distance between the boundary polyline and the
/// circle `|z| = ρ`.
pub fn hausdorff_to_circle<T: Real>(s: &FlowSnapshot<T>, rho: T) -> T {
    let to_circle = s
        .boundary
        .iter()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - rho).abs())
        .fold(T::zero(), T::max);
    let samples = 1440;
    let from_circle = (0..samples)
        .map(|k| {
            let a = lit::<T>(std::f64::consts::TAU * k as f64 / samples as f64);
            contour::distance_to_loop(&s.boundary, [rho * a.cos(), rho * a.sin()])
        })
        .fold(T::zero(), T::max);
    to_circle.max(from_circle)
}

/// Whether `ν` may enter the reproducing-weight estimates, with the measured
/// margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypotheses {
    pub smooth_to_boundary: bool,
    /// `min Δ[ν/(1-|z|²)]` on the sample set.
    pub ratio_margin: f64,
    /// `max |∫ h ν dΣ - h(0)|` over harmonic monomials up to degree 6.
    pub reproducing_residual: f64,
}

pub const RATIO_MARGIN_TOL: f64 = 1e-8;
pub const REPRODUCING_TOL: f64 = 1e-4;

impl Hypotheses {
    pub fn subharmonic_ratio(&self) -> bool {
        self.smooth_to_boundary && self.ratio_margin >= -RATIO_MARGIN_TOL
    }

    pub fn reproducing(&self) -> bool {
        self.subharmonic_ratio() && self.reproducing_residual <= REPRODUCING_TOL
    }
}

pub fn hypotheses(nu: &WeightSpec<f64>) -> Hypotheses {
    let smooth_to_boundary = nu.radial_profile().is_none_or(|p| !p.singular_at_boundary())
        && (0..64).all(|k| {
            let a = std::f64::consts::TAU * k as f64 / 64.0;
            nu.value(DiskPoint {
                re: a.cos(),
                im: a.sin(),
            })
            .is_ok_and(f64::is_finite)
        });
    let mut ratio_margin = f64::INFINITY;
    for i in 0..=19 {
        let r = 0.05 * i as f64;
        for k in 0..32 {
            let a = std::f64::consts::TAU * k as f64 / 32.0;
            let z = DiskPoint {
                re: r * a.cos(),
                im: r * a.sin(),
            };
            ratio_margin = ratio_margin.min(nu.ratio_laplacian(z).unwrap_or(f64::NEG_INFINITY));
        }
    }
    let rule = DiskRule::<f64>::new(48, 64);
    let mut reproducing_residual = 0.0f64;
    let mut failed = false;
    for k in 0..=6 {
        for part in 0..2 {
            if k == 0 && part == 1 {
                continue;
            }
            let v = rule.integrate(|z| {
                let p = z.powi(k);
                let h = if part == 0 { p.re } else { p.im };
                match nu.value(DiskPoint { re: z.re, im: z.im }) {
                    Ok(x) => h * x,
                    Err(_) => {
                        failed = true;
                        0.0
                    }
                }
            });
            let h0 = if k == 0 { 1.0 } else { 0.0 };
            reproducing_residual = reproducing_residual.max((v - h0).abs());
        }
    }
    if failed {
        reproducing_residual = f64::INFINITY;
    }
    Hypotheses {
        smooth_to_boundary,
        ratio_margin,
        reproducing_residual,
    }
}

/// `W - (log|z|² + 3/2 - 2|z|² + ½|z|⁴)` at every unknown node other than
/// the origin, where `W = log|z|² - ∫ G(·,ζ) ν(ζ) dΣ(ζ)`.
pub fn w_estimate_excess(nu: &WeightSpec<f64>, n: usize) -> Result<GridField<f64>> {
    let pot = crate::obstacle::WeightPotential::new(nu, n, &SolverOptions::default())?;
    let unk = grid::unknown_mask::<f64>(n);
    let mut out = pot.u.clone();
    let c = out.center();
    for k in 0..n * n {
        out.values[k] = if unk[k] && k != c {
            let (x, y) = (out.coord(k % n), out.coord(k / n));
            let s = x * x + y * y;
            -pot.u.values[k] - 1.5 + 2.0 * s - 0.5 * s * s
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Checks `W ≤ log|z|² + 3/2 - 2|z|² + ½|z|⁴` nodewise up to `10h²`.
pub fn w_estimate_check(nu: &WeightSpec<f64>, n: usize) -> Result<VerificationReport> {
    let hyp = hypotheses(nu);
    let excess = w_estimate_excess(nu, n)?;
    let h = excess.h;
    let worst = excess.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 10.0 * h * h;
    let row = if hyp.subharmonic_ratio() {
        CheckRow::within("W below bound", worst, tol)
    } else {
        CheckRow::not_applicable("W below bound", worst, tol)
    };
    let mut report = VerificationReport::new();
    report.push(row.on_grid(n, h));
    Ok(report)
}

/// Subharmonic test functions for the reproducing inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    AbsSquare,
    AbsFourth,
    ExpRe,
    InverseDistance,
}

impl TestFunction {
    pub const ALL: [Self; 4] = [Self::AbsSquare, Self::AbsFourth, Self::ExpRe, Self::InverseDistance];

    pub fn eval(self, z: Complex<f64>) -> f64 {
        match self {
            Self::AbsSquare => z.norm_sqr(),
            Self::AbsFourth => z.norm_sqr().powi(2),
            Self::ExpRe => z.re.exp(),
            Self::InverseDistance => 1.0 / (Complex::new(1.0, 0.0) - z / 2.0).norm(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AbsSquare => "abs2",
            Self::AbsFourth => "abs4",
            Self::ExpRe => "exp_re",
            Self::InverseDistance => "inv_dist",
        }
    }
}

impl FromStr for TestFunction {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| LabError::Domain(format!("unknown test function {s:?}")))
    }
}

pub const REPRODUCING_QUAD_TOL: f64 = 1e-8;

/// Checks `∫ u·2(1-|z|²) dΣ ≤ ∫ u ν dΣ` with a polar rule of `n` angles
/// and `n/2` radii.
pub fn reproducing_inequality(nu: &WeightSpec<f64>, u: TestFunction, n: usize) -> Result<VerificationReport> {
    let hyp = hypotheses(nu);
    let rule = DiskRule::<f64>::new((n / 2).max(8), n.max(16));
    let lhs = rule.integrate(|z| u.eval(z) * 2.0 * (1.0 - z.norm_sqr()));
    let mut err = None;
    let rhs = rule.integrate(|z| match nu.value(DiskPoint { re: z.re, im: z.im }) {
        Ok(v) => u.eval(z) * v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let name = format!("reproducing inequality {}", u.name());
    let row = if hyp.reproducing() {
        CheckRow::within(name, lhs - rhs, REPRODUCING_QUAD_TOL)
    } else {
        CheckRow::not_applicable(name, lhs - rhs, REPRODUCING_QUAD_TOL)
    };
    let mut report = VerificationReport::new();
    report.push(row);
    Ok(report)
}

pub const BOUNDARY_ANGLES: usize = 720;
pub const BOUNDARY_ZERO_TOL: f64 = 1e-8;

/// Inward normal derivative of `ν` at `e^{iθ}`.
fn inward_derivative(nu: &WeightSpec<f64>, theta: f64) -> Result<f64> {
    if let Some(p) = nu.radial_profile() {
        return Ok(-2.0 * p.d1(1.0));
    }
    let d = 1e-4;
    let at = |r: f64| {
        nu.value(DiskPoint {
            re: r * theta.cos(),
            im: r * theta.sin(),
        })
    };
    Ok((-3.0 * at(1.0)? + 4.0 * at(1.0 - d)? - at(1.0 - 2.0 * d)?) / (2.0 * d))
}

/// At 720 boundary angles: `ν > 0`, or `ν = 0` with positive inward
/// normal derivative. The row counts failing angles.
pub fn boundary_density_check(nu: &WeightSpec<f64>) -> Result<VerificationReport> {
    let hyp = hypotheses(nu);
    let mut failures = 0usize;
    let mut zero_branch = 0usize;
    if hyp.smooth_to_boundary {
        for k in 0..BOUNDARY_ANGLES {
            let theta = std::f64::consts::TAU * k as f64 / BOUNDARY_ANGLES as f64;
            let v = nu.value(DiskPoint {
                re: theta.cos(),
                im: theta.sin(),
            })?;
            if v > BOUNDARY_ZERO_TOL {
                continue;
            }
            if v.abs() <= BOUNDARY_ZERO_TOL && inward_derivative(nu, theta)? > 0.0 {
                zero_branch += 1;
            } else {
                failures += 1;
            }
        }
    } else {
        failures = BOUNDARY_ANGLES;
    }
    let name = "boundary density dichotomy";
    let row = if hyp.reproducing() {
        CheckRow::within(name, failures as f64, 0.0)
    } else {
        CheckRow::not_applicable(name, failures as f64, 0.0)
    };
    let mut report = VerificationReport::new();
    report.push(row);
    report.push(CheckRow::not_applicable(
        "boundary angles on the zero branch",
        zero_branch as f64,
        BOUNDARY_ANGLES as f64,
    ));
    Ok(report)
}
