//! The potential `V_t = t G(·,0) - ∫ G(·,ζ) ω(ζ) dΣ(ζ)`, its smallest
//! superharmonic majorant `V̂_t`, the Hele-Shaw domain
//! `D(t) = {V_t < V̂_t}` and the termination time.

use serde::Serialize;

use crate::contour::{self, Loop};
use crate::error::{LabError, Result};
use crate::grid::{self, GridField, SolveStats, SolverOptions};
use crate::kernels::{DiskPoint, EPS_BOUNDARY};
use crate::num::{lit, to_f64, Complex, Real};
use crate::quadrature::GaussLegendre;
use crate::surface::WeightSpec;

/// Solver statistics carried by a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub sweeps: usize,
    pub residual: f64,
}

impl From<SolveStats> for Diagnostics {
    fn from(s: SolveStats) -> Self {
        Self {
            sweeps: s.sweeps,
            residual: s.residual,
        }
    }
}

/// One Hele-Shaw domain.
#[derive(Debug, Clone)]
pub struct FlowSnapshot<T> {
    pub t: T,
    pub n: usize,
    pub h: T,
    pub eps_detach: T,
    /// `V̂_t - V_t > ε_detach`, row-major.
    pub membership: Vec<bool>,
    /// Outer boundary loop, counterclockwise.
    pub boundary: Loop<T>,
    /// Every traced loop; holes run clockwise.
    pub loops: Vec<Loop<T>>,
    /// `∫_{D(t)} ω dΣ`.
    pub area_omega: T,
    pub detach_gap: GridField<T>,
    pub diagnostics: Diagnostics,
}

/// Serialized form of a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotDocument {
    pub t: f64,
    pub n: usize,
    pub h: f64,
    pub eps_detach: f64,
    pub boundary: Vec<[f64; 2]>,
    pub area_omega: f64,
    pub diagnostics: Diagnostics,
}

impl<T: Real> FlowSnapshot<T> {
    pub fn document(&self) -> SnapshotDocument {
        SnapshotDocument {
            t: to_f64(self.t),
            n: self.n,
            h: to_f64(self.h),
            eps_detach: to_f64(self.eps_detach),
            boundary: self.boundary.iter().map(|p| [to_f64(p[0]), to_f64(p[1])]).collect(),
            area_omega: to_f64(self.area_omega),
            diagnostics: self.diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("snapshot serializes")
    }

    /// `1 - max |p|` over all boundary vertices.
    pub fn distance_to_circle(&self) -> T {
        let rmax = self
            .loops
            .iter()
            .flatten()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .fold(T::zero(), T::max);
        T::one() - rmax
    }
}

/// `∫ f dΣ` over the region bounded by `loops` (signed by orientation),
/// via Gauss-Legendre on the fan of triangles from the origin.
pub fn fan_integral<T: Real>(loops: &[Loop<T>], mut f: impl FnMut(Complex<T>) -> Result<T>) -> Result<T> {
    let gu = GaussLegendre::<T>::new(12).mapped(T::zero(), T::one());
    let gv = GaussLegendre::<T>::new(3).mapped(T::zero(), T::one());
    let mut total = T::zero();
    for lp in loops {
        let m = lp.len();
        for k in 0..m {
            let (p, q) = (lp[k], lp[(k + 1) % m]);
            let cross = p[0] * q[1] - p[1] * q[0];
            if cross == T::zero() {
                continue;
            }
            let mut acc = T::zero();
            for &(v, wv) in &gv {
                let e = Complex::new(p[0] + v * (q[0] - p[0]), p[1] + v * (q[1] - p[1]));
                for &(u, wu) in &gu {
                    acc = acc + wv * wu * u * f(e * u)?;
                }
            }
            total = total + cross * acc;
        }
    }
    Ok(total / lit(std::f64::consts::PI))
}

/// `u_ω` solving `Δ_h u = ω`, `u = 0` on the circle.
#[derive(Debug, Clone)]
pub struct WeightPotential<T> {
    pub u: GridField<T>,
    pub stats: SolveStats,
}

impl<T: Real> WeightPotential<T> {
    pub fn new(w: &WeightSpec<T>, n: usize, opts: &SolverOptions) -> Result<Self> {
        w.validate()?;
        let unk = grid::unknown_mask::<T>(n);
        let mut rhs = GridField::zeros(n)?;
        for k in 0..n * n {
            if unk[k] {
                let z = DiskPoint {
                    re: rhs.coord(k % n),
                    im: rhs.coord(k / n),
                };
                rhs.values[k] = w.value(z)?;
            }
        }
        let (u, stats) = grid::poisson_solve(&rhs, opts)?;
        Ok(Self { u, stats })
    }

    /// `V_t` at the unknowns, `-∞` at the origin node, 0 elsewhere.
    pub fn vt(&self, t: T) -> GridField<T> {
        let n = self.u.n;
        let unk = grid::unknown_mask::<T>(n);
        let mut v = self.u.clone();
        let c = v.center();
        for k in 0..n * n {
            v.values[k] = if k == c {
                T::neg_infinity()
            } else if unk[k] {
                let (x, y) = (v.coord(k % n), v.coord(k / n));
                t * (x * x + y * y).ln() - self.u.values[k]
            } else {
                T::zero()
            };
        }
        v
    }
}

/// `V_t` sampled on an `n×n` grid.
pub fn build_vt<T: Real>(
    w: &WeightSpec<T>,
    t: T,
    n: usize,
    opts: &SolverOptions,
) -> Result<(GridField<T>, SolveStats)> {
    if !(t > T::zero()) {
        return Err(LabError::Domain(format!("t = {t} must be positive")));
    }
    let pot = WeightPotential::new(w, n, opts)?;
    Ok((pot.vt(t), pot.stats))
}

/// Smallest discrete superharmonic majorant of `obstacle`.
pub fn superharmonic_majorant<T: Real>(
    obstacle: &GridField<T>,
    opts: &SolverOptions,
) -> Result<(GridField<T>, SolveStats)> {
    grid::projected_majorant(obstacle, None, opts)
}

/// Fraction along the edge from inside node `a` to outside node `b` where
/// `√gap` extrapolates to zero, using the node behind `a`.
fn crossing_fraction<T: Real>(gap: &GridField<T>, inside_thr: T, a: usize, b: usize) -> T {
    let n = gap.n as isize;
    let (ia, ja) = ((a as isize) % n, (a as isize) / n);
    let (ib, jb) = ((b as isize) % n, (b as isize) / n);
    let (i2, j2) = (2 * ia - ib, 2 * ja - jb);
    let q = |k: usize| gap.values[k].max(T::zero()).sqrt();
    let qa = q(a);
    if i2 >= 0 && i2 < n && j2 >= 0 && j2 < n {
        let k2 = (j2 * n + i2) as usize;
        let q2 = q(k2);
        if gap.values[k2] > inside_thr && q2.is_finite() && q2 > qa {
            return (qa / (q2 - qa)).min(T::one());
        }
    }
    let qb = q(b);
    if qa.is_finite() && qa > qb {
        qa / (qa - qb)
    } else {
        lit(0.5)
    }
}

fn clamp_to_disk<T: Real>(lp: &Loop<T>) -> Loop<T> {
    let rmax = T::one() - lit(EPS_BOUNDARY);
    lp.iter()
        .map(|p| {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r > rmax {
                [p[0] * rmax / r, p[1] * rmax / r]
            } else {
                *p
            }
        })
        .collect()
}

/// Builds a snapshot from a detach-gap field `V̂_t - V_t`.
pub fn snapshot_from_gap<T: Real>(
    w: &WeightSpec<T>,
    t: T,
    gap: GridField<T>,
    diagnostics: Diagnostics,
) -> Result<FlowSnapshot<T>> {
    let n = gap.n;
    let h = gap.h;
    let eps = h * h;
    let unk = grid::unknown_mask::<T>(n);
    let membership: Vec<bool> = (0..n * n).map(|k| unk[k] && gap.values[k] > eps).collect();
    let inside_thr = lit::<T>(1e-4) * h * h;
    let inside: Vec<bool> = (0..n * n).map(|k| unk[k] && gap.values[k] > inside_thr).collect();
    let members = membership.iter().filter(|&&b| b).count();
    let raw = contour::trace(n, &inside, |a, b| crossing_fraction(&gap, inside_thr, a, b));
    let loops: Vec<Loop<T>> = raw
        .iter()
        .map(|lp| contour::dedupe(&clamp_to_disk(lp), lit::<T>(1e-2) * h))
        .filter(|lp| lp.len() >= 3)
        .collect();
    if members <= 1 || loops.is_empty() {
        return Err(LabError::EmptyDomain { t: to_f64(t), n });
    }
    let boundary = loops
        .iter()
        .max_by(|a, b| {
            contour::signed_area(*a)
                .partial_cmp(&contour::signed_area(*b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .cloned()
        .unwrap_or_default();
    let area_omega = fan_integral(&loops, |z| w.value(DiskPoint { re: z.re, im: z.im }))?;
    Ok(FlowSnapshot {
        t,
        n,
        h,
        eps_detach: eps,
        membership,
        boundary,
        loops,
        area_omega,
        detach_gap: gap,
        diagnostics,
    })
}

/// Hele-Shaw domains of one weight on one grid, sharing `u_ω`.
#[derive(Debug, Clone)]
pub struct FlowSolver<T> {
    pub weight: WeightSpec<T>,
    pub n: usize,
    pub potential: WeightPotential<T>,
    pub opts: SolverOptions,
}

impl<T: Real> FlowSolver<T> {
    pub fn new(weight: &WeightSpec<T>, n: usize, opts: SolverOptions) -> Result<Self> {
        Ok(Self {
            weight: weight.clone(),
            n,
            potential: WeightPotential::new(weight, n, &opts)?,
            opts,
        })
    }

    /// Majorant of `V_t`; `init` must be the majorant for some `t' ≤ t`.
    pub fn majorant(&self, t: T, init: Option<&GridField<T>>) -> Result<(GridField<T>, GridField<T>, SolveStats)> {
        if !(t > T::zero()) {
            return Err(LabError::Domain(format!("t = {t} must be positive")));
        }
        let vt = self.potential.vt(t);
        let (s, stats) = grid::projected_majorant(&vt, init, &self.opts)?;
        Ok((vt, s, stats))
    }

    /// `D(t)` and the majorant used to find it.
    pub fn snapshot_with(&self, t: T, init: Option<&GridField<T>>) -> Result<(FlowSnapshot<T>, GridField<T>)> {
        let (vt, s, stats) = self.majorant(t, init)?;
        let mut gap = s.clone();
        for k in 0..gap.values.len() {
            gap.values[k] = if vt.values[k].is_finite() {
                s.values[k] - vt.values[k]
            } else {
                T::infinity()
            };
        }
        let snap = snapshot_from_gap(&self.weight, t, gap, stats.into())?;
        Ok((snap, s))
    }

    pub fn snapshot(&self, t: T) -> Result<FlowSnapshot<T>> {
        Ok(self.snapshot_with(t, None)?.0)
    }
}

/// `D(t)` for weight `w` on an `n×n` grid.
pub fn extract_domain<T: Real>(w: &WeightSpec<T>, t: T, n: usize) -> Result<FlowSnapshot<T>> {
    FlowSolver::new(w, n, SolverOptions::default())?.snapshot(t)
}

/// Controls for [`termination_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationOptions {
    pub t_start: f64,
    pub t_max: f64,
    /// Root finding stops at `(hi - lo)/hi ≤ rel_width`.
    pub rel_width: f64,
}

impl Default for TerminationOptions {
    fn default() -> Self {
        Self {
            t_start: 0.05,
            t_max: 1e3,
            rel_width: 1e-3,
        }
    }
}

/// Outcome of [`termination_time`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// `T ≈ 2 t(2h) - t(4h)`, where `t(δ)` is the first time the boundary
    /// comes within `δ` of the circle.
    Finite { estimate: f64, t_2h: f64, t_4h: f64 },
    /// `D(t)` stays more than `4h` inside the circle up to `t_max`.
    Infinite { t_max: f64 },
}

impl Termination {
    pub fn estimate(&self) -> f64 {
        match *self {
            Self::Finite { estimate, .. } => estimate,
            Self::Infinite { .. } => f64::INFINITY,
        }
    }
}

struct Probe<'a, T: Real> {
    solver: &'a FlowSolver<T>,
    seen: Vec<(f64, f64)>,
}

impl<T: Real> Probe<'_, T> {
    fn distance(&mut self, t: f64) -> Result<f64> {
        if let Some(&(_, d)) = self.seen.iter().find(|(s, _)| *s == t) {
            return Ok(d);
        }
        let d = match self.solver.snapshot(lit(t)) {
            Ok(snap) => to_f64(snap.distance_to_circle()),
            Err(LabError::EmptyDomain { .. }) => 1.0,
            Err(e) => return Err(LabError::AtTime { t, source: Box::new(e) }),
        };
        self.seen.push((t, d));
        Ok(d)
    }
}

type Sample = (f64, f64);

/// Brackets the first crossing of `distance = delta` by geometric steps
/// from `guess`; `None` once a step passes `t_max`.
fn bracket<T: Real>(
    probe: &mut Probe<T>,
    delta: f64,
    guess: f64,
    mut step: f64,
    t_max: f64,
) -> Result<Option<(Sample, Sample)>> {
    let mut a = (guess.min(t_max), probe.distance(guess.min(t_max))? - delta);
    loop {
        let t = if a.1 > 0.0 {
            a.0 * (1.0 + step)
        } else {
            a.0 / (1.0 + step)
        };
        if a.1 > 0.0 && a.0 >= t_max {
            return Ok(None);
        }
        let t = t.min(t_max);
        if t < 1e-12 {
            return Err(LabError::Domain("no admissible starting time for the bracket".into()));
        }
        let b = (t, probe.distance(t)? - delta);
        if (b.1 > 0.0) != (a.1 > 0.0) {
            return Ok(Some(if a.1 > 0.0 { (a, b) } else { (b, a) }));
        }
        a = b;
        step *= 2.0;
    }
}

/// Illinois regula falsi for `distance = delta` on `lo < hi`.
fn refine<T: Real>(
    probe: &mut Probe<T>,
    delta: f64,
    (mut lo, mut glo): Sample,
    (mut hi, mut ghi): Sample,
    rel: f64,
) -> Result<f64> {
    let (mut wlo, mut whi) = (glo, ghi);
    let mut last = 0i8;
    while hi - lo > rel * hi {
        let width = hi - lo;
        let t = (hi - whi * width / (whi - wlo)).clamp(lo + 0.05 * width, hi - 0.05 * width);
        let g = probe.distance(t)? - delta;
        if g > 0.0 {
            (lo, glo, wlo) = (t, g, g);
            if last == 1 {
                whi *= 0.5;
            }
            last = 1;
        } else {
            (hi, ghi, whi) = (t, g, g);
            if last == -1 {
                wlo *= 0.5;
            }
            last = -1;
        }
    }
    Ok(hi - ghi * (hi - lo) / (ghi - glo))
}

/// Estimates the termination time from the first times `t(δ)` at which the
/// boundary comes within `δ = 4h` and `δ = 2h` of the circle, extrapolated
/// linearly to `δ = 0`. Grids `n = 2^k + 1` above 129 are seeded from the
/// next coarser grid.
pub fn termination_time<T: Real>(w: &WeightSpec<T>, n: usize, topts: &TerminationOptions) -> Result<Termination> {
    termination_time_on(&FlowSolver::new(w, n, SolverOptions::default())?, topts)
}

/// [`termination_time`] with the finest grid's solver supplied.
pub fn termination_time_on<T: Real>(solver: &FlowSolver<T>, topts: &TerminationOptions) -> Result<Termination> {
    let mut levels = vec![];
    let mut m = solver.n;
    loop {
        let c = m.div_ceil(2);
        if m > 129 && (m - 1).is_power_of_two() && c >= 129 {
            levels.push(c);
            m = c;
        } else {
            break;
        }
    }
    let mut hint = None;
    for &m in levels.iter().rev() {
        let coarse = FlowSolver::new(&solver.weight, m, solver.opts)?;
        match termination_time_with(&coarse, topts, hint)? {
            out @ Termination::Infinite { .. } => return Ok(out),
            Termination::Finite { t_2h, t_4h, .. } => {
                hint = Some((t_2h, 1.5 * t_2h - 0.5 * t_4h));
            }
        }
    }
    termination_time_with(solver, topts, hint)
}

/// Termination estimate on one grid; `hint` holds guesses for `t(4h)` and
/// `t(2h)`.
pub fn termination_time_with<T: Real>(
    solver: &FlowSolver<T>,
    topts: &TerminationOptions,
    hint: Option<(f64, f64)>,
) -> Result<Termination> {
    let h = 2.0 / (solver.n - 1) as f64;
    let mut probe = Probe {
        solver,
        seen: Vec::new(),
    };
    let (g4, s4) = match hint {
        Some((g, _)) => (g, topts.rel_width),
        None => (topts.t_start, 1.0),
    };
    let Some((lo, hi)) = bracket(&mut probe, 4.0 * h, g4, s4, topts.t_max)? else {
        return Ok(Termination::Infinite { t_max: topts.t_max });
    };
    let t4 = refine(&mut probe, 4.0 * h, lo, hi, topts.rel_width)?;
    let (g2, s2) = hint.map_or((t4 * 1.02, 0.02), |(_, g)| (g.max(t4), topts.rel_width));
    let Some((lo, hi)) = bracket(&mut probe, 2.0 * h, g2, s2, topts.t_max)? else {
        return Ok(Termination::Infinite { t_max: topts.t_max });
    };
    let t2 = refine(&mut probe, 2.0 * h, lo, hi, topts.rel_width)?;
    Ok(Termination::Finite {
        estimate: 2.0 * t2 - t4,
        t_2h: t2,
        t_4h: t4,
    })
}
