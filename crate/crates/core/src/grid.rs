//! Uniform grids on `[-1,1]²` masked to the closed disk, the Shortley-Weller
//! discretization of `Δ = ¼∇²` with zero Dirichlet data on the unit circle,
//! and red-black (projected) SOR solvers.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::num::{lit, to_f64, Real};

/// Nodes closer than `SNAP_FRACTION·h` to the circle carry the boundary
/// value instead of being unknowns.
pub const SNAP_FRACTION: f64 = 1e-3;

/// Coarsest level of nested iteration.
const COARSEST: usize = 33;

/// Scalar field on an `n×n` grid over `[-1,1]²`, spacing `h = 2/(n-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub n: usize,
    pub h: T,
    /// Row-major, `values[j*n + i]` at `(x_i, y_j)`.
    pub values: Vec<T>,
    /// True at nodes of the closed unit disk.
    pub mask: Vec<bool>,
}

impl<T: Real> GridField<T> {
    pub fn zeros(n: usize) -> Result<Self> {
        if n < 5 || n.is_multiple_of(2) {
            return Err(LabError::Domain(format!("grid size n = {n} must be odd and >= 5")));
        }
        let h = lit::<T>(2.0 / (n - 1) as f64);
        let mut mask = vec![false; n * n];
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (coord::<T>(i, n), coord::<T>(j, n));
                mask[j * n + i] = x * x + y * y <= T::one() + lit(1e-12);
            }
        }
        Ok(Self {
            n,
            h,
            values: vec![T::zero(); n * n],
            mask,
        })
    }

    /// Samples `f(x, y)` at masked nodes; unmasked nodes hold 0.
    pub fn from_fn(n: usize, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        let mut g = Self::zeros(n)?;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                if g.mask[k] {
                    g.values[k] = f(coord(i, n), coord(j, n));
                }
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        coord(i, self.n)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[j * self.n + i]
    }

    /// Index of the node at the origin.
    pub fn center(&self) -> usize {
        let c = (self.n - 1) / 2;
        self.idx(c, c)
    }
}

#[inline]
pub(crate) fn coord<T: Real>(i: usize, n: usize) -> T {
    lit::<T>(-1.0 + 2.0 * i as f64 / (n - 1) as f64)
}

/// True when node `(i, j)` is an unknown of the Dirichlet problem.
pub fn is_unknown<T: Real>(i: usize, j: usize, n: usize) -> bool {
    let (x, y) = (coord::<T>(i, n), coord::<T>(j, n));
    let h = 2.0 / (n - 1) as f64;
    let r = to_f64((x * x + y * y).sqrt());
    1.0 - r > SNAP_FRACTION * h
}

/// Values split by node color `(i + j) mod 2`, `nh = (n+1)/2` slots a row.
#[derive(Debug, Clone)]
struct ColorGrid<T> {
    n: usize,
    nh: usize,
    data: [Vec<T>; 2],
}

impl<T: Copy + Send + Sync> ColorGrid<T> {
    fn filled(n: usize, v: T) -> Self {
        let nh = n.div_ceil(2);
        Self {
            n,
            nh,
            data: [vec![v; n * nh], vec![v; n * nh]],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> (usize, usize) {
        ((i + j) & 1, j * self.nh + (i >> 1))
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        let (c, k) = self.slot(i, j);
        self.data[c][k]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        let (c, k) = self.slot(i, j);
        self.data[c][k] = v;
    }

    fn from_full(n: usize, full: &[T], fill: T) -> Self {
        let mut g = Self::filled(n, fill);
        for j in 0..n {
            for i in 0..n {
                g.set(i, j, full[j * n + i]);
            }
        }
        g
    }

    fn to_full(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// Shortley-Weller stencil `Δ_h u(P) = Σ a_k u_k - a_P u_P` with the
/// boundary value 0 imposed where a grid line meets the circle.
#[derive(Debug, Clone)]
struct Operator<T> {
    n: usize,
    h: T,
    active: ColorGrid<bool>,
    /// East, west, north, south.
    coef: [ColorGrid<T>; 4],
    diag: ColorGrid<T>,
    /// 0 inactive, 1 five-point stencil, 2 shortened arm.
    kind: ColorGrid<u8>,
    /// `coef / diag`.
    unit: [ColorGrid<T>; 4],
}

impl<T: Real> Operator<T> {
    fn new(n: usize) -> Self {
        let h = lit::<T>(2.0 / (n - 1) as f64);
        let mut active = ColorGrid::filled(n, false);
        let mut coef = [
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
        ];
        let mut diag = ColorGrid::filled(n, T::zero());
        let mut kind = ColorGrid::filled(n, 0u8);
        let mut unit = [
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
            ColorGrid::filled(n, T::zero()),
        ];
        let unknown: Vec<bool> = (0..n * n).map(|k| is_unknown::<T>(k % n, k / n, n)).collect();
        let arm = |x: T, y: T, dx: T, dy: T, nb: usize| -> T {
            if unknown[nb] {
                return T::one();
            }
            // (x + s h dx)² + (y + s h dy)² = 1, s > 0
            let along = x * dx + y * dy;
            let perp2 = x * x + y * y - along * along;
            let s = ((T::one() - perp2).max(T::zero()).sqrt() - along) / h;
            s.max(lit(1e-6))
        };
        let quarter_h2 = lit::<T>(4.0) * h * h;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                if !unknown[j * n + i] {
                    continue;
                }
                let (x, y) = (coord::<T>(i, n), coord::<T>(j, n));
                let (o, l) = (T::zero(), T::one());
                let se = arm(x, y, l, o, j * n + i + 1);
                let sw = arm(x, y, -l, o, j * n + i - 1);
                let sn = arm(x, y, o, l, (j + 1) * n + i);
                let ss = arm(x, y, o, -l, (j - 1) * n + i);
                let two = lit::<T>(2.0);
                let a = [
                    two / (se * (se + sw) * quarter_h2),
                    two / (sw * (se + sw) * quarter_h2),
                    two / (sn * (sn + ss) * quarter_h2),
                    two / (ss * (sn + ss) * quarter_h2),
                ];
                active.set(i, j, true);
                for (c, &v) in coef.iter_mut().zip(&a) {
                    c.set(i, j, v);
                }
                let d = a[0] + a[1] + a[2] + a[3];
                diag.set(i, j, d);
                for (c, &v) in unit.iter_mut().zip(&a) {
                    c.set(i, j, v / d);
                }
                let regular = se == T::one() && sw == T::one() && sn == T::one() && ss == T::one();
                kind.set(i, j, if regular { 1 } else { 2 });
            }
        }
        Self {
            n,
            h,
            active,
            coef,
            diag,
            kind,
            unit,
        }
    }

    fn optimal_relaxation(&self) -> f64 {
        let h = to_f64(self.h);
        let rho = 1.0 - 5.783 * h * h / 4.0;
        2.0 / (1.0 + (1.0 - rho * rho).sqrt())
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relaxation factor; `None` selects `2/(1+√(1-ρ_J²))` for the grid.
    pub omega: Option<f64>,
    pub max_sweeps: usize,
    /// Poisson stopping rule on the equilibrated residual, relative to
    /// `max|rhs|`.
    pub residual_tol: f64,
    /// Projected stopping rule on the max update, relative to the obstacle
    /// scale.
    pub update_tol: f64,
    /// Coarse-to-fine initial guesses when `n = 2^k + 1`.
    pub nested: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            omega: None,
            max_sweeps: 1_000_000,
            residual_tol: 1e-10,
            update_tol: 1e-12,
            nested: true,
        }
    }
}

/// Work done by a solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SolveStats {
    pub sweeps: usize,
    pub residual: f64,
}

/// One red or black half sweep; returns the max update. `rhs` holds
/// `rhs / a_P`.
fn half_sweep<T: Real>(
    op: &Operator<T>,
    u: &mut ColorGrid<T>,
    rhs: Option<&ColorGrid<T>>,
    obstacle: Option<&ColorGrid<T>>,
    color: usize,
    omega: T,
) -> T {
    let (n, nh) = (op.n, u.nh);
    let (lo, hi) = u.data.split_at_mut(1);
    let (mine, other) = if color == 0 {
        (&mut lo[0], &hi[0])
    } else {
        (&mut hi[0], &lo[0])
    };
    let other: &Vec<T> = other;
    let kind = &op.kind.data[color];
    let quarter = lit::<T>(0.25);
    mine.par_chunks_mut(nh)
        .enumerate()
        .map(|(j, row)| {
            if j == 0 || j == n - 1 {
                return T::zero();
            }
            let mut worst = T::zero();
            let parity = (color + j) & 1;
            let base = j * nh;
            for (k, slot) in row.iter_mut().enumerate() {
                let kd = kind[base + k];
                if kd == 0 {
                    continue;
                }
                let c = base + k;
                let e = other[c + parity];
                let w = other[c + parity - 1];
                let nn = other[c + nh];
                let s = other[c - nh];
                let mut gs = if kd == 1 {
                    (e + w + nn + s) * quarter
                } else {
                    op.unit[0].data[color][c] * e
                        + op.unit[1].data[color][c] * w
                        + op.unit[2].data[color][c] * nn
                        + op.unit[3].data[color][c] * s
                };
                if let Some(f) = rhs {
                    gs = gs - f.data[color][c];
                }
                let old = *slot;
                let mut new = old + omega * (gs - old);
                if let Some(psi) = obstacle {
                    new = new.max(psi.data[color][c]);
                }
                *slot = new;
                worst = worst.max((new - old).abs());
            }
            worst
        })
        .reduce(T::zero, T::max)
}

/// Equilibrated `Δ_h u - rhs` at node `(i, j)`, scaled by `1/(h² a_P)`.
fn local_residual<T: Real>(op: &Operator<T>, u: &ColorGrid<T>, rhs: T, i: usize, j: usize) -> T {
    let sum = op.coef[0].get(i, j) * u.get(i + 1, j)
        + op.coef[1].get(i, j) * u.get(i - 1, j)
        + op.coef[2].get(i, j) * u.get(i, j + 1)
        + op.coef[3].get(i, j) * u.get(i, j - 1);
    let d = op.diag.get(i, j);
    (sum - d * u.get(i, j) - rhs) / (op.h * op.h * d)
}

fn residual_norm<T: Real>(op: &Operator<T>, u: &ColorGrid<T>, rhs: &ColorGrid<T>) -> T {
    (1..op.n - 1)
        .into_par_iter()
        .map(|j| {
            let mut worst = T::zero();
            for i in 1..op.n - 1 {
                if op.active.get(i, j) {
                    worst = worst.max(local_residual(op, u, rhs.get(i, j), i, j).abs());
                }
            }
            worst
        })
        .reduce(T::zero, T::max)
}

/// `max |min(s - ψ, -Δ_h s)|` over unknowns with a finite obstacle.
fn complementarity_norm<T: Real>(op: &Operator<T>, s: &ColorGrid<T>, psi: &ColorGrid<T>) -> T {
    (1..op.n - 1)
        .into_par_iter()
        .map(|j| {
            let mut worst = T::zero();
            for i in 1..op.n - 1 {
                let p = psi.get(i, j);
                if op.active.get(i, j) && p.is_finite() {
                    let lap = local_residual(op, s, T::zero(), i, j);
                    worst = worst.max((s.get(i, j) - p).min(-lap).abs());
                }
            }
            worst
        })
        .reduce(T::zero, T::max)
}

fn inject<T: Copy>(fine: &[T], nf: usize) -> Vec<T> {
    let nc = nf.div_ceil(2);
    let mut out = Vec::with_capacity(nc * nc);
    for j in 0..nc {
        for i in 0..nc {
            out.push(fine[(2 * j) * nf + 2 * i]);
        }
    }
    out
}

fn prolong<T: Real>(coarse: &[T], nc: usize) -> Vec<T> {
    let nf = 2 * nc - 1;
    let mut out = vec![T::zero(); nf * nf];
    let half = lit::<T>(0.5);
    let quarter = lit::<T>(0.25);
    for jf in 0..nf {
        for i_f in 0..nf {
            let (ic, jc) = (i_f / 2, jf / 2);
            let c = |a: usize, b: usize| coarse[b * nc + a];
            out[jf * nf + i_f] = match (i_f % 2, jf % 2) {
                (0, 0) => c(ic, jc),
                (1, 0) => half * (c(ic, jc) + c(ic + 1, jc)),
                (0, 1) => half * (c(ic, jc) + c(ic, jc + 1)),
                _ => quarter * (c(ic, jc) + c(ic + 1, jc) + c(ic, jc + 1) + c(ic + 1, jc + 1)),
            };
        }
    }
    out
}

fn nestable(n: usize) -> bool {
    n > COARSEST && (n - 1).is_power_of_two()
}

/// Poisson or obstacle problem on a full row-major array.
fn solve_full<T: Real>(
    n: usize,
    rhs: &[T],
    obstacle: Option<&[T]>,
    init: Option<&[T]>,
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolveStats)> {
    let op = Operator::<T>::new(n);
    let guess: Vec<T> = match init {
        Some(g) => g.to_vec(),
        None if opts.nested && nestable(n) => {
            let rc = inject(rhs, n);
            let oc = obstacle.map(|o| inject(o, n));
            let (coarse, _) = solve_full(n.div_ceil(2), &rc, oc.as_deref(), None, opts)?;
            prolong(&coarse, n.div_ceil(2))
        }
        None => vec![T::zero(); n * n],
    };
    let mut u = ColorGrid::from_full(n, &guess, T::zero());
    for j in 0..n {
        for i in 0..n {
            if !op.active.get(i, j) {
                u.set(i, j, T::zero());
            } else if let Some(o) = obstacle {
                u.set(i, j, u.get(i, j).max(o[j * n + i]));
            }
        }
    }
    let f = ColorGrid::from_full(n, rhs, T::zero());
    let mut scaled = f.clone();
    for c in 0..2 {
        for (v, &d) in scaled.data[c].iter_mut().zip(&op.diag.data[c]) {
            *v = if d > T::zero() { *v / d } else { T::zero() };
        }
    }
    let psi = obstacle.map(|o| ColorGrid::from_full(n, o, T::neg_infinity()));
    let omega = lit::<T>(opts.omega.unwrap_or_else(|| op.optimal_relaxation()));

    let max_abs = |v: &[T], act: &ColorGrid<bool>| {
        let mut m = T::zero();
        for j in 0..n {
            for i in 0..n {
                let x = v[j * n + i];
                if act.get(i, j) && x.is_finite() {
                    m = m.max(x.abs());
                }
            }
        }
        m
    };

    match &psi {
        None => {
            let scale = max_abs(rhs, &op.active);
            let check_every = 16;
            let mut sweeps = 0;
            loop {
                for _ in 0..check_every {
                    half_sweep(&op, &mut u, Some(&scaled), None, 0, omega);
                    half_sweep(&op, &mut u, Some(&scaled), None, 1, omega);
                }
                sweeps += check_every;
                let res = residual_norm(&op, &u, &f);
                let umax = max_abs(&u.to_full(), &op.active);
                let floor = lit::<T>(64.0) * T::epsilon() * umax / (op.h * op.h);
                let tol = (lit::<T>(opts.residual_tol) * scale).max(floor);
                if res <= tol {
                    return Ok((
                        u.to_full(),
                        SolveStats {
                            sweeps,
                            residual: to_f64(res),
                        },
                    ));
                }
                if sweeps >= opts.max_sweeps {
                    return Err(LabError::SolverFailure {
                        what: format!("Poisson solve on n = {n}"),
                        sweeps,
                        residual: to_f64(res),
                    });
                }
            }
        }
        Some(psi) => {
            let forcing = rhs.iter().any(|v| *v != T::zero()).then_some(&scaled);
            let scale = max_abs(obstacle.unwrap_or(&[]), &op.active).max(T::one());
            let tol = lit::<T>(opts.update_tol).max(T::epsilon() * lit(16.0)) * scale;
            let mut sweeps = 0;
            loop {
                let a = half_sweep(&op, &mut u, forcing, Some(psi), 0, omega);
                let b = half_sweep(&op, &mut u, forcing, Some(psi), 1, omega);
                sweeps += 1;
                if a.max(b) <= tol {
                    let res = complementarity_norm(&op, &u, psi);
                    return Ok((
                        u.to_full(),
                        SolveStats {
                            sweeps,
                            residual: to_f64(res),
                        },
                    ));
                }
                if sweeps >= opts.max_sweeps {
                    return Err(LabError::SolverFailure {
                        what: format!("projected SOR on n = {n}"),
                        sweeps,
                        residual: to_f64(a.max(b)),
                    });
                }
            }
        }
    }
}

/// Solves `Δ_h u = rhs` on the unknowns with `u = 0` on the circle.
pub fn poisson_solve<T: Real>(rhs: &GridField<T>, opts: &SolverOptions) -> Result<(GridField<T>, SolveStats)> {
    if rhs.values.iter().zip(&rhs.mask).any(|(v, &m)| m && !v.is_finite()) {
        return Err(LabError::Domain(
            "Poisson right-hand side is not finite on the mask".into(),
        ));
    }
    let (values, stats) = solve_full(rhs.n, &rhs.values, None, None, opts)?;
    Ok((
        GridField {
            n: rhs.n,
            h: rhs.h,
            values,
            mask: rhs.mask.clone(),
        },
        stats,
    ))
}

/// Smallest discrete superharmonic `s ≥ obstacle` with `s = 0` on the
/// circle. Non-finite obstacle values (`-∞`) impose no constraint.
/// `init`, when given, must be a supersolution of the problem (for example
/// the majorant of a larger obstacle).
pub fn projected_majorant<T: Real>(
    obstacle: &GridField<T>,
    init: Option<&GridField<T>>,
    opts: &SolverOptions,
) -> Result<(GridField<T>, SolveStats)> {
    let n = obstacle.n;
    let zero = vec![T::zero(); n * n];
    let (values, stats) = solve_full(
        n,
        &zero,
        Some(&obstacle.values),
        init.map(|g| g.values.as_slice()),
        opts,
    )?;
    Ok((
        GridField {
            n,
            h: obstacle.h,
            values,
            mask: obstacle.mask.clone(),
        },
        stats,
    ))
}

/// `Δ_h u` at every unknown (0 elsewhere), with the same stencil as the
/// solvers.
pub fn discrete_laplacian<T: Real>(u: &GridField<T>) -> GridField<T> {
    let n = u.n;
    let op = Operator::<T>::new(n);
    let cu = ColorGrid::from_full(n, &u.values, T::zero());
    let mut out = vec![T::zero(); n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            if op.active.get(i, j) {
                let sum = op.coef[0].get(i, j) * u.get(i + 1, j)
                    + op.coef[1].get(i, j) * u.get(i - 1, j)
                    + op.coef[2].get(i, j) * u.get(i, j + 1)
                    + op.coef[3].get(i, j) * u.get(i, j - 1);
                out[j * n + i] = sum - op.diag.get(i, j) * cu.get(i, j);
            }
        }
    }
    GridField {
        n,
        h: u.h,
        values: out,
        mask: u.mask.clone(),
    }
}

/// Unknown-node flags of an `n×n` grid.
pub fn unknown_mask<T: Real>(n: usize) -> Vec<bool> {
    (0..n * n).map(|k| is_unknown::<T>(k % n, k / n, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_grid() {
        assert!(GridField::<f64>::zeros(64).is_err());
    }

    #[test]
    fn color_grid_roundtrip() {
        let n = 9;
        let full: Vec<f64> = (0..n * n).map(|k| k as f64).collect();
        let g = ColorGrid::from_full(n, &full, 0.0);
        assert_eq!(g.to_full(), full);
    }

    #[test]
    fn poisson_constant_rhs() {
        for &n in &[33usize, 65, 129] {
            let rhs = GridField::from_fn(n, |_, _| 1.0f64).unwrap();
            let (u, stats) = poisson_solve(&rhs, &SolverOptions::default()).unwrap();
            let unk = unknown_mask::<f64>(n);
            let mut err: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    if unk[j * n + i] {
                        let (x, y) = (u.coord(i), u.coord(j));
                        err = err.max((u.get(i, j) - (x * x + y * y - 1.0)).abs());
                    }
                }
            }
            assert!(err < 1e-9, "n = {n}: err {err}, {stats:?}");
        }
    }

    #[test]
    fn poisson_zero_rhs() {
        let rhs = GridField::<f64>::zeros(33).unwrap();
        let (u, _) = poisson_solve(&rhs, &SolverOptions::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_second_order() {
        let mut errs = Vec::new();
        for &n in &[65usize, 129] {
            let rhs = GridField::from_fn(n, |x: f64, y| 1.0 - x * x - y * y).unwrap();
            let (u, _) = poisson_solve(&rhs, &SolverOptions::default()).unwrap();
            let unk = unknown_mask::<f64>(n);
            let mut err: f64 = 0.0;
            for k in 0..n * n {
                if unk[k] {
                    let (x, y) = (u.coord(k % n), u.coord(k / n));
                    let s = x * x + y * y;
                    err = err.max((u.values[k] - (s - 0.25 * s * s - 0.75)).abs());
                }
            }
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn majorant_of_superharmonic_obstacle_is_itself() {
        let n = 33;
        let obst = GridField::from_fn(n, |x: f64, y| 1.0 - x * x - y * y).unwrap();
        let (s, _) = projected_majorant(&obst, None, &SolverOptions::default()).unwrap();
        let unk = unknown_mask::<f64>(n);
        for k in 0..n * n {
            if unk[k] {
                assert!((s.values[k] - obst.values[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_precision_poisson() {
        let rhs = GridField::from_fn(33, |_, _| 1.0f32).unwrap();
        let (u, _) = poisson_solve(&rhs, &SolverOptions::default()).unwrap();
        let c = u.center();
        assert!((u.values[c] + 1.0).abs() < 1e-3);
    }
}
