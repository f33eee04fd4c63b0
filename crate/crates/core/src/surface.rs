//! Conformal weights `ω` on the disk, curvature, weak-hyperbolicity margins,
//! Möbius pull-backs and geodesic-circle radii of radial weights.

use std::path::Path;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::kernels::{DiskPoint, EPS_BOUNDARY};
use crate::num::{lit, Complex, Real};

/// Radial profile `ω₀(s) = Σ c_k (1-s)^{β_k}` with `s = |z|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    pub terms: Vec<(T, T)>,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(terms: Vec<(T, T)>) -> Self {
        Self { terms }
    }

    /// True when some term blows up at `s = 1`.
    pub fn singular_at_boundary(&self) -> bool {
        self.terms.iter().any(|&(c, b)| c != T::zero() && b < T::zero())
    }

    pub fn value(&self, s: T) -> T {
        let u = T::one() - s;
        self.terms
            .iter()
            .map(|&(c, b)| if b == T::zero() { c } else { c * u.powf(b) })
            .sum()
    }

    pub fn d1(&self, s: T) -> T {
        let u = T::one() - s;
        self.terms
            .iter()
            .filter(|&&(_, b)| b != T::zero())
            .map(|&(c, b)| -c * b * u.powf(b - T::one()))
            .sum()
    }

    pub fn d2(&self, s: T) -> T {
        let u = T::one() - s;
        self.terms
            .iter()
            .filter(|&&(_, b)| b != T::zero() && b != T::one())
            .map(|&(c, b)| c * b * (b - T::one()) * u.powf(b - lit(2.0)))
            .sum()
    }

    /// `Δ log ω₀(|z|²)` via `Δf(|z|²) = f' + s f''`.
    pub fn lap_log(&self, s: T) -> T {
        let (v, d1, d2) = (self.value(s), self.d1(s), self.d2(s));
        let l1 = d1 / v;
        let l2 = d2 / v - l1 * l1;
        l1 + s * l2
    }

    /// `Δ ω₀(|z|²)`.
    pub fn laplacian(&self, s: T) -> T {
        self.d1(s) + s * self.d2(s)
    }

    /// Profile of `ω₀(s) (1-s)^{shift}`.
    pub fn shifted(&self, shift: T) -> Self {
        Self::new(self.terms.iter().map(|&(c, b)| (c, b + shift)).collect())
    }

    /// `ω₀(r) + r ω₀'(r)`; the circle `|z|² = r` is a geodesic iff it vanishes.
    pub fn circle_condition(&self, r: T) -> T {
        self.value(r) + r * self.d1(r)
    }

    /// `ρ |1 + ω₀'(ρ²) ρ² / ω₀(ρ²)|`, the geodesic-equation residual of the
    /// unit-speed-in-angle circle `ρ e^{it}`.
    pub fn circle_residual(&self, rho: T) -> T {
        let s = rho * rho;
        rho * (T::one() + self.d1(s) * s / self.value(s)).abs()
    }
}

/// Weight sampled on a uniform grid over `[-1,1]²`, NaN outside the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TableWeight<T> {
    nx: usize,
    ny: usize,
    samples: Vec<T>,
}

impl<T: Real> TableWeight<T> {
    /// Row-major samples, `samples[j*nx + i]` at `(x_i, y_j)`.
    pub fn new(nx: usize, ny: usize, samples: Vec<T>) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(LabError::Table(format!("grid {nx}x{ny} is smaller than 4x4")));
        }
        if samples.len() != nx * ny {
            return Err(LabError::Table(format!(
                "expected {} samples, found {}",
                nx * ny,
                samples.len()
            )));
        }
        for (k, &v) in samples.iter().enumerate() {
            if !v.is_nan() && !(v > T::zero() && v.is_finite()) {
                return Err(LabError::InvalidWeight(format!(
                    "table sample {k} = {v} is not strictly positive"
                )));
            }
        }
        Ok(Self { nx, ny, samples })
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        let mut samples = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (Self::coord(i, nx), Self::coord(j, ny));
                samples.push(if x * x + y * y <= T::one() { f(x, y) } else { T::nan() });
            }
        }
        Self::new(nx, ny, samples)
    }

    /// Reads `nx, ny` followed by `nx*ny` row-major samples.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut fields: Vec<String> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| LabError::Table(e.to_string()))?;
            fields.extend(rec.iter().filter(|f| !f.is_empty()).map(str::to_owned));
        }
        let dim = |k: usize| -> Result<usize> {
            fields
                .get(k)
                .ok_or_else(|| LabError::Table("missing nx, ny header".into()))?
                .parse()
                .map_err(|e| LabError::Table(format!("bad grid size: {e}")))
        };
        let (nx, ny) = (dim(0)?, dim(1)?);
        let samples = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map(lit::<T>)
                    .map_err(|e| LabError::Table(format!("bad sample '{f}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(nx, ny, samples)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    fn coord(i: usize, n: usize) -> T {
        lit::<T>(-1.0) + lit::<T>(2.0 * i as f64 / (n - 1) as f64)
    }

    pub fn spacing(&self) -> T {
        lit::<T>(2.0 / ((self.nx.max(self.ny) - 1) as f64))
    }

    fn at(&self, i: isize, j: isize) -> T {
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        self.samples[j * self.nx + i]
    }

    /// Catmull-Rom bicubic interpolation; NaN stencil nodes take the value
    /// of the nearest valid node of the containing cell.
    pub fn interpolate(&self, x: T, y: T) -> Result<T> {
        let fx = (x + T::one()) / lit(2.0) * lit((self.nx - 1) as f64);
        let fy = (y + T::one()) / lit(2.0) * lit((self.ny - 1) as f64);
        let i0 = fx.floor().to_isize().unwrap_or(0).clamp(0, self.nx as isize - 2);
        let j0 = fy.floor().to_isize().unwrap_or(0).clamp(0, self.ny as isize - 2);
        let (tx, ty) = (fx - lit(i0 as f64), fy - lit(j0 as f64));
        let corners = [(0, 0), (1, 0), (0, 1), (1, 1)];
        let mut best: Option<(T, T)> = None;
        for &(di, dj) in &corners {
            let v = self.at(i0 + di, j0 + dj);
            if v.is_nan() {
                continue;
            }
            let d = (tx - lit(di as f64)).powi(2) + (ty - lit(dj as f64)).powi(2);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
        let fallback = best
            .ok_or_else(|| LabError::Domain(format!("({x}, {y}) is outside the table mask")))?
            .1;
        let mut rows = [T::zero(); 4];
        for (r, dj) in (-1..=2).enumerate() {
            let mut p = [T::zero(); 4];
            for (c, di) in (-1..=2).enumerate() {
                let v = self.at(i0 + di, j0 + dj);
                p[c] = if v.is_nan() { fallback } else { v };
            }
            rows[r] = catmull_rom(p, tx);
        }
        Ok(catmull_rom(rows, ty))
    }
}

fn catmull_rom<T: Real>(p: [T; 4], t: T) -> T {
    let half = lit::<T>(0.5);
    let a = -half * p[0] + lit::<T>(1.5) * p[1] - lit::<T>(1.5) * p[2] + half * p[3];
    let b = p[0] - lit::<T>(2.5) * p[1] + lit::<T>(2.0) * p[2] - half * p[3];
    let c = -half * p[0] + half * p[2];
    ((a * t + b) * t + c) * t + p[1]
}

/// Conformal weight `ω` of the metric `ω(z)|dz|²`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec<T> {
    /// `c`.
    Flat {
        c: T,
    },
    /// `c / (1-|z|²)²`; curvature `-4/c`.
    PoincareScaled {
        c: T,
    },
    /// `(1-|z|²)^{2α}`.
    AlphaPower {
        alpha: T,
    },
    /// `c / (1-|z|²)² + (1-|z|²)^{2α}`.
    Example7 {
        c: T,
        alpha: T,
    },
    /// `c (1-|z|²)^β`.
    ScaledPower {
        c: T,
        beta: T,
    },
    Table(Arc<TableWeight<T>>),
    /// `ω(φ(z)) |φ'(z)|²` with `φ(z) = (z₀ - z)/(1 - z̄₀ z)`.
    Pullback {
        base: Box<WeightSpec<T>>,
        z0: Complex<T>,
    },
}

impl<T: Real> WeightSpec<T> {
    pub fn flat(c: T) -> Self {
        Self::Flat { c }
    }

    pub fn poincare_scaled(c: T) -> Self {
        Self::PoincareScaled { c }
    }

    pub fn alpha_power(alpha: T) -> Self {
        Self::AlphaPower { alpha }
    }

    pub fn example7(c: T, alpha: T) -> Self {
        Self::Example7 { c, alpha }
    }

    pub fn scaled_power(c: T, beta: T) -> Self {
        Self::ScaledPower { c, beta }
    }

    pub fn table(t: TableWeight<T>) -> Self {
        Self::Table(Arc::new(t))
    }

    /// Rejects nonpositive family parameters.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::InvalidWeight(format!("{name} = {v} must be positive")))
            }
        };
        let nonneg = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(LabError::InvalidWeight(format!("{name} = {v} must be nonnegative")))
            }
        };
        match self {
            Self::Flat { c } | Self::PoincareScaled { c } => pos("c", *c),
            Self::AlphaPower { alpha } => nonneg("alpha", *alpha),
            Self::Example7 { c, alpha } => pos("c", *c).and(nonneg("alpha", *alpha)),
            Self::ScaledPower { c, beta } => {
                pos("c", *c)?;
                if beta.is_finite() {
                    Ok(())
                } else {
                    Err(LabError::InvalidWeight("beta must be finite".into()))
                }
            }
            Self::Table(_) => Ok(()),
            Self::Pullback { base, z0 } => {
                if z0.norm_sqr() >= T::one() {
                    return Err(LabError::Domain("pull-back basepoint must be interior".into()));
                }
                base.validate()
            }
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            Self::Flat { c } => format!("flat({c})"),
            Self::PoincareScaled { c } => format!("poincare_scaled({c})"),
            Self::AlphaPower { alpha } => format!("alpha_power({alpha})"),
            Self::Example7 { c, alpha } => format!("example7({c}, {alpha})"),
            Self::ScaledPower { c, beta } => format!("scaled_power({c}, {beta})"),
            Self::Table(t) => format!("table({}x{})", t.nx, t.ny),
            Self::Pullback { base, z0 } => {
                format!("pullback({}, {}{:+}i)", base.label(), z0.re, z0.im)
            }
        }
    }

    /// Radial profile for the analytic radial families.
    pub fn radial_profile(&self) -> Option<RadialProfile<T>> {
        let two = lit::<T>(2.0);
        let terms = match *self {
            Self::Flat { c } => vec![(c, T::zero())],
            Self::PoincareScaled { c } => vec![(c, -two)],
            Self::AlphaPower { alpha } => vec![(T::one(), two * alpha)],
            Self::Example7 { c, alpha } => vec![(c, -two), (T::one(), two * alpha)],
            Self::ScaledPower { c, beta } => vec![(c, beta)],
            Self::Table(_) | Self::Pullback { .. } => return None,
        };
        Some(RadialProfile::new(terms))
    }

    pub fn is_radial(&self) -> bool {
        self.radial_profile().is_some()
    }

    fn check_point(&self, z: &DiskPoint<T>, profile: &RadialProfile<T>) -> Result<()> {
        if profile.singular_at_boundary() && !z.is_interior() {
            return Err(LabError::Domain(format!(
                "{} is singular on the unit circle; z = ({}, {})",
                self.label(),
                z.re,
                z.im
            )));
        }
        Ok(())
    }

    /// `ω(z)`; zero is accepted only on the unit circle.
    pub fn value(&self, z: DiskPoint<T>) -> Result<T> {
        let v = match self {
            Self::Table(t) => t.interpolate(z.re, z.im)?,
            Self::Pullback { base, z0 } => {
                let (w, dphi, _) = mobius_parts(*z0, z)?;
                base.value(w)? * dphi.norm_sqr()
            }
            _ => {
                let p = self.radial_profile().expect("radial family");
                self.check_point(&z, &p)?;
                p.value(z.norm_sqr())
            }
        };
        if v > T::zero() && v.is_finite() {
            Ok(v)
        } else if z.on_boundary() && v.is_finite() && v > -lit::<T>(EPS_BOUNDARY) {
            Ok(v.max(T::zero()))
        } else {
            Err(LabError::InvalidWeight(format!(
                "{} evaluates to {v} at ({}, {})",
                self.label(),
                z.re,
                z.im
            )))
        }
    }

    /// `∂ω/∂z`.
    pub fn dz(&self, z: DiskPoint<T>) -> Result<Complex<T>> {
        match self {
            Self::Table(t) => {
                let (wx, wy) = table_gradient(t, z)?;
                Ok(Complex::new(wx, -wy) / lit::<T>(2.0))
            }
            Self::Pullback { base, z0 } => {
                let (w, dphi, ddphi) = mobius_parts(*z0, z)?;
                let wz = base.dz(w)?;
                let wv = base.value(w)?;
                Ok(wz * dphi * dphi.norm_sqr() + ddphi * dphi.conj() * wv)
            }
            _ => {
                let p = self.radial_profile().expect("radial family");
                self.check_point(&z, &p)?;
                Ok(z.z().conj() * p.d1(z.norm_sqr()))
            }
        }
    }

    /// `Δ log ω(z)` with `Δ = ∂²/∂z∂z̄`.
    pub fn lap_log(&self, z: DiskPoint<T>) -> Result<T> {
        match self {
            Self::Table(t) => table_lap_log(t, z),
            Self::Pullback { base, z0 } => {
                let (w, dphi, _) = mobius_parts(*z0, z)?;
                Ok(base.lap_log(w)? * dphi.norm_sqr())
            }
            _ => {
                let p = self.radial_profile().expect("radial family");
                self.check_point(&z, &p)?;
                if !z.is_interior() {
                    return Err(LabError::Domain("Δ log ω needs an interior point".into()));
                }
                self.value(z)?;
                Ok(p.lap_log(z.norm_sqr()))
            }
        }
    }

    /// Gaussian curvature `κ = -2 Δ log ω / ω`.
    pub fn curvature(&self, z: DiskPoint<T>) -> Result<T> {
        Ok(-lit::<T>(2.0) * self.lap_log(z)? / self.value(z)?)
    }

    /// `Δ log[ω / (1-|z|²)^{2α}]`; nonnegative iff `K + α K_ℍ ≤ 0` at `z`.
    pub fn hyperbolicity_margin(&self, alpha: T, z: DiskPoint<T>) -> Result<T> {
        if !z.is_interior() {
            return Err(LabError::Domain("hyperbolicity margin needs an interior point".into()));
        }
        let u = T::one() - z.norm_sqr();
        Ok(self.lap_log(z)? + lit::<T>(2.0) * alpha / (u * u))
    }

    /// `Δ[ω/(1-|z|²)]`; the weight-ratio subharmonicity required by the
    /// reproducing-weight estimates.
    pub fn ratio_laplacian(&self, z: DiskPoint<T>) -> Result<T> {
        if !z.is_interior() {
            return Err(LabError::Domain("ratio Laplacian needs an interior point".into()));
        }
        if let Some(p) = self.radial_profile() {
            return Ok(p.shifted(-T::one()).laplacian(z.norm_sqr()));
        }
        let h = lit::<T>(1e-3);
        let f = |dx: T, dy: T| -> Result<T> {
            let q = DiskPoint {
                re: z.re + dx,
                im: z.im + dy,
            };
            Ok(self.value(q)? / (T::one() - q.norm_sqr()))
        };
        let sum = f(h, T::zero())? + f(-h, T::zero())? + f(T::zero(), h)? + f(T::zero(), -h)?;
        Ok((sum - lit::<T>(4.0) * f(T::zero(), T::zero())?) / (lit::<T>(4.0) * h * h))
    }
}

/// `(φ(z), φ'(z), φ''(z))` for `φ(z) = (z₀ - z)/(1 - z̄₀ z)`.
fn mobius_parts<T: Real>(z0: Complex<T>, z: DiskPoint<T>) -> Result<(DiskPoint<T>, Complex<T>, Complex<T>)> {
    let one = Complex::new(T::one(), T::zero());
    let den = one - z0.conj() * z.z();
    if den.norm_sqr() == T::zero() {
        return Err(LabError::SingularInput("Möbius map pole".into()));
    }
    let w = (z0 - z.z()) / den;
    let m = z0.norm_sqr() - T::one();
    let dphi = Complex::new(m, T::zero()) / (den * den);
    let ddphi = z0.conj() * Complex::new(lit::<T>(2.0) * m, T::zero()) / (den * den * den);
    Ok((DiskPoint { re: w.re, im: w.im }, dphi, ddphi))
}

/// Möbius involution `φ_{z₀}(z) = (z₀ - z)/(1 - z̄₀ z)`.
pub fn mobius<T: Real>(z0: Complex<T>, z: Complex<T>) -> Complex<T> {
    (z0 - z) / (Complex::new(T::one(), T::zero()) - z0.conj() * z)
}

fn table_offset<T: Real>(t: &TableWeight<T>, z: DiskPoint<T>, dx: T, dy: T) -> Option<T> {
    let (x, y) = (z.re + dx, z.im + dy);
    if x * x + y * y > T::one() {
        return None;
    }
    t.interpolate(x, y).ok()
}

/// First and second derivative along one axis with one-sided fallback.
fn axis_diffs<T: Real>(f: impl Fn(T) -> Option<T>, h: T) -> Result<(T, T)> {
    let two = lit::<T>(2.0);
    let f0 = f(T::zero()).ok_or_else(|| LabError::Domain("point outside table mask".into()))?;
    match (f(h), f(-h)) {
        (Some(p), Some(m)) => Ok(((p - m) / (two * h), (p - two * f0 + m) / (h * h))),
        (None, Some(m)) => {
            let m2 = f(-two * h).ok_or_else(|| LabError::Domain("table stencil too thin".into()))?;
            Ok((
                (lit::<T>(3.0) * f0 - lit::<T>(4.0) * m + m2) / (two * h),
                (f0 - two * m + m2) / (h * h),
            ))
        }
        (Some(p), None) => {
            let p2 = f(two * h).ok_or_else(|| LabError::Domain("table stencil too thin".into()))?;
            Ok((
                (-lit::<T>(3.0) * f0 + lit::<T>(4.0) * p - p2) / (two * h),
                (f0 - two * p + p2) / (h * h),
            ))
        }
        (None, None) => Err(LabError::Domain("table stencil too thin".into())),
    }
}

fn table_gradient<T: Real>(t: &TableWeight<T>, z: DiskPoint<T>) -> Result<(T, T)> {
    let h = t.spacing();
    let (wx, _) = axis_diffs(|d| table_offset(t, z, d, T::zero()), h)?;
    let (wy, _) = axis_diffs(|d| table_offset(t, z, T::zero(), d), h)?;
    Ok((wx, wy))
}

fn table_lap_log<T: Real>(t: &TableWeight<T>, z: DiskPoint<T>) -> Result<T> {
    let h = t.spacing();
    let lg = |dx: T, dy: T| table_offset(t, z, dx, dy).map(|v| v.ln());
    let (_, lxx) = axis_diffs(|d| lg(d, T::zero()), h)?;
    let (_, lyy) = axis_diffs(|d| lg(T::zero(), d), h)?;
    Ok((lxx + lyy) / lit(4.0))
}

/// `ω(z)`.
pub fn eval_weight<T: Real>(w: &WeightSpec<T>, z: DiskPoint<T>) -> Result<T> {
    w.value(z)
}

/// `κ(z) = -2 Δ log ω(z) / ω(z)`.
pub fn curvature<T: Real>(w: &WeightSpec<T>, z: DiskPoint<T>) -> Result<T> {
    w.curvature(z)
}

/// `Δ log[ω(z)/(1-|z|²)^{2α}]`.
pub fn hyperbolicity_margin<T: Real>(w: &WeightSpec<T>, alpha: T, z: DiskPoint<T>) -> Result<T> {
    w.hyperbolicity_margin(alpha, z)
}

/// `ω̃(z) = ω(φ_{z₀}(z)) |φ'_{z₀}(z)|²`.
pub fn mobius_pullback<T: Real>(w: &WeightSpec<T>, z0: DiskPoint<T>) -> Result<WeightSpec<T>> {
    if !z0.is_interior() {
        return Err(LabError::Domain("pull-back basepoint must be interior".into()));
    }
    match w {
        WeightSpec::PoincareScaled { .. } => Ok(w.clone()),
        _ if z0.norm_sqr() == T::zero() && w.is_radial() => Ok(w.clone()),
        _ => Ok(WeightSpec::Pullback {
            base: Box::new(w.clone()),
            z0: z0.z(),
        }),
    }
}

/// Roots in `(0,1)` of `ω₀(r) + r ω₀'(r)` by a 10⁴-panel sign scan and
/// bisection to `tol`.
pub fn circle_radii_of<T: Real>(profile: &RadialProfile<T>, tol: T) -> Vec<T> {
    const PANELS: usize = 10_000;
    let f = |r: T| profile.circle_condition(r);
    let node = |i: usize| -> T {
        if i == PANELS {
            T::one() - lit(1e-9)
        } else {
            lit(i as f64 / PANELS as f64)
        }
    };
    let mut roots = Vec::new();
    let mut a = node(0);
    let mut fa = f(a);
    for i in 1..=PANELS {
        let b = node(i);
        let fb = f(b);
        if fb == T::zero() {
            roots.push(b);
        } else if fa != T::zero() && (fa < T::zero()) != (fb < T::zero()) {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > tol {
                let mid = (lo + hi) / lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < T::zero()) == (flo < T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo + hi) / lit(2.0));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Roots `r*` of `c(1+r)/(1-r)³ + (1-r)^{2α-1}(1-(1+2α)r)`, bisected down
/// to adjacent floats; the circle of Euclidean radius `√r*` is a geodesic
/// of `c/(1-|z|²)² + (1-|z|²)^{2α}`.
pub fn geodesic_circle_radii<T: Real>(c: T, alpha: T) -> Vec<T> {
    let profile = WeightSpec::example7(c, alpha).radial_profile().expect("radial family");
    circle_radii_of(&profile, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(re: f64, im: f64) -> DiskPoint<f64> {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(WeightSpec::flat(1.0).value(p(0.3, 0.7)).unwrap(), 1.0);
        assert_eq!(WeightSpec::poincare_scaled(4.0).value(p(0.0, 0.0)).unwrap(), 4.0);
        let v = WeightSpec::example7(0.01, 1.0).value(p(0.0, 0.0)).unwrap();
        assert!((v - 1.01).abs() < 1e-15);
    }

    #[test]
    fn singular_family_rejects_boundary() {
        assert!(WeightSpec::poincare_scaled(4.0).value(p(1.0, 0.0)).is_err());
        assert_eq!(WeightSpec::scaled_power(2.0, 1.0).value(p(0.0, 1.0)).unwrap(), 0.0);
        let inner = DiskPoint { re: 0.0, im: 0.5 };
        let w = WeightSpec::scaled_power(-2.0, 1.0);
        assert!(matches!(w.value(inner), Err(LabError::InvalidWeight(_))));
    }

    #[test]
    fn curvature_examples() {
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.2), (-0.7, 0.6)] {
            let k = WeightSpec::poincare_scaled(4.0).curvature(p(x, y)).unwrap();
            assert!((k + 1.0).abs() < 1e-12);
            let k = WeightSpec::poincare_scaled(2.0).curvature(p(x, y)).unwrap();
            assert!((k + 2.0).abs() < 1e-12);
            assert_eq!(WeightSpec::flat(3.0).curvature(p(x, y)).unwrap(), 0.0);
        }
    }

    #[test]
    fn hyperbolicity_examples() {
        let m = WeightSpec::flat(1.0).hyperbolicity_margin(0.5, p(0.0, 0.0)).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        for &a in &[0.0, 0.5, 1.3] {
            let m = WeightSpec::alpha_power(a)
                .hyperbolicity_margin(a, p(0.4, -0.3))
                .unwrap();
            assert!(m.abs() < 1e-12);
        }
    }

    #[test]
    fn circle_radii_roots() {
        let roots = geodesic_circle_radii(0.01, 1.0);
        assert_eq!(roots.len(), 2);
        assert!(roots[0] > 0.35 && roots[0] < 0.45);
        assert!(roots[1] > 0.5 && roots[1] < 0.7);
        assert!(geodesic_circle_radii(1.0, 1.0).is_empty());
        let flat = WeightSpec::flat(1.0).radial_profile().unwrap();
        assert!(circle_radii_of(&flat, 1e-10).is_empty());
    }

    #[test]
    fn pullback_examples() {
        let w = mobius_pullback(&WeightSpec::flat(1.0), p(0.5, 0.0)).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.4), (-0.8, 0.1)] {
            let z = Complex::new(x, y);
            let expect = (0.75 / (Complex::new(1.0f64, 0.0) - z * 0.5).norm_sqr()).powi(2);
            assert!((w.value(p(x, y)).unwrap() - expect).abs() < 1e-13);
        }
        let flat = mobius_pullback(&WeightSpec::flat(2.0), p(0.0, 0.0)).unwrap();
        assert_eq!(flat, WeightSpec::flat(2.0));
    }

    #[test]
    fn table_reproduces_smooth_weight() {
        let t = TableWeight::from_fn(201, 201, |x: f64, y| 2.0 - x * x - y * y).unwrap();
        let w = WeightSpec::table(t);
        let z = p(0.3, -0.2);
        assert!((w.value(z).unwrap() - (2.0 - 0.13)).abs() < 1e-8);
        let d = w.dz(z).unwrap();
        assert!((d - Complex::new(-0.3, -0.2)).norm() < 1e-6);
        let s: f64 = 0.13;
        let exact = -2.0 / (2.0 - s).powi(2);
        assert!((w.lap_log(z).unwrap() - exact).abs() < 1e-4);
    }

    #[test]
    fn table_rejects_nonpositive() {
        let err = TableWeight::new(4, 4, vec![1.0; 15].into_iter().chain([0.0]).collect());
        assert!(matches!(err, Err(LabError::InvalidWeight(_))));
    }

    #[test]
    fn table_csv_parsing() {
        let mut text = String::from("4,4\n");
        for j in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|i| {
                    if (i + j) % 5 == 0 {
                        "NaN".to_string()
                    } else {
                        "1.5".to_string()
                    }
                })
                .collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let t = TableWeight::<f64>::from_csv_reader(text.as_bytes()).unwrap();
        assert!((t.interpolate(0.0, 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(TableWeight::<f64>::from_csv_reader("3,3\n1,1,1".as_bytes()).is_err());
    }
}
