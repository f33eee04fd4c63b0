//! Closed-form kernels of the unit disk: the Green function `G` of the
//! normalized Laplacian `Δ = ∂²/∂z∂z̄`, the Green function `Γ₁` of the
//! weighted biharmonic operator `Δ (1-|z|²)⁻¹ Δ`, the harmonic compensator
//! `H₁`, and the standard weighted Bergman kernels `K_α`.
//!
//! Conventions: `dΣ = dx dy / π`, `dσ = |dz| / 2π`, normal derivatives on
//! the circle point inward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::num::{lit, to_f64, Complex, Real};
use crate::quadrature::circle_mean;
use crate::report::{CheckRow, VerificationReport};

/// Slack allowed on `|z| <= 1` before a point is rejected.
pub const EPS_BOUNDARY: f64 = 1e-12;

/// Below this separation `|z - ζ|²·G(z,ζ)` is replaced by its limit 0.
pub const DIAGONAL_CUTOFF: f64 = 1e-8;

/// Point of the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> DiskPoint<T> {
    pub fn new(re: T, im: T) -> Result<Self> {
        let p = Self { re, im };
        if !(p.norm_sqr() <= T::one() + lit(EPS_BOUNDARY)) {
            return Err(LabError::Domain(format!(
                "point ({re}, {im}) lies outside the closed unit disk"
            )));
        }
        Ok(p)
    }

    pub fn from_complex(z: Complex<T>) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn from_polar(r: T, theta: T) -> Result<Self> {
        Self::from_complex(Complex::from_polar(r, theta))
    }

    pub fn origin() -> Self {
        Self {
            re: T::zero(),
            im: T::zero(),
        }
    }

    #[inline]
    pub fn z(&self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    #[inline]
    pub fn norm_sqr(&self) -> T {
        self.re * self.re + self.im * self.im
    }

    /// `| |z|² - 1 | <= EPS_BOUNDARY`.
    pub fn on_boundary(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= lit(EPS_BOUNDARY)
    }

    pub fn is_interior(&self) -> bool {
        self.norm_sqr() < T::one() - lit(EPS_BOUNDARY)
    }
}

fn require_interior<T: Real>(p: &DiskPoint<T>, what: &str) -> Result<()> {
    if p.is_interior() {
        Ok(())
    } else {
        Err(LabError::Domain(format!(
            "{what} = ({}, {}) must lie in the open disk",
            p.re, p.im
        )))
    }
}

/// `G(z,ζ) = log |(z-ζ)/(1-ζ̄z)|²`, the Dirichlet Green function of `Δ`.
pub fn green<T: Real>(z: DiskPoint<T>, zeta: DiskPoint<T>) -> Result<T> {
    require_interior(&zeta, "ζ")?;
    if z == zeta {
        return Err(LabError::SingularInput("green: z = ζ".into()));
    }
    if z.on_boundary() {
        return Ok(T::zero());
    }
    Ok(green_unchecked(z.z(), zeta.z()))
}

#[inline]
pub(crate) fn green_unchecked<T: Real>(z: Complex<T>, zeta: Complex<T>) -> T {
    let den = (Complex::new(T::one(), T::zero()) - zeta.conj() * z).norm_sqr();
    // 1 - |(z-ζ)/(1-ζ̄z)|² = (1-|z|²)(1-|ζ|²)/|1-ζ̄z|²
    let x = (T::one() - z.norm_sqr()) * (T::one() - zeta.norm_sqr()) / den;
    if x < lit(0.5) {
        (-x).ln_1p()
    } else {
        ((z - zeta).norm_sqr() / den).ln()
    }
}

/// Weighted biharmonic Green function `Γ₁(z,ζ)`.
pub fn gamma1<T: Real>(z: DiskPoint<T>, zeta: DiskPoint<T>) -> Result<T> {
    require_interior(&zeta, "ζ")?;
    if z.on_boundary() {
        return Ok(T::zero());
    }
    let (zc, wc) = (z.z(), zeta.z());
    let a = z.norm_sqr();
    let b = zeta.norm_sqr();
    let one = T::one();
    let d2 = (zc - wc).norm_sqr();
    let singular_part = if d2.sqrt() < lit(DIAGONAL_CUTOFF) {
        T::zero()
    } else {
        let q = (zc * zc - wc * wc).norm_sqr();
        (d2 - q / lit(4.0)) * green_unchecked(zc, wc)
    };
    let cross = zc * wc.conj();
    let den = (Complex::new(one, T::zero()) - cross).norm_sqr();
    let bracket = lit::<T>(7.0)
        - a
        - b
        - a * b
        - lit::<T>(4.0) * cross.re
        - lit::<T>(2.0) * (one - a) * (one - b) * (one - a * b) / den;
    Ok(singular_part + (one - a) * (one - b) * bracket / lit(8.0))
}

/// Harmonic compensator `H₁(z,ζ)` on the closed bidisk off the boundary
/// diagonal.
pub fn compensator<T: Real>(z: DiskPoint<T>, zeta: DiskPoint<T>) -> Result<T> {
    let one = Complex::new(T::one(), T::zero());
    let cross = z.z() * zeta.z().conj();
    let den = (one - cross).norm_sqr();
    if den == T::zero() {
        return Err(LabError::SingularInput(
            "compensator: coincident boundary points".into(),
        ));
    }
    let b = zeta.norm_sqr();
    let ab = z.norm_sqr() * b;
    let t1 = (lit::<T>(3.0) - b) * (T::one() - ab) / (lit::<T>(2.0) * den);
    let t2 = (T::one() - b) * (cross / ((one - cross) * (one - cross))).re;
    Ok((T::one() - b) * (t1 + t2))
}

/// `Δ_z Γ₁(z,ζ) = (1-|z|²)(G(z,ζ) + H₁(z,ζ))`.
pub fn lap_gamma1<T: Real>(z: DiskPoint<T>, zeta: DiskPoint<T>) -> Result<T> {
    require_interior(&zeta, "ζ")?;
    if z == zeta {
        return Err(LabError::SingularInput("lap_gamma1: z = ζ".into()));
    }
    if z.on_boundary() {
        return Ok(T::zero());
    }
    let g = green_unchecked(z.z(), zeta.z());
    Ok((T::one() - z.norm_sqr()) * (g + compensator(z, zeta)?))
}

/// Bergman kernel `K_α(z,ζ) = (1 - zζ̄)^{-(2+α)}` of the space with weight
/// `(1+α)(1-|z|²)^α dΣ`, principal branch.
pub fn bergman<T: Real>(alpha: T, z: DiskPoint<T>, zeta: DiskPoint<T>) -> Result<Complex<T>> {
    if alpha < T::zero() {
        return Err(LabError::Domain(format!("bergman: α = {alpha} < 0")));
    }
    require_interior(&z, "z")?;
    require_interior(&zeta, "ζ")?;
    let base = Complex::new(T::one(), T::zero()) - z.z() * zeta.z().conj();
    Ok(base.powf(-(lit::<T>(2.0) + alpha)))
}

/// `3/2 - 2|ζ|² + ½|ζ|⁴`, the value of `H₁(0,ζ)` and of `∫_𝕋 H₁(·,ζ) dσ`.
pub fn compensator_at_origin<T: Real>(zeta: DiskPoint<T>) -> T {
    let b = zeta.norm_sqr();
    lit::<T>(1.5) - lit::<T>(2.0) * b + b * b / lit(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Green,
    Gamma1,
    Compensator,
    LapGamma1,
    Bergman,
}

/// A kernel evaluation tagged with the kernel it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue<T> {
    pub value: Complex<T>,
    pub kind: KernelKind,
}

/// Dispatches to the kernel named by `kind`; `alpha` is only read by
/// [`KernelKind::Bergman`].
pub fn evaluate<T: Real>(kind: KernelKind, z: DiskPoint<T>, zeta: DiskPoint<T>, alpha: T) -> Result<KernelValue<T>> {
    let real = |v: T| Complex::new(v, T::zero());
    let value = match kind {
        KernelKind::Green => real(green(z, zeta)?),
        KernelKind::Gamma1 => real(gamma1(z, zeta)?),
        KernelKind::Compensator => real(compensator(z, zeta)?),
        KernelKind::LapGamma1 => real(lap_gamma1(z, zeta)?),
        KernelKind::Bergman => bergman(alpha, z, zeta)?,
    };
    Ok(KernelValue { value, kind })
}

/// Which parts of the kernel property suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteCheck {
    All,
    Positivity,
    Identity,
    Anchor,
    Representation,
}

impl std::str::FromStr for SuiteCheck {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "positivity" => Ok(Self::Positivity),
            "identity" => Ok(Self::Identity),
            "anchor" => Ok(Self::Anchor),
            "representation" | "repr" => Ok(Self::Representation),
            other => Err(LabError::Domain(format!("unknown kernel check '{other}'"))),
        }
    }
}

fn random_disk_point(rng: &mut ChaCha8Rng, r_max: f64) -> DiskPoint<f64> {
    let r = r_max * rng.gen::<f64>().sqrt();
    let th = std::f64::consts::TAU * rng.gen::<f64>();
    DiskPoint {
        re: r * th.cos(),
        im: r * th.sin(),
    }
}

/// Five-point Laplacian (normalized, `¼∇²`) of `Γ₁(·,ζ)` at `z`.
pub fn fd_laplacian_gamma1(z: DiskPoint<f64>, zeta: DiskPoint<f64>, step: f64) -> Result<f64> {
    let at = |dx: f64, dy: f64| {
        gamma1(
            DiskPoint {
                re: z.re + dx,
                im: z.im + dy,
            },
            zeta,
        )
    };
    let c = at(0.0, 0.0)?;
    let sum = at(step, 0.0)? + at(-step, 0.0)? + at(0.0, step)? + at(0.0, -step)?;
    Ok((sum - 4.0 * c) / (4.0 * step * step))
}

/// Seeded property suite over the closed-form kernels.
///
/// Sampling regions: positivity on pairs drawn uniformly from the disk of
/// radius `1 - 10⁻⁶`; the finite-difference identity on `|z|, |ζ| <= 0.9`
/// with `|z - ζ| >= 0.1` and `|Δ_zΓ₁| >= 10⁻²` so the relative error is
/// meaningful; representation quadrature on `|ζ| <= 0.9`.
pub fn property_suite(check: SuiteCheck, samples: usize, seed: u64) -> VerificationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = VerificationReport::new();
    let run = |c: SuiteCheck| check == SuiteCheck::All || check == c;

    if run(SuiteCheck::Positivity) {
        let mut min_g1 = f64::INFINITY;
        let mut min_h1 = f64::INFINITY;
        for _ in 0..samples {
            let z = random_disk_point(&mut rng, 1.0 - 1e-6);
            let w = random_disk_point(&mut rng, 1.0 - 1e-6);
            if let Ok(v) = gamma1(z, w) {
                min_g1 = min_g1.min(v);
            }
            if let Ok(v) = compensator(z, w) {
                min_h1 = min_h1.min(v);
            }
        }
        rep.push(CheckRow::exceeds("gamma1 > 0 (min over samples)", min_g1, 0.0));
        rep.push(CheckRow::exceeds("compensator > 0 (min over samples)", min_h1, 0.0));
    }

    if run(SuiteCheck::Identity) {
        let mut worst = 0.0f64;
        let mut taken = 0;
        while taken < 1000 {
            let z = random_disk_point(&mut rng, 0.9);
            let w = random_disk_point(&mut rng, 0.9);
            if (z.z() - w.z()).norm() < 0.1 {
                continue;
            }
            let exact = lap_gamma1(z, w).expect("interior pair");
            if exact.abs() < 1e-2 {
                continue;
            }
            let fd = fd_laplacian_gamma1(z, w, 2.5e-4).expect("interior pair");
            worst = worst.max((fd - exact).abs() / exact.abs());
            taken += 1;
        }
        rep.push(CheckRow::within("lap_gamma1 vs 5-point Laplacian (rel)", worst, 1e-4));
    }

    if run(SuiteCheck::Anchor) {
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let w = random_disk_point(&mut rng, 1.0 - 1e-6);
            if w.norm_sqr() == 0.0 {
                continue;
            }
            let v = lap_gamma1(DiskPoint::origin(), w).expect("interior");
            let b = w.norm_sqr();
            let expect = b.ln() + compensator_at_origin(w);
            worst = worst.max((v - expect).abs());
        }
        rep.push(CheckRow::within("lap_gamma1(0,ζ) anchor", worst, 1e-12));
    }

    if run(SuiteCheck::Representation) {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let w = random_disk_point(&mut rng, 0.9);
            let mean = circle_mean(2048, |z| {
                compensator(DiskPoint { re: z.re, im: z.im }, w).expect("off diagonal")
            });
            worst = worst.max((mean - compensator_at_origin(w)).abs());
        }
        rep.push(CheckRow::within("boundary mean of compensator", worst, 1e-6));
    }
    rep
}

/// Converts the report values of a generic evaluation for display.
pub fn value_f64<T: Real>(v: KernelValue<T>) -> (f64, f64) {
    (to_f64(v.value.re), to_f64(v.value.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(re: f64, im: f64) -> DiskPoint<f64> {
        DiskPoint::new(re, im).unwrap()
    }

    #[test]
    fn green_examples() {
        let v = green(p(0.0, 0.0), p(0.5, 0.0)).unwrap();
        assert!((v - 0.25f64.ln()).abs() < 1e-15);
        let th = std::f64::consts::FRAC_PI_3;
        assert_eq!(green(p(th.cos(), th.sin()), p(0.0, 0.3)).unwrap(), 0.0);
        let a = green(p(0.2, 0.0), p(0.0, 0.5)).unwrap();
        let b = green(p(0.0, 0.5), p(0.2, 0.0)).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(a < 0.0);
    }

    #[test]
    fn green_errors() {
        assert!(matches!(
            green(p(0.1, 0.1), p(0.1, 0.1)),
            Err(LabError::SingularInput(_))
        ));
        assert!(matches!(green(p(0.1, 0.1), p(1.0, 0.0)), Err(LabError::Domain(_))));
        assert!(DiskPoint::new(1.1, 0.0).is_err());
    }

    #[test]
    fn gamma1_at_origin_is_five_eighths() {
        let v = gamma1(p(0.0, 0.0), p(0.0, 0.0)).unwrap();
        assert!((v - 0.625).abs() < 1e-15);
    }

    #[test]
    fn gamma1_vanishes_on_circle() {
        for k in 0..12 {
            let th = k as f64 * 0.5;
            let z = p(th.cos(), th.sin());
            assert_eq!(gamma1(z, p(0.3, -0.4)).unwrap(), 0.0);
            assert_eq!(lap_gamma1(z, p(-0.7, 0.1)).unwrap(), 0.0);
        }
    }

    #[test]
    fn gamma1_single_precision_agrees() {
        let a = gamma1(
            DiskPoint::<f32>::new(0.3, 0.2).unwrap(),
            DiskPoint::new(-0.1, 0.4).unwrap(),
        )
        .unwrap();
        let b = gamma1(p(0.3, 0.2), p(-0.1, 0.4)).unwrap();
        assert!((a as f64 - b).abs() < 1e-5);
    }

    #[test]
    fn compensator_at_origin_formula() {
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.0), (0.3, -0.6), (0.0, 0.99)] {
            let w = p(x, y);
            let v = compensator(p(0.0, 0.0), w).unwrap();
            assert!((v - compensator_at_origin(w)).abs() < 1e-14);
        }
        assert!((compensator(p(0.0, 0.0), p(0.0, 0.0)).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn compensator_boundary_lower_bound() {
        for i in 0..40 {
            let th = i as f64 * 0.157;
            let z = p(th.cos(), th.sin());
            for &r in &[0.0, 0.2, 0.5, 0.8, 0.95] {
                let w = p(r * (1.3 * i as f64).cos(), r * (1.3 * i as f64).sin());
                let h1 = compensator(z, w).unwrap();
                let den = (Complex::new(1.0, 0.0) - z.z() * w.z().conj()).norm_sqr();
                let bound = 0.5 * (1.0 - r * r).powi(2) * (1.0 - r) * (3.0 + r) / den;
                assert!(h1 >= bound - 1e-14, "{h1} < {bound}");
            }
        }
    }

    #[test]
    fn compensator_coincident_boundary_is_singular() {
        assert!(matches!(
            compensator(p(1.0, 0.0), p(1.0, 0.0)),
            Err(LabError::SingularInput(_))
        ));
    }

    #[test]
    fn bergman_examples() {
        let k = bergman(1.5, p(0.3, 0.2), p(0.0, 0.0)).unwrap();
        assert!((k - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let r: f64 = 0.6;
        let k = bergman(0.0, p(r, 0.0), p(r, 0.0)).unwrap();
        assert!((k.re - 1.0 / (1.0 - r * r).powi(2)).abs() < 1e-12);
        let a = bergman(0.7, p(0.3, 0.2), p(-0.4, 0.5)).unwrap();
        let b = bergman(0.7, p(-0.4, 0.5), p(0.3, 0.2)).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn lap_gamma1_anchor_at_origin() {
        let w = p(0.3, 0.4);
        let v = lap_gamma1(p(0.0, 0.0), w).unwrap();
        let b: f64 = 0.25;
        assert!((v - (b.ln() + 1.5 - 2.0 * b + 0.5 * b * b)).abs() < 1e-14);
    }

    #[test]
    fn evaluate_dispatch() {
        let v = evaluate(KernelKind::Gamma1, p(0.0, 0.0), p(0.0, 0.0), 0.0).unwrap();
        assert_eq!(v.kind, KernelKind::Gamma1);
        assert!((value_f64(v).0 - 0.625).abs() < 1e-15);
    }
}
