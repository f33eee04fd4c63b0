//! One- and two-dimensional quadrature rules with the normalized measures
//! used throughout: `dΣ = dx dy / π` on the disk and `dσ = |dz| / 2π` on the
//! unit circle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::num::{lit, Complex, Real};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(deg: usize) -> Self {
        assert!(deg >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); deg];
        let mut weights = vec![T::zero(); deg];
        let n = deg as f64;
        // Newton on P_n in f64, then converted; symmetric pairs filled together.
        for i in 0..deg.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(deg, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(deg, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = lit(-x);
            nodes[deg - 1 - i] = lit(x);
            weights[i] = lit(w);
            weights[deg - 1 - i] = lit(w);
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / lit(2.0);
        let mid = (a + b) / lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<T>()
            * half
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> Vec<(T, T)> {
        let half = (b - a) / lit(2.0);
        let mid = (a + b) / lit(2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, w * half))
            .collect()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) / lit(2.0);
    let mid = (a + b) / lit(2.0);
    let fc = f(mid);
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = half * lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * lit(WG[j / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Nodes never touch the endpoints, so integrable endpoint singularities
/// (logarithmic, inverse square root) are handled by repeated bisection.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, opts: AdaptiveOptions) -> Integral<T> {
    let (v, e) = kronrod(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    let abs_tol: T = lit(opts.abs_tol);
    let rel_tol: T = lit(opts.rel_tol);
    let floor = T::epsilon() * lit(50.0);
    while heap.len() < opts.max_intervals {
        let tol = abs_tol.max(rel_tol * total.abs()).max(floor * total.abs());
        if err <= tol {
            break;
        }
        let seg = heap.pop().expect("non-empty heap");
        let mid = (seg.a + seg.b) / lit(2.0);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = kronrod(&mut f, seg.a, mid);
        let (v2, e2) = kronrod(&mut f, mid, seg.b);
        total = total - seg.value + v1 + v2;
        err = err - seg.error + e1 + e2;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let intervals = heap.len();
    let (value, error) = heap
        .into_iter()
        .fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.error));
    Integral {
        value,
        error,
        intervals,
    }
}

/// Mean of `f` over the unit circle with the trapezoid rule on `nodes`
/// equispaced angles, i.e. `∫_𝕋 f dσ`.
pub fn circle_mean<T: Real, F: FnMut(Complex<T>) -> T>(nodes: usize, mut f: F) -> T {
    let step = T::TAU() / lit(nodes as f64);
    let mut acc = T::zero();
    for k in 0..nodes {
        let theta = step * lit(k as f64);
        acc = acc + f(Complex::from_polar(T::one(), theta));
    }
    acc / lit(nodes as f64)
}

/// Polar tensor rule for `∫_𝔻 f dΣ`: Gauss–Legendre in the radius,
/// trapezoid in the angle.
#[derive(Debug, Clone)]
pub struct DiskRule<T> {
    radial: Vec<(T, T)>,
    angular: usize,
}

impl<T: Real> DiskRule<T> {
    pub fn new(radial_nodes: usize, angular_nodes: usize) -> Self {
        let gl = GaussLegendre::new(radial_nodes);
        Self {
            radial: gl.mapped(T::zero(), T::one()),
            angular: angular_nodes,
        }
    }

    pub fn integrate<F: FnMut(Complex<T>) -> T>(&self, mut f: F) -> T {
        let step = T::TAU() / lit(self.angular as f64);
        let mut acc = T::zero();
        for &(rho, w) in &self.radial {
            let mut ring = T::zero();
            for k in 0..self.angular {
                let theta = step * lit(k as f64);
                ring = ring + f(Complex::from_polar(rho, theta));
            }
            acc = acc + w * lit::<T>(2.0) * rho * ring / lit(self.angular as f64);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::<f64>::new(8);
        // degree 15 is the limit for eight nodes
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let w: f64 = gl.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_single_precision() {
        let gl = GaussLegendre::<f32>::new(6);
        let v = gl.integrate(0.0, 1.0, |x| x * x);
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn adaptive_handles_log_endpoint() {
        // ∫_0^1 -ln(1-s) ds = 1
        let r = adaptive(|s: f64| -(1.0 - s).ln(), 0.0, 1.0, AdaptiveOptions::default());
        assert!((r.value - 1.0).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let r = adaptive(|x: f64| (1.0 - x * x).sqrt(), 0.0, 1.0, AdaptiveOptions::default());
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    }

    #[test]
    fn circle_mean_of_harmonic_is_center_value() {
        let m = circle_mean(64, |z: Complex<f64>| 3.0 + (z * z).re);
        assert!((m - 3.0).abs() < 1e-14);
    }

    #[test]
    fn disk_rule_normalized_area() {
        let rule = DiskRule::<f64>::new(16, 32);
        assert!((rule.integrate(|_| 1.0) - 1.0).abs() < 1e-14);
        // ∫|z|^2 dΣ = 1/2, ∫|z|^4 dΣ = 1/3
        assert!((rule.integrate(|z| z.norm_sqr()) - 0.5).abs() < 1e-14);
        assert!((rule.integrate(|z| z.norm_sqr().powi(2)) - 1.0 / 3.0).abs() < 1e-14);
    }
}
