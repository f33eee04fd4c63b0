//! Marching squares on a boolean node field.
//!
//! Loops are oriented with the inside on the left, so outer boundaries run
//! counterclockwise and holes clockwise. Diagonal saddles keep the inside
//! corners apart: the traced inside region is 4-connected.

use crate::num::{lit, Real};

/// A closed polyline; the last vertex connects back to the first.
pub type Loop<T> = Vec<[T; 2]>;

/// Traces every boundary loop of `inside` on the `n×n` grid over `[-1,1]²`.
///
/// `crossing(a, b)` returns the fraction in `[0, 1]` along the grid edge
/// from the inside node `a` to the outside node `b` (row-major indices)
/// where the boundary crosses it.
pub fn trace<T: Real>(n: usize, inside: &[bool], mut crossing: impl FnMut(usize, usize) -> T) -> Vec<Loop<T>> {
    let h = lit::<T>(2.0 / (n - 1) as f64);
    let node_xy = |k: usize| -> [T; 2] {
        [
            lit::<T>(-1.0) + h * lit((k % n) as f64),
            lit::<T>(-1.0) + h * lit((k / n) as f64),
        ]
    };
    let none = usize::MAX;
    let mut next = vec![none; 2 * n * n];
    let mut point: Vec<Option<[T; 2]>> = vec![None; 2 * n * n];

    let mut edge_point = |id: usize, a: usize, b: usize, point: &mut Vec<Option<[T; 2]>>| {
        if point[id].is_none() {
            let (p, q) = if inside[a] { (a, b) } else { (b, a) };
            let f = crossing(p, q).max(T::zero()).min(T::one());
            let (xp, xq) = (node_xy(p), node_xy(q));
            point[id] = Some([xp[0] + f * (xq[0] - xp[0]), xp[1] + f * (xq[1] - xp[1])]);
        }
    };

    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let c = [j * n + i, j * n + i + 1, (j + 1) * n + i + 1, (j + 1) * n + i];
            let fl = [inside[c[0]], inside[c[1]], inside[c[2]], inside[c[3]]];
            let count = fl.iter().filter(|&&b| b).count();
            if count == 0 || count == 4 {
                continue;
            }
            // edge k joins corner k to corner k+1
            let edges = [
                2 * (j * n + i),
                2 * (j * n + i + 1) + 1,
                2 * ((j + 1) * n + i),
                2 * (j * n + i) + 1,
            ];
            for k in 0..4 {
                let k1 = (k + 1) % 4;
                if fl[k] != fl[k1] {
                    edge_point(edges[k], c[k], c[k1], &mut point);
                }
            }
            for b in 0..4 {
                // b ends a run of inside corners
                if !fl[b] || fl[(b + 1) % 4] {
                    continue;
                }
                let mut a = b;
                while fl[(a + 3) % 4] && (a + 3) % 4 != b {
                    a = (a + 3) % 4;
                }
                let exit = edges[b];
                let entry = edges[(a + 3) % 4];
                next[exit] = entry;
            }
        }
    }

    let mut loops = Vec::new();
    let mut seen = vec![false; 2 * n * n];
    for start in 0..next.len() {
        if next[start] == none || seen[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            if let Some(p) = point[e] {
                lp.push(p);
            }
            e = next[e];
            if e == none {
                break;
            }
        }
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }
    loops
}

/// Drops vertices closer than `tol` to their predecessor.
pub fn dedupe<T: Real>(lp: &Loop<T>, tol: T) -> Loop<T> {
    let mut out: Loop<T> = Vec::with_capacity(lp.len());
    for &p in lp {
        if let Some(q) = out.last() {
            if dist(*q, p) < tol {
                continue;
            }
        }
        out.push(p);
    }
    while out.len() > 1 && dist(out[0], *out.last().unwrap()) < tol {
        out.pop();
    }
    out
}

#[inline]
pub fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Shoelace area, positive for counterclockwise loops.
pub fn signed_area<T: Real>(lp: &Loop<T>) -> T {
    let mut a = T::zero();
    for k in 0..lp.len() {
        let (p, q) = (lp[k], lp[(k + 1) % lp.len()]);
        a = a + p[0] * q[1] - q[0] * p[1];
    }
    a / lit(2.0)
}

/// Largest exterior turning angle at a vertex, in degrees.
pub fn max_turning_angle<T: Real>(lp: &Loop<T>) -> T {
    let m = lp.len();
    let mut worst = T::zero();
    for k in 0..m {
        let (a, b, c) = (lp[(k + m - 1) % m], lp[k], lp[(k + 1) % m]);
        let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
        let (vx, vy) = (c[0] - b[0], c[1] - b[1]);
        let ang = (ux * vy - uy * vx).atan2(ux * vx + uy * vy).abs();
        worst = worst.max(ang.to_degrees());
    }
    worst
}

/// Distance from `p` to the closed polyline.
pub fn distance_to_loop<T: Real>(lp: &Loop<T>, p: [T; 2]) -> T {
    let m = lp.len();
    let mut best = T::infinity();
    for k in 0..m {
        let (a, b) = (lp[k], lp[(k + 1) % m]);
        best = best.min(distance_to_segment(a, b, p));
    }
    best
}

pub fn distance_to_segment<T: Real>(a: [T; 2], b: [T; 2], p: [T; 2]) -> T {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > T::zero() {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2)
            .max(T::zero())
            .min(T::one())
    } else {
        T::zero()
    };
    dist([a[0] + t * dx, a[1] + t * dy], p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: usize, f: impl Fn(f64, f64) -> bool) -> Vec<bool> {
        let h = 2.0 / (n - 1) as f64;
        (0..n * n)
            .map(|k| f(-1.0 + h * (k % n) as f64, -1.0 + h * (k / n) as f64))
            .collect()
    }

    #[test]
    fn disk_gives_one_ccw_loop() {
        let n = 41;
        let ins = field(n, |x, y| x * x + y * y < 0.25);
        let loops = trace::<f64>(n, &ins, |_, _| 0.5);
        assert_eq!(loops.len(), 1);
        assert!(signed_area(&loops[0]) > 0.0);
        let a = signed_area(&loops[0]);
        assert!((a - std::f64::consts::PI * 0.25).abs() < 0.05);
    }

    #[test]
    fn annulus_gives_outer_and_hole() {
        let n = 41;
        let ins = field(n, |x, y| {
            let s = x * x + y * y;
            s < 0.5 && s > 0.1
        });
        let loops = trace::<f64>(n, &ins, |_, _| 0.5);
        assert_eq!(loops.len(), 2);
        let mut areas: Vec<f64> = loops.iter().map(signed_area).collect();
        areas.sort_by(f64::total_cmp);
        assert!(areas[0] < 0.0 && areas[1] > 0.0);
    }

    #[test]
    fn saddle_keeps_corners_apart() {
        let n = 5;
        let mut ins = vec![false; n * n];
        ins[n + 1] = true;
        ins[2 * n + 2] = true;
        let loops = trace::<f64>(n, &ins, |_, _| 0.5);
        assert_eq!(loops.len(), 2);
    }

    #[test]
    fn turning_angle_of_square() {
        let sq: Loop<f64> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((max_turning_angle(&sq) - 90.0).abs() < 1e-12);
        assert!((distance_to_loop(&sq, [0.5, 0.2]) - 0.2).abs() < 1e-15);
        let d = dedupe(&vec![[0.0, 0.0], [1e-9, 0.0], [1.0, 0.0], [1.0, 1.0]], 1e-6);
        assert_eq!(d.len(), 3);
    }
}
