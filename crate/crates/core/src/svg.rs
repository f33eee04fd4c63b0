//! Standalone SVG figures: polylines over the unit disk or over a plain
//! `(x, y)` plot box. Output is deterministic for identical input.

use std::fmt::Write as _;

use crate::expmap::ExpMapChart;
use crate::obstacle::FlowSnapshot;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Maps `[-1, 1]²` to the canvas with `y` pointing up.
fn disk_xy(p: [f64; 2]) -> (f64, f64) {
    let s = (SIZE - 2.0 * MARGIN) / 2.0;
    (MARGIN + (p[0] + 1.0) * s, MARGIN + (1.0 - p[1]) * s)
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn polyline(out: &mut String, pts: impl IntoIterator<Item = (f64, f64)>, closed: bool, stroke: &str, width: f64) {
    let mut coords = String::new();
    for (x, y) in pts {
        let _ = write!(coords, "{x:.3},{y:.3} ");
    }
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = writeln!(
        out,
        r#"<{tag} points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
        coords.trim_end()
    );
}

fn disk_frame(out: &mut String) {
    let (cx, cy) = disk_xy([0.0, 0.0]);
    let r = (SIZE - 2.0 * MARGIN) / 2.0;
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="none" stroke="#444" stroke-width="1.5"/>"##
    );
    let (x0, _) = disk_xy([-1.0, 0.0]);
    let (x1, _) = disk_xy([1.0, 0.0]);
    let (_, y0) = disk_xy([0.0, 1.0]);
    let (_, y1) = disk_xy([0.0, -1.0]);
    let _ = writeln!(
        out,
        r##"<line x1="{x0:.3}" y1="{cy:.3}" x2="{x1:.3}" y2="{cy:.3}" stroke="#bbb" stroke-width="0.8"/>"##
    );
    let _ = writeln!(
        out,
        r##"<line x1="{cx:.3}" y1="{y0:.3}" x2="{cx:.3}" y2="{y1:.3}" stroke="#bbb" stroke-width="0.8"/>"##
    );
}

fn caption(out: &mut String, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.1}" font-family="monospace" font-size="13">{}</text>"#,
        MARGIN * 0.6,
        escape(text)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Nested boundaries of a flow run, one color per snapshot.
pub fn snapshots_svg(snaps: &[FlowSnapshot<f64>], title: &str) -> String {
    let mut out = String::new();
    header(&mut out);
    disk_frame(&mut out);
    for (k, s) in snaps.iter().enumerate() {
        for lp in &s.loops {
            polyline(&mut out, lp.iter().map(|&p| disk_xy(p)), true, color(k), 1.2);
        }
    }
    caption(&mut out, title);
    out.push_str("</svg>\n");
    out
}

/// Image rings and rays of an exponential chart in disk coordinates.
pub fn chart_svg(chart: &ExpMapChart<f64>, title: &str) -> String {
    let pts = chart.points();
    let mut out = String::new();
    header(&mut out);
    disk_frame(&mut out);
    for ring in &pts {
        polyline(
            &mut out,
            ring.iter().map(|z| disk_xy([z.re, z.im])),
            true,
            color(0),
            1.0,
        );
    }
    for j in 0..chart.angles.len() {
        let ray = std::iter::once(chart.z0).chain(pts.iter().map(|ring| ring[j]));
        polyline(&mut out, ray.map(|z| disk_xy([z.re, z.im])), false, color(1), 0.8);
    }
    caption(&mut out, title);
    out.push_str("</svg>\n");
    out
}

/// Paths in the disk, e.g. geodesics; `closed` joins last to first.
pub fn disk_paths_svg(paths: &[Vec<[f64; 2]>], closed: bool, title: &str) -> String {
    let mut out = String::new();
    header(&mut out);
    disk_frame(&mut out);
    for (k, p) in paths.iter().enumerate() {
        polyline(&mut out, p.iter().map(|&q| disk_xy(q)), closed, color(k), 1.2);
    }
    caption(&mut out, title);
    out.push_str("</svg>\n");
    out
}

/// Line plot of several series in a box fitted to their finite range.
pub fn curves_svg(series: &[(String, Vec<(f64, f64)>)], x_label: &str, y_label: &str) -> String {
    let finite = || {
        series
            .iter()
            .flat_map(|(_, s)| s.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        (x0, x1) = (x0.min(0.0), x0.max(0.0) + 1.0);
    }
    if !(y0 < y1) {
        (y0, y1) = (y0.min(0.0), y0.max(0.0) + 1.0);
    }
    let span = SIZE - 2.0 * MARGIN;
    let map = |x: f64, y: f64| {
        (
            MARGIN + (x - x0) / (x1 - x0) * span,
            SIZE - MARGIN - (y - y0) / (y1 - y0) * span,
        )
    };
    let mut out = String::new();
    header(&mut out);
    let (ax, ay) = map(x0, y0);
    let (bx, by) = map(x1, y1);
    let _ = writeln!(
        out,
        r##"<rect x="{ax:.3}" y="{by:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#444"/>"##,
        bx - ax,
        ay - by
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12">{} [{x0:.4}, {x1:.4}]</text>"#,
        MARGIN,
        SIZE - MARGIN * 0.3,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="12">{} [{y0:.4}, {y1:.4}]</text>"#,
        MARGIN,
        MARGIN * 0.6,
        escape(y_label)
    );
    for (k, (name, s)) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| map(x, y))
            .collect();
        polyline(&mut out, pts, false, color(k), 1.2);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="monospace" font-size="11" fill="{}">{}</text>"#,
            SIZE - MARGIN - 160.0,
            MARGIN + 14.0 * (k as f64 + 1.0),
            color(k),
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_paths_are_deterministic() {
        let p = vec![vec![[0.0, 0.0], [0.5, 0.5], [0.5, -0.25]]];
        let a = disk_paths_svg(&p, false, "a & b");
        assert_eq!(a, disk_paths_svg(&p, false, "a & b"));
        assert!(a.starts_with("<svg"));
        assert!(a.contains("a &amp; b"));
        assert!(a.contains("<polyline points=\"300.000,300.000 "));
    }

    #[test]
    fn curves_handle_flat_series() {
        let s = vec![("c".to_string(), vec![(0.0, 1.0), (1.0, 1.0), (2.0, f64::NAN)])];
        let text = curves_svg(&s, "x", "y");
        assert!(text.contains("<polyline"));
        assert!(!text.contains("NaN"));
    }
}
