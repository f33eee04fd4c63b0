//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns the verification report it printed.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hs_lab::expmap::{build_chart, chart_checks, refinement_errors, ChartDocument};
use hs_lab::flow::{
    boundary_density_check, hausdorff_to_circle, hypotheses, mean_value_residuals, monotonicity_check,
    reproducing_inequality, run_flow_with, verify_snapshot, w_estimate_check, TestFunction,
};
use hs_lab::geodesics::{example7_demo, geodesic_residual, shoot, EXAMPLE7_STEP};
use hs_lab::grid::SolverOptions;
use hs_lab::kernels::{property_suite, SuiteCheck};
use hs_lab::korenblum::{containment_alpha_limit, containment_check, cpa_table, f_table, korenblum_suite, write_f_csv};
use hs_lab::num::Complex;
use hs_lab::obstacle::{termination_time_on, FlowSolver, Termination, TerminationOptions};
use hs_lab::surface::WeightSpec;
use hs_lab::{svg, CheckRow, Point, VerificationReport};
use serde::Serialize;

use crate::config::RunConfig;

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn prefixed(prefix: &str, rep: VerificationReport) -> VerificationReport {
    let mut out = VerificationReport::new();
    for mut row in rep.rows {
        row.check = format!("{prefix}{}", row.check);
        out.push(row);
    }
    out
}

pub fn kernels(cfg: &RunConfig, dir: &Path, check: SuiteCheck) -> Result<VerificationReport> {
    let report = property_suite(check, cfg.kernels.samples, cfg.seed);
    #[derive(Serialize)]
    struct Doc<'a> {
        seed: u64,
        samples: usize,
        checks: &'a VerificationReport,
    }
    write(
        dir,
        "kernels.json",
        json(&Doc {
            seed: cfg.seed,
            samples: cfg.kernels.samples,
            checks: &report,
        }),
    )?;
    Ok(report)
}

const FLOW_DEFAULTS: &[&str] = &["verify", "area", "mean_value", "hausdorff", "containment", "monotone"];

pub fn flow(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let w = cfg.weight_spec()?;
    let n = cfg.n.0;
    let tol = &cfg.tolerances;
    let solver = FlowSolver::new(&w, n, SolverOptions::default())?;
    let snaps = run_flow_with(&solver, &cfg.t.0)?;
    let mut report = VerificationReport::new();
    for (k, s) in snaps.iter().enumerate() {
        write(dir, &format!("snapshot_{k:02}.json"), format!("{}\n", s.to_json()))?;
        let (t, h) = (s.t, s.h);
        let tag = format!("t={t}: ");
        if cfg.wants("verify", FLOW_DEFAULTS) {
            report.extend(prefixed(&tag, verify_snapshot(s)));
        }
        if cfg.wants("area", FLOW_DEFAULTS) {
            report.push(
                CheckRow::within(
                    format!("{tag}area_omega - t"),
                    (s.area_omega - t).abs(),
                    tol.area_ht * h * t,
                )
                .on_grid(n, h),
            );
        }
        if cfg.wants("mean_value", FLOW_DEFAULTS) {
            let worst = mean_value_residuals(s, &w, tol.mean_value_degree)?
                .into_iter()
                .fold(0.0, f64::max);
            report.push(
                CheckRow::within(format!("{tag}mean value residual"), worst, tol.mean_value_ht * h * t).on_grid(n, h),
            );
        }
        if cfg.wants("hausdorff", FLOW_DEFAULTS) {
            if let WeightSpec::Flat { c } = w {
                let d = hausdorff_to_circle(s, (t / c).sqrt());
                report
                    .push(CheckRow::within(format!("{tag}hausdorff to circle"), d, tol.hausdorff_h * h).on_grid(n, h));
            }
        }
        if cfg.wants("containment", FLOW_DEFAULTS) && w.is_radial() && cfg.alpha <= containment_alpha_limit() {
            report.extend(prefixed(&tag, containment_check(s, &w, cfg.alpha)?));
        }
    }
    if cfg.wants("monotone", FLOW_DEFAULTS) {
        report.extend(monotonicity_check(&snaps));
    }
    if cfg.wants("termination", FLOW_DEFAULTS) {
        let term = termination_time_on(&solver, &TerminationOptions::default())?;
        write(dir, "termination.json", json(&term))?;
        let row = match (w.clone(), term) {
            (WeightSpec::Flat { c }, Termination::Finite { estimate, .. }) => {
                CheckRow::within("termination time vs 1/c", (estimate - 1.0 / c).abs(), tol.termination)
            }
            (WeightSpec::Flat { .. }, Termination::Infinite { .. }) => {
                CheckRow::within("termination time vs 1/c", f64::INFINITY, tol.termination)
            }
            (_, t) => CheckRow::not_applicable("termination time", t.estimate(), f64::NAN),
        };
        report.push(row.on_grid(n, 2.0 / (n - 1) as f64));
    }
    let title = format!("{} n={n} t={:?}", w.label(), cfg.t.0);
    write(dir, "flow.svg", svg::snapshots_svg(&snaps, &title))?;
    write(dir, "report.json", json(&report))?;
    for s in &snaps {
        println!(
            "t = {:<8} area_omega = {:.6}  distance to circle = {:.4}  sweeps = {}",
            s.t,
            s.area_omega,
            s.distance_to_circle(),
            s.diagnostics.sweeps
        );
    }
    Ok(report)
}

pub fn expmap(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let w = cfg.weight_spec()?;
    let e = &cfg.expmap;
    let z0 = Point::new(e.z0[0], e.z0[1])?;
    let chart = build_chart(&w, z0, e.r_max, e.n_r, e.n_theta, cfg.n.0)?;
    let mut report = chart_checks(&chart);
    if cfg.wants("refinement", &[]) {
        let (e1, e2) = refinement_errors(&w, z0, e.r_max, e.n_r, e.n_theta, cfg.n.0)?;
        report.push(CheckRow::exceeds("refinement factor", e1 / e2, 1.8).on_grid(chart.n, chart.h));
    }
    write(
        dir,
        "chart.json",
        format!("{}\n", ChartDocument::new(&chart, report.clone()).to_json()),
    )?;
    let title = format!("{} z0=({}, {})", w.label(), e.z0[0], e.z0[1]);
    write(dir, "chart.svg", svg::chart_svg(&chart, &title))?;
    write(dir, "report.json", json(&report))?;
    Ok(report)
}

pub fn geodesic(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let w = cfg.weight_spec()?;
    let g = &cfg.geodesic;
    let dir_c = Complex::new(g.dir[0], g.dir[1]);
    anyhow::ensure!(dir_c.norm() > 0.0, "geodesic.dir must be nonzero");
    let path = shoot(
        &w,
        Point::new(g.start[0], g.start[1])?,
        dir_c / dir_c.norm(),
        g.length,
        g.step,
    )?;
    let mut csv = Vec::new();
    path.write_csv(&mut csv)?;
    write(dir, "path.csv", csv)?;
    let pts: Vec<[f64; 2]> = path.nodes.iter().map(|n| [n.position.re, n.position.im]).collect();
    write(dir, "path.svg", svg::disk_paths_svg(&[pts], false, &w.label()))?;
    let mut report = VerificationReport::new();
    report.push(CheckRow::within(
        "metric speed drift",
        path.speed_drift(),
        cfg.tolerances.speed_drift,
    ));
    report.push(CheckRow::within(
        "left the disk",
        f64::from(u8::from(path.truncated)),
        0.0,
    ));
    if path.nodes.len() >= 3 {
        report.push(CheckRow::not_applicable(
            "geodesic equation residual",
            geodesic_residual(&w, &path)?,
            f64::NAN,
        ));
    }
    write(dir, "report.json", json(&report))?;
    Ok(report)
}

pub fn korenblum(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let report = korenblum_suite(cfg.seed)?;
    let k = &cfg.korenblum;
    let rows = f_table(&k.radii)?;
    let mut csv = Vec::new();
    write_f_csv(&rows, &mut csv)?;
    write(dir, "F.csv", csv)?;
    write(dir, "cpa.json", json(&cpa_table(&k.p, &k.alphas)?))?;
    let series = vec![(
        "log F(r) / log(1/(1-r))".to_string(),
        rows.iter().map(|s| (s.r, s.log_ratio)).collect(),
    )];
    write(dir, "F.svg", svg::curves_svg(&series, "r", "log-ratio"))?;
    write(dir, "report.json", json(&report))?;
    Ok(report)
}

pub fn example7(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let c = cfg.c.unwrap_or(0.01);
    let demo = example7_demo(c, cfg.alpha, EXAMPLE7_STEP)?;
    for (r, res) in demo.roots.iter().zip(&demo.root_residuals) {
        println!(
            "root r* = {r:.12}  radius = {:.12}  circle residual = {res:.3e}",
            r.sqrt()
        );
    }
    println!("tangential shot deviation = {:.3e}", demo.shot_deviation);
    write(dir, "example7.json", json(&demo))?;
    let circles: Vec<Vec<[f64; 2]>> = demo
        .roots
        .iter()
        .map(|r| {
            (0..360)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 360.0;
                    [r.sqrt() * a.cos(), r.sqrt() * a.sin()]
                })
                .collect()
        })
        .collect();
    write(
        dir,
        "example7.svg",
        svg::disk_paths_svg(&circles, true, &format!("example7({c}, {})", cfg.alpha)),
    )?;
    Ok(demo.checks)
}

pub fn verify(cfg: &RunConfig, dir: &Path) -> Result<VerificationReport> {
    let nu = cfg.weight_spec()?;
    let hyp = hypotheses(&nu);
    let mut report = VerificationReport::new();
    report.extend(w_estimate_check(&nu, cfg.n.0)?);
    for u in TestFunction::ALL {
        report.extend(reproducing_inequality(&nu, u, cfg.n.0)?);
    }
    report.extend(boundary_density_check(&nu)?);
    #[derive(Serialize)]
    struct Doc<'a> {
        weight: String,
        smooth_to_boundary: bool,
        ratio_margin: f64,
        reproducing_residual: f64,
        checks: &'a VerificationReport,
    }
    write(
        dir,
        "verify.json",
        json(&Doc {
            weight: nu.label(),
            smooth_to_boundary: hyp.smooth_to_boundary,
            ratio_margin: hyp.ratio_margin,
            reproducing_residual: hyp.reproducing_residual,
            checks: &report,
        }),
    )?;
    Ok(report)
}
