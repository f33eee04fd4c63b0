//! Run configuration: a TOML document with top-level run keys and optional
//! per-command sections. Every key has a default; unknown keys are errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hs_lab::surface::{TableWeight, WeightSpec};
use serde::{Deserialize, Deserializer, Serialize};

/// Weight families selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Family {
    /// `c`
    Flat,
    /// `c/(1-|z|²)²`
    Poincare,
    /// `(1-|z|²)^{2α}`
    AlphaPower,
    /// `c/(1-|z|²)² + (1-|z|²)^{2α}`
    Example7,
    /// `c(1-|z|²)^β`
    ScaledPower,
    /// bicubic table from a CSV grid
    Table,
}

impl Family {
    fn default_c(self) -> f64 {
        match self {
            Self::Flat => 1.0,
            Self::Poincare => 4.0,
            Self::Example7 => 0.01,
            Self::ScaledPower => 2.0,
            Self::AlphaPower | Self::Table => 1.0,
        }
    }
}

/// Strictly increasing positive flow times.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Schedule(pub Vec<f64>);

impl Schedule {
    pub fn new(ts: Vec<f64>) -> std::result::Result<Self, String> {
        if ts.is_empty() {
            return Err("t must list at least one time".into());
        }
        if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(format!("t = {t} must be positive and finite"));
        }
        if let Some(p) = ts.windows(2).find(|p| p[0].partial_cmp(&p[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(format!("t must be strictly increasing ({} then {})", p[0], p[1]));
        }
        Ok(Self(ts))
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Schedule::new(Vec::<f64>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Odd grid size of at least 5 nodes per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct GridSize(pub usize);

impl GridSize {
    pub fn new(n: usize) -> std::result::Result<Self, String> {
        if n < 5 || n.is_multiple_of(2) {
            return Err(format!("n = {n} must be odd and at least 5"));
        }
        Ok(Self(n))
    }
}

impl<'de> Deserialize<'de> for GridSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        GridSize::new(usize::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsSection {
    pub samples: usize,
}

impl Default for KernelsSection {
    fn default() -> Self {
        Self { samples: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpmapSection {
    pub z0: [f64; 2],
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for ExpmapSection {
    fn default() -> Self {
        Self {
            z0: [0.0, 0.0],
            r_max: 0.8,
            n_r: 8,
            n_theta: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicSection {
    pub start: [f64; 2],
    pub dir: [f64; 2],
    pub length: f64,
    pub step: f64,
}

impl Default for GeodesicSection {
    fn default() -> Self {
        Self {
            start: [0.0, 0.0],
            dir: [1.0, 0.0],
            length: 0.5,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KorenblumSection {
    /// Radii of the `F` table.
    pub radii: Vec<f64>,
    pub p: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Default for KorenblumSection {
    fn default() -> Self {
        Self {
            radii: (1..=99).map(|k| k as f64 / 100.0).chain([0.995, 0.999]).collect(),
            p: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            alphas: vec![0.0, 0.25, 0.5, 1.0],
        }
    }
}

/// Scales of the checks computed by the driver itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Boundary vs exact circle, in units of `h`.
    pub hausdorff_h: f64,
    /// `|area_omega - t|`, in units of `h·t`.
    pub area_ht: f64,
    /// Mean-value residuals, in units of `h·t`.
    pub mean_value_ht: f64,
    pub mean_value_degree: usize,
    /// `|T - 1/c|` for flat weights.
    pub termination: f64,
    /// Metric-speed drift of a geodesic per unit parameter.
    pub speed_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hausdorff_h: 2.0,
            area_ht: 5.0,
            mean_value_ht: 5.0,
            mean_value_degree: 6,
            termination: 1e-2,
            speed_drift: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weight: Family,
    /// Family scale; the family default when absent.
    pub c: Option<f64>,
    pub beta: f64,
    pub alpha: f64,
    /// CSV grid for `weight = "table"`.
    pub table: Option<PathBuf>,
    pub n: GridSize,
    pub t: Schedule,
    /// Check names; empty selects the command's default set.
    pub checks: Vec<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub kernels: KernelsSection,
    pub expmap: ExpmapSection,
    pub geodesic: GeodesicSection,
    pub korenblum: KorenblumSection,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weight: Family::Flat,
            c: None,
            beta: 1.0,
            alpha: 0.5,
            table: None,
            n: GridSize(513),
            t: Schedule(vec![0.04, 0.16, 0.36, 0.64]),
            checks: Vec::new(),
            out: PathBuf::from("runs"),
            seed: 7,
            kernels: KernelsSection::default(),
            expmap: ExpmapSection::default(),
            geodesic: GeodesicSection::default(),
            korenblum: KorenblumSection::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Parses a configuration document; errors carry the offending line.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            bail!("alpha = {} must be finite and nonnegative", self.alpha);
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                bail!("c = {c} must be positive");
            }
        }
        if self.weight == Family::Table && self.table.is_none() {
            bail!("weight = \"table\" needs a table path");
        }
        let e = &self.expmap;
        if !(e.r_max > 0.0 && e.r_max < 1.0) {
            bail!("expmap.r_max = {} must lie in (0, 1)", e.r_max);
        }
        if e.n_r < 2 || e.n_theta < 3 {
            bail!("expmap needs n_r >= 2 and n_theta >= 3");
        }
        let g = &self.geodesic;
        if !(g.step > 0.0 && g.length >= 0.0) {
            bail!("geodesic.step must be positive and geodesic.length nonnegative");
        }
        if self.korenblum.radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            bail!("korenblum.radii must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn c(&self) -> f64 {
        self.c.unwrap_or_else(|| self.weight.default_c())
    }

    pub fn weight_spec(&self) -> Result<WeightSpec<f64>> {
        let c = self.c();
        let w = match self.weight {
            Family::Flat => WeightSpec::flat(c),
            Family::Poincare => WeightSpec::poincare_scaled(c),
            Family::AlphaPower => WeightSpec::alpha_power(self.alpha),
            Family::Example7 => WeightSpec::example7(c, self.alpha),
            Family::ScaledPower => WeightSpec::scaled_power(c, self.beta),
            Family::Table => {
                let path = self.table.as_ref().expect("validated");
                WeightSpec::table(TableWeight::from_csv_path(path)?)
            }
        };
        w.validate()?;
        Ok(w)
    }

    /// Whether `name` is selected, with `defaults` standing in for an empty
    /// list and `all` selecting everything.
    pub fn wants(&self, name: &str, defaults: &[&str]) -> bool {
        if self.checks.is_empty() {
            return defaults.contains(&name);
        }
        self.checks.iter().any(|c| c == name || c == "all")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config("weight = \"flat\"\nt = [0.25]\n").unwrap();
        assert_eq!(cfg.n, GridSize(513));
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.t, Schedule(vec![0.25]));
        assert_eq!(cfg.weight_spec().unwrap(), WeightSpec::flat(1.0));
    }

    #[test]
    fn example7_document() {
        let cfg = parse_config("weight = \"example7\"\nc = 0.01\nalpha = 1\n").unwrap();
        assert_eq!(cfg.weight_spec().unwrap(), WeightSpec::example7(0.01, 1.0));
    }

    #[test]
    fn decreasing_schedule_names_the_line() {
        let err = parse_config("weight = \"flat\"\nt = [0.3, 0.1]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("strictly increasing"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("weight = \"flat\"\nsped = 3\n").unwrap_err().to_string();
        assert!(err.contains("sped"), "{err}");
        assert!(parse_config("[expmap]\nrings = 3\n").is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(parse_config("n = 64\n").is_err());
        assert!(parse_config("weight = \"cubic\"\n").is_err());
        assert!(parse_config("alpha = -1\n").is_err());
        assert!(parse_config("weight = \"table\"\n").is_err());
    }

    #[test]
    fn sections_override() {
        let cfg = parse_config("[expmap]\nn_r = 4\n[tolerances]\narea_ht = 3.0\n").unwrap();
        assert_eq!(cfg.expmap.n_r, 4);
        assert_eq!(cfg.expmap.n_theta, 32);
        assert_eq!(cfg.tolerances.area_ht, 3.0);
    }
}
