//! Verification reports: one row per numeric claim, each carrying its own
//! tolerance and grid parameters.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    /// `None` marks a check whose hypotheses were not met.
    pub pass: Option<bool>,
    pub residual: f64,
    pub tolerance: f64,
    pub n: Option<usize>,
    pub h: Option<f64>,
}

impl CheckRow {
    /// Passes when `residual <= tolerance`.
    pub fn within(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            pass: Some(residual <= tolerance),
            residual,
            tolerance,
            n: None,
            h: None,
        }
    }

    /// Passes when `value > threshold` (strict).
    pub fn exceeds(check: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            check: check.into(),
            pass: Some(value > threshold),
            residual: value,
            tolerance: threshold,
            n: None,
            h: None,
        }
    }

    pub fn not_applicable(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            pass: None,
            residual,
            tolerance,
            n: None,
            h: None,
        }
    }

    pub fn on_grid(mut self, n: usize, h: f64) -> Self {
        self.n = Some(n);
        self.h = Some(h);
        self
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }
}

/// Ordered collection of check rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VerificationReport {
    pub rows: Vec<CheckRow>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: CheckRow) -> &mut Self {
        self.rows.push(row);
        self
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.rows.extend(other.rows);
    }

    /// True when every applicable row passed and at least one row applied.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().any(|r| r.pass.is_some()) && self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.pass == Some(false))
    }

    /// True when some row was marked not applicable.
    pub fn has_not_applicable(&self) -> bool {
        self.rows.iter().any(|r| r.pass.is_none())
    }

    pub fn row(&self, check: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table for terminal output.
    pub fn render_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<4}  {:>12}  {:>12}  {:>5}  {:>10}",
            "check", "pass", "residual", "tolerance", "n", "h"
        );
        for r in &self.rows {
            let pass = match r.pass {
                Some(true) => "ok",
                Some(false) => "FAIL",
                None => "n/a",
            };
            let n = r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            let h = r.h.map(|h| format!("{h:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<width$}  {:<4}  {:>12.4e}  {:>12.4e}  {:>5}  {:>10}",
                r.check, pass, r.residual, r.tolerance, n, h
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let mut rep = VerificationReport::new();
        rep.push(CheckRow::within("a", 1e-3, 1e-2).on_grid(33, 0.0625));
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let row = &v[0];
        for key in ["check", "pass", "residual", "tolerance", "n", "h"] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert_eq!(row.as_object().unwrap().len(), 6);
    }

    #[test]
    fn not_applicable_is_neither_pass_nor_fail() {
        let mut rep = VerificationReport::new();
        rep.push(CheckRow::not_applicable("x", 0.0, 0.0));
        assert!(!rep.all_pass());
        assert!(!rep.any_failed());
        rep.push(CheckRow::within("y", 0.0, 0.0));
        assert!(rep.all_pass());
    }
}
