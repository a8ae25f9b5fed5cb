//! Structured verification reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    HypothesisNotMet,
}

impl Outcome {
    pub fn is_ok(self) -> bool {
        self != Outcome::Fail
    }
}

/// One inequality or identity check. `slack = rhs + tolerance - lhs`; the
/// check passes iff `slack >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub label: String,
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub slack: f64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// `lhs <= rhs + tolerance`.
    pub fn le(label: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs + tolerance - lhs;
        Self {
            label: label.into(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            tolerance,
            slack,
            outcome: if slack >= 0.0 { Outcome::Pass } else { Outcome::Fail },
            extra: BTreeMap::new(),
            note: None,
        }
    }

    /// `lhs >= rhs - tolerance`, stored with the same slack convention.
    pub fn ge(label: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = Self::le(label, anchor, rhs, lhs, tolerance);
        std::mem::swap(&mut r.lhs, &mut r.rhs);
        r
    }

    /// `|lhs - rhs| <= tolerance`.
    pub fn close(label: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let mut r = Self::le(label, anchor, 0.0, 0.0, tolerance);
        r.lhs = lhs;
        r.rhs = rhs;
        r.slack = tolerance - (lhs - rhs).abs();
        r.outcome = if r.slack >= 0.0 { Outcome::Pass } else { Outcome::Fail };
        r
    }

    /// Boolean plumbing check.
    pub fn flag(label: impl Into<String>, anchor: &str, ok: bool) -> Self {
        Self::le(label, anchor, if ok { 0.0 } else { 1.0 }, 0.0, 0.0)
    }

    pub fn hypothesis_not_met(mut self, why: impl Into<String>) -> Self {
        self.outcome = Outcome::HypothesisNotMet;
        self.note = Some(why.into());
        self
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// A refinement or study table, written as CSV next to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub version: String,
    pub config: serde_json::Value,
    /// Structured output of the suite, such as a constant ledger.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
    pub summary: Summary,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub hypothesis_not_met: usize,
}

impl Report {
    pub fn new(suite: &str, config: serde_json::Value) -> Self {
        Self {
            suite: suite.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            data: None,
            checks: Vec::new(),
            tables: Vec::new(),
            summary: Summary::default(),
            wall_time_s: 0.0,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
        self.refresh();
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        self.checks.extend(checks);
        self.refresh();
    }

    /// Appends another report's checks and tables, prefixing labels with its
    /// suite name.
    pub fn absorb(&mut self, other: Report) {
        let prefix = other.suite.clone();
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.label = format!("{prefix}/{}", c.label);
            c
        }));
        self.tables.extend(other.tables.into_iter().map(|mut t| {
            t.name = format!("{prefix}-{}", t.name);
            t
        }));
        self.refresh();
    }

    fn refresh(&mut self) {
        let mut s = Summary::default();
        for c in &self.checks {
            match c.outcome {
                Outcome::Pass => s.passed += 1,
                Outcome::Fail => s.failed += 1,
                Outcome::HypothesisNotMet => s.hypothesis_not_met += 1,
            }
        }
        self.summary = s;
    }

    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.outcome.is_ok())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall time zeroed, for determinism comparisons.
    pub fn body_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        r.to_json()
    }

    /// Writes `<stem>-<table>.csv` beside `report_path`.
    pub fn write_tables(&self, report_path: &Path) -> Result<Vec<std::path::PathBuf>> {
        let dir = report_path.parent().unwrap_or(Path::new("."));
        let stem = report_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report");
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{stem}-{}.csv", t.name));
            std::fs::write(&path, t.to_csv())?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_and_outcomes() {
        let a = CheckRecord::le("a", "plumbing", 1.0, 2.0, 0.0);
        assert!(a.passed() && a.slack == 1.0);
        let b = CheckRecord::le("b", "plumbing", 2.0, 1.0, 0.5);
        assert_eq!(b.outcome, Outcome::Fail);
        let c = CheckRecord::ge("c", "plumbing", 3.0, 2.0, 0.0);
        assert!(c.passed() && c.lhs == 3.0 && c.rhs == 2.0);
        let d = CheckRecord::le("d", "plumbing", 2.0, 1.0, 0.0).hypothesis_not_met("x");
        let mut r = Report::new("s", serde_json::json!({"k": 1}));
        r.extend([a, b, c, d]);
        assert_eq!(r.summary.passed, 2);
        assert_eq!(r.summary.failed, 1);
        assert!(!r.all_ok());
        let back: Report = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("ref", &["h", "err"]);
        t.push(vec![0.5, 0.25]);
        assert_eq!(t.to_csv(), "h,err\n5e-1,2.5e-1\n");
    }
}
