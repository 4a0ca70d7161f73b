use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use crate::error::{LabError, Result};

use super::config::ExperimentId;

/// Acceptance test attached to a report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// value < limit
    Below(f64),
    /// lo <= value <= hi
    Between(f64, f64),
    /// |value - target| <= tol
    Near { target: f64, tol: f64 },
    /// |value| <= limit
    AbsBelow(f64),
    /// An externally decided outcome (e.g. a CI overlap).
    Flag(bool),
}

impl Check {
    pub fn passes(&self, value: f64) -> bool {
        match *self {
            Check::Below(limit) => value < limit,
            Check::Between(lo, hi) => lo <= value && value <= hi,
            Check::Near { target, tol } => (value - target).abs() <= tol,
            Check::AbsBelow(limit) => value.abs() <= limit,
            Check::Flag(ok) => ok,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Check::Below(limit) => write!(f, "< {limit}"),
            Check::Between(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Check::Near { target, tol } => write!(f, "{target} ± {tol}"),
            Check::AbsBelow(limit) => write!(f, "|x| <= {limit}"),
            Check::Flag(_) => write!(f, "flag"),
        }
    }
}

/// One named statistic of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub value: f64,
    pub ci: Option<(f64, f64)>,
    pub check: Option<Check>,
    /// Acceptance criterion this row belongs to.
    pub criterion: Option<u8>,
    pub note: String,
}

impl ReportRow {
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        ReportRow { name: name.into(), value, ci: None, check: None, criterion: None, note: String::new() }
    }

    pub fn checked(name: impl Into<String>, value: f64, check: Check, criterion: u8) -> Self {
        ReportRow { check: Some(check), criterion: Some(criterion), ..Self::info(name, value) }
    }

    pub fn with_ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci = Some((lo.min(self.value), hi.max(self.value)));
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn pass(&self) -> Option<bool> {
        self.check.map(|c| c.passes(self.value))
    }
}

/// Raw CSV record: `experiment,replicate,d,n,statistic,value,seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    /// `None` for aggregates (written as `all`).
    pub replicate: Option<u64>,
    pub d: usize,
    pub n: u64,
    pub statistic: String,
    pub value: f64,
}

impl CsvRow {
    pub fn replicate(r: u64, d: usize, n: u64, statistic: impl Into<String>, value: f64) -> Self {
        CsvRow { replicate: Some(r), d, n, statistic: statistic.into(), value }
    }

    pub fn aggregate(d: usize, n: u64, statistic: impl Into<String>, value: f64) -> Self {
        CsvRow { replicate: None, d, n, statistic: statistic.into(), value }
    }
}

pub const CSV_HEADER: &str = "experiment,replicate,d,n,statistic,value,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub config_hash: String,
    pub code_version: &'static str,
    pub wall_time: Duration,
    pub rows: Vec<ReportRow>,
    pub csv: Vec<CsvRow>,
}

impl ExperimentReport {
    pub fn new(experiment: ExperimentId, seed: u64, config_hash: String) -> Self {
        ExperimentReport {
            experiment,
            seed,
            config_hash,
            code_version: env!("CARGO_PKG_VERSION"),
            wall_time: Duration::ZERO,
            rows: Vec::new(),
            csv: Vec::new(),
        }
    }

    pub fn row(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    /// Every thresholded row passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass() != Some(false))
    }

    /// Outcome for one acceptance criterion, if this report covers it.
    pub fn criterion_passed(&self, criterion: u8) -> Option<bool> {
        let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.criterion == Some(criterion)).collect();
        if rows.is_empty() {
            None
        } else {
            Some(rows.iter().all(|r| r.pass() != Some(false)))
        }
    }

    pub fn criteria(&self) -> Vec<u8> {
        let mut c: Vec<u8> = self.rows.iter().filter_map(|r| r.criterion).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.csv {
            let rep = r.replicate.map_or_else(|| "all".to_string(), |x| x.to_string());
            writeln!(out, "{},{},{},{},{},{},{}", self.experiment, rep, r.d, r.n, r.statistic, r.value, self.seed)?;
        }
        Ok(())
    }

    /// Human-readable block for `summary.txt`.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "== {} [{verdict}]", self.experiment);
        let _ = writeln!(s, "seed {}  config {}  version {}", self.seed, self.config_hash, self.code_version);
        let _ = writeln!(s, "wall time {:.1} s", self.wall_time.as_secs_f64());
        for r in &self.rows {
            let _ = write!(s, "  {:<44} {:>14.6}", r.name, r.value);
            if let Some((lo, hi)) = r.ci {
                let _ = write!(s, "  ci [{lo:.6}, {hi:.6}]");
            }
            if let Some(c) = r.check {
                let _ = write!(s, "  {c}  {}", if c.passes(r.value) { "pass" } else { "FAIL" });
            }
            if let Some(k) = r.criterion {
                let _ = write!(s, "  (criterion {k})");
            }
            if !r.note.is_empty() {
                let _ = write!(s, "  # {}", r.note);
            }
            s.push('\n');
        }
        s
    }

    /// Write `<dir>/<experiment>.csv`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        let path = dir.join(format!("{}.csv", self.experiment));
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        fs::write(&path, buf).map_err(|e| LabError::io(&path, e))
    }
}

/// Write `<dir>/summary.txt` for a set of reports.
pub fn write_summary(dir: &Path, reports: &[ExperimentReport], footer: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut text: String = reports.iter().map(ExperimentReport::summary).collect::<Vec<_>>().join("\n");
    text.push_str(footer);
    let path = dir.join("summary.txt");
    fs::write(&path, text).map_err(|e| LabError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks() {
        assert!(Check::Below(0.05).passes(0.04));
        assert!(!Check::Below(0.05).passes(0.05));
        assert!(Check::Between(1.0, 2.0).passes(2.0));
        assert!(Check::Near { target: 0.5164, tol: 1e-4 }.passes(0.51645));
        assert!(!Check::AbsBelow(3.0).passes(-3.5));
    }

    #[test]
    fn csv_layout() {
        let mut r = ExperimentReport::new(ExperimentId::E1, 9, "h".into());
        r.csv.push(CsvRow::replicate(0, 3, 100, "H_scaled", 0.25));
        r.csv.push(CsvRow::aggregate(3, 100, "ks_vs_normal", 0.01));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "experiment,replicate,d,n,statistic,value,seed\nE1,0,3,100,H_scaled,0.25,9\nE1,all,3,100,ks_vs_normal,0.01,9\n"
        );
    }

    #[test]
    fn criterion_outcomes() {
        let mut r = ExperimentReport::new(ExperimentId::E6, 1, String::new());
        r.row(ReportRow::checked("a", 1.0, Check::Below(2.0), 8));
        r.row(ReportRow::checked("b", 3.0, Check::Below(2.0), 9));
        r.row(ReportRow::info("c", 0.0));
        assert_eq!(r.criterion_passed(8), Some(true));
        assert_eq!(r.criterion_passed(9), Some(false));
        assert_eq!(r.criterion_passed(1), None);
        assert_eq!(r.criteria(), vec![8, 9]);
        assert!(!r.passed());
    }
}
