//! Tables, manifests and the run report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

pub const MANIFEST_FILE: &str = "manifest.toml";
const MANIFEST_FORMAT: &str = "qbm-manifest-1";

/// C-style `%.12e`: twelve fraction digits and a signed two-digit exponent.
pub fn fmt_e(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// A comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One table cell.
pub enum Cell<'a> {
    Num(f64),
    Int(i64),
    Text(&'a str),
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: &[Cell<'_>]) {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(
            cells
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_e(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.to_string(),
                })
                .collect(),
        );
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

/// A tolerance check embedded in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn skip(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::Skip, detail: detail.into() }
    }
}

/// Outcome of one `[[run]]` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub name: String,
    pub mode: String,
    pub files: Vec<String>,
    /// Headline numbers for the report.
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl RunRecord {
    pub fn status(&self) -> Status {
        if self.error.is_some() || self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub qbm_core: String,
    pub runner: String,
}

/// Written once per invocation, after every run has finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub versions: Versions,
    #[serde(default)]
    pub runs: Vec<RunRecord>,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(config: &ScenarioConfig, runner_version: &str, started_unix: u64, wall_time_s: f64, runs: Vec<RunRecord>) -> Result<Self> {
        Ok(Self {
            format: MANIFEST_FORMAT.into(),
            config_hash: config_hash(config)?,
            seed: config.seed,
            started_unix,
            wall_time_s,
            versions: Versions {
                qbm_core: env!("CARGO_PKG_VERSION").into(),
                runner: runner_version.into(),
            },
            runs,
            config: config.clone(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::Config(format!("{}: unknown manifest format {:?}", path.display(), m.format)));
        }
        Ok(m)
    }
}

/// SHA-256 of the canonical configuration text, in hex.
pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let digest = Sha256::digest(config.to_toml()?.as_bytes());
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

/// Manifests in `dir` and its immediate subdirectories, sorted by path.
pub fn find_manifests(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let top = dir.join(MANIFEST_FILE);
    if top.is_file() {
        found.push(top);
    }
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        let m = d.join(MANIFEST_FILE);
        if m.is_file() {
            found.push(m);
        }
    }
    Ok(found)
}

/// One row per run across every manifest under `dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub status: Status,
    pub location: String,
    pub run: String,
    pub mode: String,
    pub detail: String,
}

impl Report {
    pub fn collect(dir: &Path) -> Result<Self> {
        let manifests = find_manifests(dir)?;
        if manifests.is_empty() {
            return Err(Error::Config(format!("no {MANIFEST_FILE} under {}", dir.display())));
        }
        let mut rows = Vec::new();
        for path in manifests {
            let m = Manifest::read(&path)?;
            let location = path
                .parent()
                .and_then(|p| p.strip_prefix(dir).ok())
                .map(|p| if p.as_os_str().is_empty() { ".".to_string() } else { p.display().to_string() })
                .unwrap_or_else(|| ".".into());
            for r in &m.runs {
                let status = r.status();
                let detail = if let Some(e) = &r.error {
                    format!("error: {e}")
                } else if status == Status::Fail {
                    let failed: Vec<String> = r
                        .checks
                        .iter()
                        .filter(|c| c.status == Status::Fail)
                        .map(|c| format!("{} ({})", c.name, c.detail))
                        .collect();
                    format!("violated: {}", failed.join("; "))
                } else {
                    r.summary.clone()
                };
                rows.push(ReportRow { status, location: location.clone(), run: r.name.clone(), mode: r.mode.clone(), detail });
            }
        }
        Ok(Self { rows })
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == Status::Fail)
    }

    pub fn render(&self) -> String {
        let w_loc = self.rows.iter().map(|r| r.location.len()).max().unwrap_or(0).max(3);
        let w_run = self.rows.iter().map(|r| r.run.len()).max().unwrap_or(0).max(3);
        let w_mode = self.rows.iter().map(|r| r.mode.len()).max().unwrap_or(0).max(4);
        let mut s = format!("{:<6} {:<w_loc$} {:<w_run$} {:<w_mode$} detail\n", "status", "dir", "run", "mode");
        for r in &self.rows {
            let _ = writeln!(s, "{:<6} {:<w_loc$} {:<w_run$} {:<w_mode$} {}", r.status.to_string(), r.location, r.run, r.mode, r.detail);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponent() {
        assert_eq!(fmt_e(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e(-0.00123), "-1.230000000000e-03");
        assert_eq!(fmt_e(6.02e23), "6.020000000000e+23");
        assert_eq!(fmt_e(1e-300), "1.000000000000e-300");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(f64::NAN), "nan");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["t", "a", "regime"]);
        t.push(&[Cell::Num(0.5), Cell::Int(3), Cell::Text("driven")]);
        assert_eq!(t.to_csv(), "t,a,regime\n5.000000000000e-01,3,driven\n");
    }

    #[test]
    fn run_status_follows_checks() {
        let mut r = RunRecord {
            name: "x".into(),
            mode: "evolve".into(),
            files: vec![],
            summary: String::new(),
            error: None,
            checks: vec![Check::new("a", true, ""), Check::skip("b", "")],
        };
        assert_eq!(r.status(), Status::Pass);
        r.checks.push(Check::new("c", false, "too big"));
        assert_eq!(r.status(), Status::Fail);
    }
}
