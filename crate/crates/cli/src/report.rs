//! Machine-readable reports.  Every float is rounded to 12 significant
//! digits before serialization, and no field depends on wall-clock time
//! unless timing is explicitly requested, so identical configurations
//! produce byte-identical output.

use serde::Serialize;

use freeprod_core::recovery::ConvergenceRow;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Metric {
    /// A metric that passes when the value stays at or below the tolerance.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Metric { name: name.into(), value: sig12(value), tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub status: SuiteStatus,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Cells that could not run (with the reason); nonempty skips fail
    /// strict runs.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub skipped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl SuiteResult {
    pub fn from_metrics(suite: &str, seed: u64, metrics: Vec<Metric>, skipped: Vec<String>) -> Self {
        let status = if metrics.iter().all(|m| m.pass) { SuiteStatus::Pass } else { SuiteStatus::Fail };
        SuiteResult { suite: suite.to_string(), status, seed, metrics, skipped, timing_ms: None }
    }

    pub fn skipped_entirely(suite: &str, seed: u64, reason: String) -> Self {
        SuiteResult {
            suite: suite.to_string(),
            status: SuiteStatus::Skip,
            seed,
            metrics: Vec::new(),
            skipped: vec![reason],
            timing_ms: None,
        }
    }

    pub fn ok(&self, strict: bool) -> bool {
        match self.status {
            SuiteStatus::Pass => !(strict && !self.skipped.is_empty()),
            SuiteStatus::Skip => !strict,
            SuiteStatus::Fail => false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub suites: Vec<SuiteResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<RowRecord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowRecord {
    pub n: usize,
    pub m: usize,
    pub defect: f64,
    pub bound: f64,
    pub mode: &'static str,
}

impl From<&ConvergenceRow> for RowRecord {
    fn from(r: &ConvergenceRow) -> Self {
        RowRecord {
            n: r.n,
            m: r.m,
            defect: sig12(r.defect),
            bound: sig12(r.bound),
            mode: r.mode.as_str(),
        }
    }
}

pub fn rows_to_csv(rows: &[RowRecord]) -> String {
    let mut out = String::from("n,m,defect,bound,mode\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.n, r.m, r.defect, r.bound, r.mode));
    }
    out
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
