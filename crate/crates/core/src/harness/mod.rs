//! Parallel Monte Carlo orchestration, result tables and their persistence.

mod battery;
mod experiment;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descendants::TraceDepth;
use crate::error::{invalid, Error, Result};
use crate::theory::{ModelParams, Variant};

pub use battery::{beta_tilde_sample, run_theory_battery, BatteryScale, CHECK_NAMES};
pub use experiment::{run_distribution_experiment, run_replicates, ReplicateOutcome};

/// Stream ids at or above this value are reserved for reference samples and
/// never used by replicates.
pub const REFERENCE_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Generate the full graph and count reachable vertices.
    GraphBfs,
    /// Run the edge-count recursion without building the graph.
    #[default]
    Recursion,
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bfs" | "graph-bfs" => Ok(Pipeline::GraphBfs),
            "recursion" => Ok(Pipeline::Recursion),
            other => Err(invalid(format!("unknown pipeline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(invalid(format!("unknown format '{other}'"))),
        }
    }
}

/// Everything needed to run an experiment or the verification battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub replicates: u64,
    pub pipeline: Pipeline,
    pub trace_depth: TraceDepth,
    /// Times `t` at which the scaled edge count `Y_{⌊t n^nu⌋} / n^nu` is averaged.
    pub t_grid: Vec<f64>,
    /// Orders `p` of the reported moments of `X / n^nu`.
    pub moments: Vec<f64>,
    /// Battery checks to run, by letter or name; `"all"` selects every check.
    pub checks: Vec<String>,
    pub scale: BatteryScale,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Size of the limit-law sample used as the KS reference.
    pub reference_size: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: ModelParams::new(Variant::PolyaUrn, 2, 0.0, 10_000, 0),
            replicates: 1000,
            pipeline: Pipeline::Recursion,
            trace_depth: TraceDepth::Count,
            t_grid: vec![0.5, 1.0, 2.0],
            moments: vec![1.0, 2.0],
            checks: vec!["all".into()],
            scale: BatteryScale::Quick,
            threads: 0,
            reference_size: 1_000_000,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicates < 1 {
            return Err(invalid("replicates must be at least 1"));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(**t > 0.0)) {
            return Err(invalid(format!("t_grid entries must be positive, got {t}")));
        }
        if let Some(p) = self.moments.iter().find(|p| !(**p >= 0.0)) {
            return Err(invalid(format!("moment orders must be nonnegative, got {p}")));
        }
        if self.reference_size < 1 {
            return Err(invalid("reference_size must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

/// One line of a result table or verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub name: String,
    pub variant: String,
    pub m: u32,
    pub rho: f64,
    pub n: u64,
    pub replicates: u64,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub reference: Option<f64>,
    /// Where the reference comes from (and, for checks, the pass rule).
    pub provenance: Option<String>,
    pub pass: Option<bool>,
}

impl ResultRow {
    pub fn new(name: impl Into<String>, variant: impl Into<String>, estimate: f64) -> Self {
        ResultRow {
            name: name.into(),
            variant: variant.into(),
            m: 0,
            rho: 0.0,
            n: 0,
            replicates: 0,
            estimate,
            stderr: None,
            reference: None,
            provenance: None,
            pass: None,
        }
    }

    pub fn model(mut self, m: u32, rho: f64, n: u64) -> Self {
        self.m = m;
        self.rho = rho;
        self.n = n;
        self
    }

    pub fn replicates(mut self, r: u64) -> Self {
        self.replicates = r;
        self
    }

    pub fn stderr(mut self, se: Option<f64>) -> Self {
        self.stderr = se;
        self
    }

    pub fn reference(mut self, value: f64, provenance: impl Into<String>) -> Self {
        self.reference = Some(value);
        self.provenance = Some(provenance.into());
        self
    }

    pub fn provenance(mut self, text: impl Into<String>) -> Self {
        self.provenance = Some(text.into());
        self
    }

    pub fn pass(mut self, ok: bool) -> Self {
        self.pass = Some(ok);
        self
    }
}

/// Rows with a shared CSV/JSON representation.
pub trait Tabular {
    fn rows(&self) -> &[ResultRow];
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Every row carrying a reference value must say where it comes from.
    pub fn check_provenance(&self) -> Result<()> {
        for row in &self.rows {
            let named = row.provenance.as_deref().is_some_and(|p| !p.is_empty());
            if row.reference.is_some() && !named {
                return Err(invalid(format!("row '{}' has no provenance", row.name)));
            }
        }
        Ok(())
    }
}

impl Tabular for ResultTable {
    fn rows(&self) -> &[ResultRow] {
        &self.rows
    }
}

/// Outcome of the verification battery: every row carries a pass flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<ResultRow>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass == Some(true))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.pass != Some(true))
    }
}

impl Tabular for VerificationReport {
    fn rows(&self) -> &[ResultRow] {
        &self.rows
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "name",
    "variant",
    "m",
    "rho",
    "n",
    "replicates",
    "estimate",
    "stderr",
    "reference",
    "provenance",
    "pass",
];

/// Seventeen significant digits: enough to round-trip any `f64`.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Serializes rows as CSV or JSON; identical input gives identical bytes.
pub fn render_results<T: Tabular + ?Sized>(table: &T, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(table.rows()).map_err(|e| Error::Format {
                path: "<json>".into(),
                message: e.to_string(),
            })?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let wrap = |e: csv::Error| Error::Format {
                path: "<csv>".into(),
                message: e.to_string(),
            };
            w.write_record(CSV_HEADER).map_err(wrap)?;
            for r in table.rows() {
                w.write_record([
                    r.name.clone(),
                    r.variant.clone(),
                    r.m.to_string(),
                    fmt_float(r.rho),
                    r.n.to_string(),
                    r.replicates.to_string(),
                    fmt_float(r.estimate),
                    fmt_opt(r.stderr),
                    fmt_opt(r.reference),
                    r.provenance.clone().unwrap_or_default(),
                    r.pass.map(|p| p.to_string()).unwrap_or_default(),
                ])
                .map_err(wrap)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format {
                path: "<csv>".into(),
                message: e.to_string(),
            })?;
            Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
        }
    }
}

/// Writes rows to `path` in the requested format.
pub fn write_results<T: Tabular + ?Sized>(
    table: &T,
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    let text = render_results(table, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

/// Parses rows written by [`render_results`] (format detected from content).
pub fn parse_results(text: &str, origin: &Path) -> Result<ResultTable> {
    let bad = |message: String| Error::Format {
        path: origin.into(),
        message,
    };
    if text.trim_start().starts_with('[') {
        let rows: Vec<ResultRow> =
            serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        return Ok(ResultTable { rows });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(bad(format!("unexpected header {:?}", header)));
    }
    let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
    let opt_float = |s: &str| {
        if s.is_empty() {
            Ok(None)
        } else {
            float(s).map(Some)
        }
    };
    let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("'{s}': {e}")));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(ResultRow {
            name: f(0).to_string(),
            variant: f(1).to_string(),
            m: int(f(2))? as u32,
            rho: float(f(3))?,
            n: int(f(4))?,
            replicates: int(f(5))?,
            estimate: float(f(6))?,
            stderr: opt_float(f(7))?,
            reference: opt_float(f(8))?,
            provenance: (!f(9).is_empty()).then(|| f(9).to_string()),
            pass: match f(10) {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => return Err(bad(format!("bad pass flag '{other}'"))),
            },
        });
    }
    Ok(ResultTable { rows })
}

pub fn read_results(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    parse_results(&text, path)
}

/// Fixed-width text rendering for terminals.
pub fn render_pretty<T: Tabular + ?Sized>(table: &T) -> String {
    let rows = table.rows();
    let name_w = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:<10} {:>2} {:>6} {:>9} {:>7}  {:>12} {:>10} {:>12}  {:<5}  provenance",
        "name", "variant", "m", "rho", "n", "reps", "estimate", "stderr", "reference", "pass"
    );
    for r in rows {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<name_w$}  {:<10} {:>2} {:>6} {:>9} {:>7}  {:>12.6} {:>10} {:>12}  {:<5}  {}",
            r.name,
            r.variant,
            r.m,
            r.rho,
            r.n,
            r.replicates,
            r.estimate,
            opt(r.stderr),
            opt(r.reference),
            r.pass.map(|p| if p { "ok" } else { "FAIL" }).unwrap_or("-"),
            r.provenance.as_deref().unwrap_or("")
        );
    }
    out
}

/// Maps `f` over replicate indices `0..count` on a pool of `threads` workers
/// (0 = all cores). Results come back in index order, so any reduction over
/// them is independent of scheduling.
pub fn parallel_map<T, F>(threads: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}
