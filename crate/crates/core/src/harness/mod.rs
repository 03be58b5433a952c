//! Experiment configs, runs, manifests and reports.
//!
//! [`run`] validates a config before touching the filesystem, dispatches to
//! the matching pipeline on a dedicated worker pool, writes CSV tables,
//! log-log plot data and a JSON manifest, and returns the manifest record.
//! Parallel work is collected by index, so CSV bodies do not depend on the
//! worker count.

mod config;
mod pipelines;
mod report;
pub mod vdc;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{Budget, Experiment, ExperimentConfig, Grid, IndexRule, StabilityStudy, Tolerances, VdcBoundKind};
pub use report::{report, ReportRow, Summary};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One prediction-vs-measurement comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub quantity: String,
    /// Where the prediction comes from.
    pub rule: String,
    pub predicted: String,
    pub measured: Option<f64>,
    pub tolerance: f64,
    /// `None` when the measurement could not be made (too few points for a
    /// fit, or an undecidable prediction).
    pub pass: Option<bool>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub message: String,
    pub exit_code: i32,
}

/// Manifest contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub name: String,
    pub kind: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    /// Relative to the output directory, sorted, including the manifest.
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(default)]
    pub error: Option<RunError>,
}

impl ResultRecord {
    /// 0 when every evaluated check passes, 1 on a failed check, otherwise
    /// the exit code of the recorded error.
    pub fn exit_code(&self) -> i32 {
        match &self.error {
            Some(e) => e.exit_code,
            None if self.pass => 0,
            None => 1,
        }
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// RFC 4180 with `\n` line endings.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Shortest round-trip decimal, scientific outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// What a pipeline produced.
pub(crate) struct Output {
    pub tables: Vec<Table>,
    /// `(file, log10 x, log10 y)` series; zero or negative values are
    /// skipped.
    pub plot: Option<(String, Vec<(f64, f64)>)>,
    pub checks: Vec<Check>,
}

/// Runs `config` with `workers` threads (0 means the rayon default),
/// writing into `out`, or into the config's `output_dir` when `out` is
/// `None`.
///
/// Validation errors return before any file is created. Pipeline errors
/// are recorded in the manifest and returned inside the record.
pub fn run(config: &ExperimentConfig, out: Option<&Path>, workers: usize) -> Result<ResultRecord> {
    config.validate()?;
    let dir: PathBuf = match (out, &config.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => return Err(Error::Config("output_dir: not set and no --out given".into())),
    };
    let hash = config.hash()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let threads = pool.current_num_threads();
    let started = Instant::now();
    let result = pool.install(|| pipelines::dispatch(config));
    let wall_time_s = started.elapsed().as_secs_f64();

    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let (checks, error) = match result {
        Ok(output) => {
            for t in &output.tables {
                fs::write(dir.join(&t.file), t.to_csv()?)?;
                files.push(t.file.clone());
            }
            if let Some((file, points)) = &output.plot {
                let mut t = Table::new(file, &["log10_x", "log10_y"]);
                for (x, y) in points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
                    t.push(vec![fmt_f64(x.log10()), fmt_f64(y.log10())]);
                }
                fs::write(dir.join(file), t.to_csv()?)?;
                files.push(file.clone());
            }
            (output.checks, None)
        }
        Err(e) => (Vec::new(), Some(RunError { message: e.to_string(), exit_code: e.exit_code() })),
    };
    // Anything already in the directory is listed too.
    for entry in fs::read_dir(&dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    files.push(MANIFEST_FILE.into());
    files.sort();
    files.dedup();
    let pass = error.is_none() && checks.iter().all(|c| c.pass != Some(false));
    let record = ResultRecord {
        name: config.name.clone(),
        kind: config.experiment.kind().into(),
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        workers: threads,
        wall_time_s,
        files,
        checks,
        pass,
        error,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&record)?)?;
    Ok(record)
}
