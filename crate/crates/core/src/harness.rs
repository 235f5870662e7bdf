//! Experiment drivers behind the `wiretap` binary: convergence traces on a
//! single seeded channel and Monte-Carlo sweeps over antenna counts or SNR.
//!
//! All randomness comes from the base seed; trial `t` uses
//! [`trial_seed`]`(seed, t)`. Trials run in parallel but results are reduced
//! in trial order, so summaries do not depend on scheduling. Timing columns
//! cover the solver call only and can be zeroed for byte-identical reruns.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{sample_channels, trial_seed, KroneckerParams};
use crate::model::{PowerBudget, SolverConfig, TraceRecord};
use crate::plot::{render_svg, PlotStyle, Series};
use crate::Algorithm;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Solver(#[from] crate::Error),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Nr,
    Ne,
    Snr,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Nr => "nr",
            SweepAxis::Ne => "ne",
            SweepAxis::Snr => "snr",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "nr" => Ok(SweepAxis::Nr),
            "ne" => Ok(SweepAxis::Ne),
            "snr" => Ok(SweepAxis::Snr),
            other => Err(HarnessError::InvalidArgument(format!(
                "invalid sweep axis '{other}' (expected nr, ne or snr)"
            ))),
        }
    }
}

fn check_dims(nt: usize, nr: usize, ne: usize) -> Result<(), HarnessError> {
    if nt == 0 || nr == 0 || ne == 0 {
        return Err(HarnessError::InvalidArgument(format!(
            "antenna counts must be positive, got ({nt}, {nr}, {ne})"
        )));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

/// Inputs of [`run_convergence`].
#[derive(Debug, Clone)]
pub struct ConvergenceSpec {
    pub nt: usize,
    pub nr: usize,
    pub ne: usize,
    pub snr_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub params: KroneckerParams,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub format: OutputFormat,
    /// Write measured times; when false every time column is zero.
    pub timing: bool,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    algo: &'a str,
    snr_db: f64,
    seed: u64,
    records: &'a [TraceRecord],
}

/// Writes one trace per (SNR, algorithm) plus `convergence.svg` overlaying
/// the tracked objective of every trace. All runs share the channel drawn
/// from `seed`. Returns the written paths, SVG last.
pub fn run_convergence(spec: &ConvergenceSpec) -> Result<Vec<PathBuf>, HarnessError> {
    check_dims(spec.nt, spec.nr, spec.ne)?;
    if spec.snr_db.is_empty() || spec.algorithms.is_empty() {
        return Err(HarnessError::InvalidArgument("need at least one SNR and one algorithm".into()));
    }
    let ch = sample_channels((spec.nt, spec.nr, spec.ne), &spec.params, spec.seed)?;
    create_dir(&spec.out)?;

    let mut written = Vec::new();
    let mut series = Vec::new();
    for &snr in &spec.snr_db {
        let p0 = PowerBudget::from_snr_db(snr)?;
        for &alg in &spec.algorithms {
            let mut records = alg.solve(&ch, p0, &spec.solver)?.trace.records().to_vec();
            if !spec.timing {
                records.iter_mut().for_each(|r| r.elapsed_ms = 0.0);
            }
            let stem = format!("{}_snr{snr}", alg.name());
            let path = spec.out.join(format!("{stem}.{}", spec.format.extension()));
            match spec.format {
                OutputFormat::Csv => {
                    let mut w = csv::Writer::from_path(&path)?;
                    for r in &records {
                        w.serialize(r)?;
                    }
                    w.flush().map_err(|e| HarnessError::io(&path, e))?;
                }
                OutputFormat::Json => {
                    let file = TraceFile { algo: alg.name(), snr_db: snr, seed: spec.seed, records: &records };
                    write_file(&path, serde_json::to_string_pretty(&file)?.as_bytes())?;
                }
            }
            series.push(Series {
                name: stem,
                points: records.iter().map(|r| (r.iter as f64, r.objective)).collect(),
            });
            written.push(path);
        }
    }
    let svg_path = spec.out.join("convergence.svg");
    write_file(&svg_path, render_svg(&series, &PlotStyle::default())?.as_bytes())?;
    written.push(svg_path);
    Ok(written)
}

/// Inputs of [`run_sweep`]. Every combination of the listed values forms
/// one cell; `axis` only selects which value fills the `axis` column.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub nt: Vec<usize>,
    pub nr: Vec<usize>,
    pub ne: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub params: KroneckerParams,
    pub solver: SolverConfig,
}

/// Monte-Carlo summary of one (cell, algorithm) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub algo: String,
    pub mean_rate_nats: f64,
    pub mean_ms: f64,
    pub trials: usize,
    pub median_ms: f64,
    pub nt: usize,
    pub nr: usize,
    pub ne: usize,
    pub snr_db: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    if spec.trials == 0 {
        return Err(HarnessError::InvalidArgument("trials must be at least 1".into()));
    }
    if [spec.nt.len(), spec.nr.len(), spec.ne.len(), spec.snr_db.len(), spec.algorithms.len()].contains(&0) {
        return Err(HarnessError::InvalidArgument("every sweep list needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &nt in &spec.nt {
        for &nr in &spec.nr {
            for &ne in &spec.ne {
                check_dims(nt, nr, ne)?;
                for &snr in &spec.snr_db {
                    let p0 = PowerBudget::from_snr_db(snr)?;
                    for &alg in &spec.algorithms {
                        let outcomes = (0..spec.trials as u64)
                            .into_par_iter()
                            .map(|t| -> Result<(f64, f64), crate::Error> {
                                let ch = sample_channels((nt, nr, ne), &spec.params, trial_seed(spec.seed, t))?;
                                let start = Instant::now();
                                let r = alg.solve(&ch, p0, &spec.solver)?;
                                Ok((r.secrecy_rate, start.elapsed().as_secs_f64() * 1e3))
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        let n = outcomes.len() as f64;
                        let mean_rate_nats = outcomes.iter().map(|o| o.0).sum::<f64>() / n;
                        let mut ms: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
                        let mean_ms = ms.iter().sum::<f64>() / n;
                        ms.sort_by(f64::total_cmp);
                        rows.push(SweepRow {
                            axis: match spec.axis {
                                SweepAxis::Nr => nr as f64,
                                SweepAxis::Ne => ne as f64,
                                SweepAxis::Snr => snr,
                            },
                            algo: alg.name().into(),
                            mean_rate_nats,
                            mean_ms,
                            trials: spec.trials,
                            median_ms: median(&ms),
                            nt,
                            nr,
                            ne,
                            snr_db: snr,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Writes `sweep_<axis>.<ext>` into `out` and returns its path.
pub fn write_sweep(
    rows: &[SweepRow],
    axis: SweepAxis,
    out: &Path,
    format: OutputFormat,
    timing: bool,
) -> Result<PathBuf, HarnessError> {
    create_dir(out)?;
    let rows: Vec<SweepRow> = rows
        .iter()
        .cloned()
        .map(|mut r| {
            if !timing {
                r.mean_ms = 0.0;
                r.median_ms = 0.0;
            }
            r
        })
        .collect();
    let path = out.join(format!("sweep_{axis}.{}", format.extension()));
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(&path)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| HarnessError::io(&path, e))?;
        }
        OutputFormat::Json => write_file(&path, serde_json::to_string_pretty(&rows)?.as_bytes())?,
    }
    Ok(path)
}
