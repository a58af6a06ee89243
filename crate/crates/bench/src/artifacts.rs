//! On-disk layout of a run directory and the round trip of traces through CSV.
//!
//! ```text
//! <out>/config.toml            resolved configuration
//! <out>/comparison.csv         one row per cell
//! <out>/cells/<id>/trace.csv   per-iteration records
//! <out>/cells/<id>/summary.json
//! <out>/cells/<id>/report.json
//! ```
//!
//! Floats are written with 17 significant digits so traces read back bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use ssc_fw::rates::VerifyContext;
use ssc_fw::solver::ChainSummary;
use ssc_fw::{
    DirectionKind, IterationRecord, RateReport, RunTrace, StepKind, StepsizeRule, StopReason,
    Wrapper,
};

use crate::config::Family;

pub const CONFIG_FILE: &str = "config.toml";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const CELLS_DIR: &str = "cells";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "plot_data.csv";

const FIXED_COLUMNS: [&str; 20] = [
    "k",
    "f",
    "stationarity",
    "gap",
    "step_kind",
    "direction",
    "step_norm",
    "alpha",
    "alpha_bar",
    "alpha_max",
    "dsb",
    "inner_count",
    "termination_case",
    "hidden_index",
    "initial_support",
    "max_inface_run",
    "hidden_f",
    "hidden_stationarity",
    "hidden_gap",
    "hidden_distance",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredContext {
    pub tau: f64,
    pub polytope_dim: usize,
    pub tracks_active_set: bool,
    pub full_fw_steps: bool,
    pub f_star: Option<f64>,
    pub sqrt_horizon: Option<usize>,
}

impl From<VerifyContext> for StoredContext {
    fn from(c: VerifyContext) -> Self {
        Self {
            tau: c.tau,
            polytope_dim: c.polytope_dim,
            tracks_active_set: c.tracks_active_set,
            full_fw_steps: c.full_fw_steps,
            f_star: c.f_star,
            sqrt_horizon: c.sqrt_horizon,
        }
    }
}

impl From<StoredContext> for VerifyContext {
    fn from(c: StoredContext) -> Self {
        Self {
            tau: c.tau,
            polytope_dim: c.polytope_dim,
            tracks_active_set: c.tracks_active_set,
            full_fw_steps: c.full_fw_steps,
            f_star: c.f_star,
            sqrt_horizon: c.sqrt_horizon,
        }
    }
}

/// Everything about a cell except the per-iteration records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub problem: String,
    pub family: Family,
    pub replicate: usize,
    pub seed: u64,
    pub method: String,
    pub wrapper: Wrapper,
    pub stepsize: StepsizeRule,
    pub region: String,
    pub lipschitz: f64,
    pub mu: Option<f64>,
    pub diameter: f64,
    pub tol: f64,
    pub budget: usize,
    pub steps: usize,
    pub good_step_count: usize,
    pub bad_step_count: usize,
    pub gradient_calls: usize,
    pub stop_reason: StopReason,
    pub final_f: f64,
    pub final_stationarity: f64,
    pub min_gap: f64,
    pub fitted_contraction: Option<f64>,
    /// Contraction the theory predicts: `q` with the chain, `q̄_gs` without.
    pub theoretical_rate: Option<f64>,
    pub passed: bool,
    pub context: StoredContext,
    pub final_point: Vec<f64>,
}

impl CellSummary {
    pub fn trace_meta(&self, records: Vec<IterationRecord>) -> RunTrace {
        RunTrace {
            method: self.method.clone(),
            wrapper: self.wrapper,
            stepsize: self.stepsize,
            region: self.region.clone(),
            lipschitz: self.lipschitz,
            mu: self.mu,
            diameter: self.diameter,
            tol: self.tol,
            budget: self.budget,
            records,
            good_step_count: self.good_step_count,
            bad_step_count: self.bad_step_count,
            gradient_calls: self.gradient_calls,
            final_point: self.final_point.clone(),
            stop_reason: self.stop_reason,
        }
    }
}

pub fn cell_dir(run_dir: &Path, cell: &str) -> PathBuf {
    run_dir.join(CELLS_DIR).join(cell)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> anyhow::Result<()> {
    let n = trace.final_point.len();
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            num(r.f),
            num(r.stationarity),
            num(r.gap),
            r.step_kind.map_or(String::new(), |s| s.as_str().to_string()),
            r.direction.map_or(String::new(), |d| d.as_str().to_string()),
            num(r.step_norm),
            num(r.alpha),
            num(r.alpha_bar),
            num(r.alpha_max),
            num(r.dsb),
        ];
        match &r.chain {
            Some(c) => row.extend([
                c.inner_count.to_string(),
                c.termination_case.to_string(),
                c.hidden_index.to_string(),
                c.initial_support.to_string(),
                c.max_consecutive_maximal_in_face.to_string(),
                num(c.hidden_f),
                num(c.hidden_stationarity),
                num(c.hidden_gap),
                num(c.hidden_distance),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 9)),
        }
        row.extend(r.point.iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_records(path: &Path) -> anyhow::Result<Vec<IterationRecord>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = rd.headers()?.clone();
    if header.len() < FIXED_COLUMNS.len()
        || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b)
    {
        bail!("{} does not have the trace header", path.display());
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let ctx = || format!("{} row {}", path.display(), line + 1);
        let f = |i: usize| -> anyhow::Result<f64> {
            row[i].parse::<f64>().with_context(|| format!("{}: column {}", ctx(), FIXED_COLUMNS[i]))
        };
        let u = |i: usize| -> anyhow::Result<usize> {
            row[i].parse::<usize>().with_context(|| format!("{}: column {}", ctx(), FIXED_COLUMNS[i]))
        };
        let step_kind = match &row[4] {
            "" => None,
            s => Some(StepKind::parse(s).with_context(|| format!("{}: step kind {s:?}", ctx()))?),
        };
        let direction = match &row[5] {
            "" => None,
            s => Some(DirectionKind::parse(s).with_context(|| format!("{}: direction {s:?}", ctx()))?),
        };
        let chain = if row[11].is_empty() {
            None
        } else {
            Some(ChainSummary {
                inner_count: u(11)?,
                termination_case: row[12].parse().with_context(ctx)?,
                hidden_index: u(13)?,
                initial_support: u(14)?,
                max_consecutive_maximal_in_face: u(15)?,
                hidden_f: f(16)?,
                hidden_stationarity: f(17)?,
                hidden_gap: f(18)?,
                hidden_distance: f(19)?,
            })
        };
        let point = (FIXED_COLUMNS.len()..row.len())
            .map(|i| row[i].parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(ctx)?;
        out.push(IterationRecord {
            k: u(0)?,
            f: f(1)?,
            stationarity: f(2)?,
            gap: f(3)?,
            step_kind,
            direction,
            step_norm: f(6)?,
            alpha: f(7)?,
            alpha_bar: f(8)?,
            alpha_max: f(9)?,
            dsb: f(10)?,
            chain,
            point,
        });
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A cell as stored on disk.
#[derive(Debug, Clone)]
pub struct StoredCell {
    pub summary: CellSummary,
    pub trace: RunTrace,
    pub report: Option<RateReport>,
}

pub fn read_cell(dir: &Path) -> anyhow::Result<StoredCell> {
    let summary: CellSummary = read_json(&dir.join(SUMMARY_FILE))?;
    let records = read_trace_records(&dir.join(TRACE_FILE))?;
    let report_path = dir.join(REPORT_FILE);
    let report = if report_path.exists() {
        Some(read_json(&report_path)?)
    } else {
        None
    };
    let trace = summary.trace_meta(records);
    Ok(StoredCell { summary, trace, report })
}

/// Cells of a run directory in name order.
pub fn read_run(run_dir: &Path) -> anyhow::Result<Vec<StoredCell>> {
    let cells = run_dir.join(CELLS_DIR);
    let mut dirs: Vec<PathBuf> = fs::read_dir(&cells)
        .with_context(|| format!("{} is not a run directory", run_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SUMMARY_FILE).exists())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| read_cell(d)).collect()
}
