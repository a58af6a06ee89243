//! Running every cell of a configuration and writing the run directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use ssc_fw::geometry::rate_constants;
use ssc_fw::rates::{fitted_contraction, good_step_factor, verify_trace};
use ssc_fw::solver::{run, SolverOptions};
use ssc_fw::{RateReport, RunTrace, Wrapper};

use crate::artifacts::{
    cell_dir, write_json, write_trace, CellSummary, COMPARISON_FILE, CONFIG_FILE, REPORT_FILE,
    SUMMARY_FILE, TRACE_FILE,
};
use crate::config::BenchConfig;
use crate::problem::{build_problems, cells, rule, verify_context, Cell, Problem};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SSC_FW_THREADS";

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub summary: CellSummary,
    pub report: RateReport,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub out_dir: PathBuf,
    pub cells: Vec<CellOutcome>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.report.passed())
    }
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn run_cell(cfg: &BenchConfig, problems: &[Problem], cell: &Cell) -> anyhow::Result<CellOutcome> {
    let problem = &problems[cell.problem];
    let rule = rule(&cell.method)?;
    let options = SolverOptions {
        budget: cfg.budget,
        tol: cfg.tol,
        stepsize: cfg.stepsize,
    };
    let id = cell.id(problems);
    let trace = run(
        cell.wrapper,
        rule.as_ref(),
        &problem.objective,
        &problem.region,
        problem.x0.clone(),
        &options,
    )
    .with_context(|| format!("running {id}"))?;
    let ctx = verify_context(rule.as_ref(), problem, cfg.sqrt_horizon);
    let report = verify_trace(&trace, &ctx).with_context(|| format!("verifying {id}"))?;

    let convex = trace.mu.zip(problem.f_star);
    let theoretical_rate = match (convex, cell.wrapper) {
        (Some((mu, _)), Wrapper::Ssc) => Some(rate_constants(mu, trace.lipschitz, ctx.tau)?.q),
        (Some((mu, _)), Wrapper::Plain) => {
            Some(good_step_factor(mu, trace.lipschitz, ctx.tau, ctx.full_fw_steps)?)
        }
        _ => None,
    };
    let summary = CellSummary {
        cell: id,
        problem: problem.id.clone(),
        family: problem.family,
        replicate: problem.replicate,
        seed: problem.seed,
        method: trace.method.clone(),
        wrapper: trace.wrapper,
        stepsize: trace.stepsize,
        region: trace.region.clone(),
        lipschitz: trace.lipschitz,
        mu: trace.mu,
        diameter: trace.diameter,
        tol: trace.tol,
        budget: trace.budget,
        steps: trace.steps(),
        good_step_count: trace.good_step_count,
        bad_step_count: trace.bad_step_count,
        gradient_calls: trace.gradient_calls,
        stop_reason: trace.stop_reason,
        final_f: trace.final_f(),
        final_stationarity: trace.final_stationarity(),
        min_gap: trace.records.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min),
        fitted_contraction: problem.f_star.and_then(|f| fitted_contraction(&trace, f)),
        theoretical_rate,
        passed: report.passed(),
        context: ctx.into(),
        final_point: trace.final_point.clone(),
    };
    Ok(CellOutcome { summary, report, trace })
}

fn write_cell(out_dir: &Path, cell: &CellOutcome) -> anyhow::Result<()> {
    let dir = cell_dir(out_dir, &cell.summary.cell);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trace(&dir.join(TRACE_FILE), &cell.trace)?;
    write_json(&dir.join(SUMMARY_FILE), &cell.summary)?;
    write_json(&dir.join(REPORT_FILE), &cell.report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.16e}"))
}

pub fn write_comparison(path: &Path, cells: &[CellOutcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "cell",
        "problem",
        "method",
        "wrapper",
        "steps",
        "good_steps",
        "bad_steps",
        "good_fraction",
        "gradient_calls",
        "final_f",
        "final_stationarity",
        "min_gap",
        "fitted_contraction",
        "theoretical_rate",
        "stop_reason",
        "passed",
    ])?;
    for c in cells {
        let s = &c.summary;
        let good_fraction = if s.steps == 0 {
            None
        } else {
            Some(s.good_step_count as f64 / s.steps as f64)
        };
        w.write_record([
            s.cell.clone(),
            s.problem.clone(),
            s.method.clone(),
            s.wrapper.as_str().to_string(),
            s.steps.to_string(),
            s.good_step_count.to_string(),
            s.bad_step_count.to_string(),
            opt(good_fraction),
            s.gradient_calls.to_string(),
            format!("{:.16e}", s.final_f),
            format!("{:.16e}", s.final_stationarity),
            format!("{:.16e}", s.min_gap),
            opt(s.fitted_contraction),
            opt(s.theoretical_rate),
            serde_json::to_value(s.stop_reason)?.as_str().unwrap_or_default().to_string(),
            s.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every cell in memory without touching the filesystem.
pub fn evaluate(cfg: &BenchConfig) -> anyhow::Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let problems = build_problems(cfg)?;
    let cells = cells(cfg, &problems);
    let work = || -> anyhow::Result<Vec<CellOutcome>> {
        cells.par_iter().map(|c| run_cell(cfg, &problems, c)).collect()
    };
    match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work),
        None => work(),
    }
}

/// Runs the suite and writes the run directory; `out` overrides the configured one.
pub fn run_suite(cfg: &BenchConfig, out: Option<&Path>) -> anyhow::Result<SuiteOutcome> {
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .context("no output directory given")?;
    let cells = evaluate(cfg)?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut resolved = cfg.clone();
    resolved.out = Some(out_dir.clone());
    fs::write(out_dir.join(CONFIG_FILE), resolved.to_toml())?;
    for c in &cells {
        write_cell(&out_dir, c)?;
    }
    write_comparison(&out_dir.join(COMPARISON_FILE), &cells)?;
    Ok(SuiteOutcome { out_dir, cells })
}
