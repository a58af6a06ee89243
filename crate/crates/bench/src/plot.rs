//! Long-format series for convergence plots.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::artifacts::{read_run, PLOT_FILE};

/// Gaps below this multiple of `max(1, |f*|)` are rounding noise and are not plotted.
pub const GAP_FLOOR: f64 = 1e-14;

pub const PLOT_HEADER: [&str; 6] = ["cell", "method", "wrapper", "series", "k", "log10_value"];

/// Writes `plot_data.csv` into the run directory with, per cell, the series
/// `gap` (`f_k - f*`, convex problems only) and `stationarity`.
pub fn emit_plot_data(run_dir: &Path) -> anyhow::Result<PathBuf> {
    let cells = read_run(run_dir)?;
    let path = run_dir.join(PLOT_FILE);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(PLOT_HEADER)?;
    for c in cells {
        let s = &c.summary;
        let mut row = |series: &str, k: usize, v: f64| {
            w.write_record([
                s.cell.as_str(),
                s.method.as_str(),
                s.wrapper.as_str(),
                series,
                &k.to_string(),
                &format!("{:.16e}", v.log10()),
            ])
        };
        if s.family.is_convex() {
            let Some(f_star) = s.context.f_star else {
                bail!("cell {} is convex but has no reference optimum", s.cell);
            };
            let floor = GAP_FLOOR * f_star.abs().max(1.0);
            for r in &c.trace.records {
                let gap = r.f - f_star;
                if gap <= floor {
                    break;
                }
                row("gap", r.k, gap)?;
            }
        }
        for r in c.trace.records.iter().filter(|r| r.stationarity > 0.0) {
            row("stationarity", r.k, r.stationarity)?;
        }
    }
    w.flush()?;
    Ok(path)
}
