use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ssc_fw_bench::plot::emit_plot_data;
use ssc_fw_bench::verify::verify_run;
use ssc_fw_bench::{run_suite, BenchConfig};

/// Frank-Wolfe variants with and without short step chains on seeded benchmark suites
#[derive(Parser, Debug)]
#[command(name = "ssc-fw", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every cell of a config and write traces, summaries and reports
    Run {
        config: PathBuf,
        /// Output directory (overrides `out` in the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Global seed (overrides `seed` in the config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-run verification on the stored traces of a run directory
    Verify { run_dir: PathBuf },
    /// Write plot_data.csv for a run directory
    PlotData { run_dir: PathBuf },
}

fn print_failures(cell: &str, report: &ssc_fw::RateReport) {
    for f in report.failures() {
        println!(
            "  {cell}: {} failed (worst violation {:?}, tolerance {:e}){}",
            f.claim,
            f.worst_violation,
            f.tolerance,
            f.note.as_deref().map_or(String::new(), |n| format!(": {n}"))
        );
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let outcome = run_suite(&cfg, out.as_deref())?;
            for c in &outcome.cells {
                let s = &c.summary;
                println!(
                    "{:<8} {} steps={} good={} bad={} f={:.6e} pi={:.3e}",
                    if s.passed { "ok" } else { "FAIL" },
                    s.cell,
                    s.steps,
                    s.good_step_count,
                    s.bad_step_count,
                    s.final_f,
                    s.final_stationarity
                );
                print_failures(&s.cell, &c.report);
            }
            println!("wrote {}", outcome.out_dir.display());
            Ok(outcome.passed())
        }
        Command::Verify { run_dir } => {
            let cells = verify_run(&run_dir)?;
            let mut all = true;
            for c in &cells {
                let ok = c.report.passed() && c.matches_stored;
                all &= ok;
                println!("{:<8} {}", if ok { "ok" } else { "FAIL" }, c.cell);
                if !c.matches_stored {
                    println!("  {}: verdicts differ from the stored report", c.cell);
                }
                print_failures(&c.cell, &c.report);
            }
            println!("{} of {} cells pass", cells.iter().filter(|c| c.report.passed()).count(), cells.len());
            Ok(all)
        }
        Command::PlotData { run_dir } => {
            let path = emit_plot_data(&run_dir).context("writing plot data")?;
            println!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
