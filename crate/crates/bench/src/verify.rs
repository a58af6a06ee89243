//! Re-checking a run directory from its stored traces.

use std::path::Path;

use ssc_fw::rates::verify_trace;
use ssc_fw::RateReport;

use crate::artifacts::read_run;

#[derive(Debug, Clone)]
pub struct VerifiedCell {
    pub cell: String,
    pub report: RateReport,
    /// Whether the recomputed report equals the stored one.
    pub matches_stored: bool,
}

pub fn verify_run(run_dir: &Path) -> anyhow::Result<Vec<VerifiedCell>> {
    let cells = read_run(run_dir)?;
    if cells.is_empty() {
        anyhow::bail!("{} contains no cells", run_dir.display());
    }
    cells
        .into_iter()
        .map(|c| {
            let report = verify_trace(&c.trace, &c.summary.context.into())?;
            let matches_stored = c.report.as_ref().is_none_or(|r| same_verdicts(r, &report));
            Ok(VerifiedCell {
                cell: c.summary.cell,
                report,
                matches_stored,
            })
        })
        .collect()
}

fn same_verdicts(a: &RateReport, b: &RateReport) -> bool {
    a.claims.len() == b.claims.len()
        && a.claims
            .iter()
            .zip(&b.claims)
            .all(|(x, y)| x.claim == y.claim && x.passed == y.passed && x.checked == y.checked)
}
