//! Post-hoc checks of the per-step and global rate inequalities on traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hidden_constant, rate_constants};
use crate::linalg::dist;
use crate::solver::{RunTrace, StepKind, StepsizeRule, Wrapper};

/// Absolute floor added to the right side of the square-root rate to absorb
/// rounding in the stationarity measure at nearly stationary points.
pub const SQRT_RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub claim: String,
    /// The theoretical constant the claim is checked against, if any.
    pub bound: Option<f64>,
    /// Largest violation seen; `None` when nothing was checked.
    pub worst_violation: Option<f64>,
    pub tolerance: f64,
    pub checked: usize,
    pub passed: bool,
    /// Reported for reference, excluded from the overall verdict.
    pub informational: bool,
    pub note: Option<String>,
}

impl ClaimRecord {
    fn new(claim: &str, bound: Option<f64>, tolerance: f64) -> Self {
        Self {
            claim: claim.to_string(),
            bound,
            worst_violation: None,
            tolerance,
            checked: 0,
            passed: true,
            informational: false,
            note: None,
        }
    }

    fn observe(&mut self, violation: f64) {
        self.checked += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        self.worst_violation = Some(self.worst_violation.map_or(v, |w| w.max(v)));
        self.passed = self.worst_violation.is_none_or(|w| w <= self.tolerance);
    }

    fn informational(mut self) -> Self {
        self.informational = true;
        self.passed = true;
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateReport {
    pub claims: Vec<ClaimRecord>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|c| c.informational || c.passed)
    }

    pub fn get(&self, claim: &str) -> Option<&ClaimRecord> {
        self.claims.iter().find(|c| c.claim == claim)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClaimRecord> {
        self.claims.iter().filter(|c| !c.informational && !c.passed)
    }
}

/// `(lhs − rhs)/rhs`, or the absolute excess when `rhs` is not positive.
fn relative_excess(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        (lhs - rhs) / rhs
    } else {
        lhs - rhs
    }
}

fn steps(trace: &RunTrace) -> impl Iterator<Item = (usize, &crate::solver::IterationRecord, &crate::solver::IterationRecord)> {
    trace
        .records
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, &w[0], &w[1]))
}

/// `f(x_k) − f(x_{k+1}) ≥ (L/2)‖x_k − x_{k+1}‖²` on chain steps and on plain
/// short steps.
pub fn verify_sufficient_decrease(trace: &RunTrace) -> ClaimRecord {
    let mut c = ClaimRecord::new("sufficient_decrease", None, 1e-9);
    let l = trace.lipschitz;
    for (_, a, b) in steps(trace) {
        if matches!(a.step_kind, Some(StepKind::SscOuter | StepKind::GoodShort)) {
            let norm = dist(&a.point, &b.point);
            c.observe(0.5 * l * norm * norm - (a.f - b.f));
        }
    }
    c
}

/// `f_{k+1} ≤ f_k` along the run.
pub fn verify_monotone(trace: &RunTrace) -> ClaimRecord {
    let mut c = ClaimRecord::new("monotone", None, 1e-10);
    for (_, a, b) in steps(trace) {
        c.observe(b.f - a.f);
    }
    c
}

/// `G(x) ≤ D·π_x(−∇f(x))` at every recorded point, hidden points included.
pub fn verify_gap_inequality(trace: &RunTrace) -> ClaimRecord {
    let mut c = ClaimRecord::new("gap_inequality", Some(trace.diameter), 1e-10);
    let d = trace.diameter;
    for r in &trace.records {
        c.observe(r.gap - d * r.stationarity);
        if let Some(ch) = &r.chain {
            c.observe(ch.hidden_gap - d * ch.hidden_stationarity);
        }
    }
    c
}

/// `f_k − f* ≤ q^k (f_0 − f*)`; the bound field carries `q` and the note the
/// fitted contraction.
pub fn verify_linear_rate(trace: &RunTrace, f_star: f64, q: f64) -> Result<ClaimRecord> {
    let mut c = ClaimRecord::new("linear_rate", Some(q), 1e-7);
    let Some(first) = trace.records.first() else {
        return Ok(c);
    };
    let h0 = first.f - f_star;
    for (k, r) in trace.records.iter().enumerate() {
        if r.f < f_star - 1e-9 {
            return Err(Error::WrongReference {
                f_star,
                observed: r.f,
            });
        }
        c.observe(relative_excess(r.f - f_star, q.powi(k as i32) * h0));
    }
    let fitted = fitted_contraction(trace, f_star);
    Ok(c.with_note(format!("fitted contraction {}", fmt_opt(fitted))))
}

/// Geometric-mean ratio of successive optimality gaps over the stretch where
/// the gap stays above rounding level.
pub fn fitted_contraction(trace: &RunTrace, f_star: f64) -> Option<f64> {
    let h0 = trace.records.first()?.f - f_star;
    if h0 <= 0.0 {
        return None;
    }
    let floor = 1e-13 * (1.0 + f_star.abs());
    let (k, hk) = trace
        .records
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, r)| (k, r.f - f_star))
        .take_while(|(_, h)| *h > floor)
        .last()?;
    Some((hk / h0).powf(1.0 / k as f64))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

/// Rate over good steps only: `f_k − f* ≤ q̄^{γ̄(k)} (f_0 − f*)`.
pub fn verify_good_step_rate(trace: &RunTrace, f_star: f64, q_gs: f64) -> ClaimRecord {
    let mut c = ClaimRecord::new("good_step_rate", Some(q_gs), 1e-7);
    let Some(first) = trace.records.first() else {
        return c;
    };
    let h0 = first.f - f_star;
    let mut good = 0i32;
    c.observe(relative_excess(h0, h0));
    for (_, a, b) in steps(trace) {
        if a.step_kind.is_some_and(StepKind::is_good) {
            good += 1;
        }
        c.observe(relative_excess(b.f - f_star, q_gs.powi(good) * h0));
    }
    c
}

/// Per-step contraction on good steps: `1 − (μ/L)·dsb_k²` after short steps,
/// `(1 + μ/L)⁻¹` after full Frank-Wolfe steps.
pub fn verify_good_step_decrease(trace: &RunTrace, f_star: f64, mu: f64) -> ClaimRecord {
    let mut c = ClaimRecord::new("good_step_decrease", None, 1e-8);
    let r = mu / trace.lipschitz;
    for (_, a, b) in steps(trace) {
        let factor = match a.step_kind {
            Some(StepKind::GoodShort) => 1.0 - r * a.dsb * a.dsb,
            Some(StepKind::FullFw) => 1.0 / (1.0 + r),
            _ => continue,
        };
        c.observe((b.f - f_star) - factor * (a.f - f_star));
    }
    c
}

/// The number of good steps re-derived from the recorded stepsizes matches
/// the solver's count.
pub fn verify_good_step_count(trace: &RunTrace) -> ClaimRecord {
    let mut c = ClaimRecord::new("good_step_count", None, 0.0);
    let recount = trace
        .records
        .iter()
        .filter(|r| match r.step_kind {
            Some(StepKind::SscOuter) => true,
            Some(_) => {
                let full = r.direction == Some(crate::directions::DirectionKind::FrankWolfe)
                    && r.alpha_max == 1.0
                    && r.alpha == 1.0;
                let short = r.alpha < r.alpha_max
                    || (trace.stepsize == StepsizeRule::Lipschitz && r.alpha_bar <= r.alpha_max);
                short || full
            }
            None => false,
        })
        .count();
    c.observe((recount as f64 - trace.good_step_count as f64).abs());
    c.with_note(format!("{recount} good of {} steps", trace.steps()))
}

/// No bad outer steps and a single gradient evaluation per outer iteration.
pub fn verify_no_bad_steps(trace: &RunTrace) -> ClaimRecord {
    let mut c = ClaimRecord::new("no_bad_steps", None, 0.0);
    let bad = trace
        .records
        .iter()
        .filter(|r| r.step_kind.is_some_and(|k| !k.is_good()))
        .count();
    c.observe(bad.max(trace.bad_step_count) as f64);
    c.observe((trace.gradient_calls as f64 - trace.records.len() as f64).abs());
    c
}

/// Chains stop within `|S_0| + 1` steps (active-set rules) and make at most
/// `dim + 1` consecutive maximal in-face steps.
pub fn verify_ssc_termination(trace: &RunTrace, polytope_dim: usize, tracks_active_set: bool) -> ClaimRecord {
    let mut c = ClaimRecord::new("ssc_termination", None, 0.0);
    for r in &trace.records {
        let Some(ch) = &r.chain else { continue };
        if tracks_active_set {
            c.observe(ch.inner_count as f64 - (ch.initial_support + 1) as f64);
        } else {
            c.observe(ch.max_consecutive_maximal_in_face as f64 - (polytope_dim + 1) as f64);
        }
    }
    c
}

/// `‖x_{k+1} − x_k‖ ≥ K·π(x̃_k)` and
/// `f(x_{k+1}) ≤ f(x̃_k) ≤ f(x_k) − (L/2)‖x_k − x̃_k‖²`.
pub fn verify_hidden_points(trace: &RunTrace, tau: f64) -> Result<(ClaimRecord, ClaimRecord)> {
    let k = hidden_constant(trace.lipschitz, tau)?;
    let l = trace.lipschitz;
    let mut length = ClaimRecord::new("hidden_point_step_length", Some(k), 1e-7);
    let mut values = ClaimRecord::new("hidden_point_values", None, 1e-9);
    for (_, a, b) in steps(trace) {
        let Some(ch) = &a.chain else { continue };
        length.observe(k * ch.hidden_stationarity - a.step_norm);
        values.observe(b.f - ch.hidden_f);
        values.observe(ch.hidden_f - (a.f - 0.5 * l * ch.hidden_distance * ch.hidden_distance));
    }
    Ok((length, values))
}

/// `min_{i≤k} π(x̃_i) ≤ √(2(f_0 − f̃)/(K²L(k+1)))` for `k ≤ horizon`, plus the
/// step-length form `min π(x̃_i) ≤ min ‖x_{i+1} − x_i‖ / K` and the gap chain
/// `min G(x̃_i) ≤ D·min π(x̃_i)`.
pub fn verify_sqrt_rate(
    trace: &RunTrace,
    k_const: f64,
    f_tilde: f64,
    horizon: Option<usize>,
) -> [ClaimRecord; 3] {
    let l = trace.lipschitz;
    let mut rate = ClaimRecord::new("sqrt_rate", Some(k_const), 1e-7);
    let mut by_step = ClaimRecord::new("sqrt_rate_step_length", Some(k_const), 1e-7);
    let mut gap = ClaimRecord::new("hidden_gap_chain", Some(trace.diameter), 1e-10);
    let Some(first) = trace.records.first() else {
        return [rate, by_step, gap];
    };
    let f0 = first.f;
    let mut min_pi = f64::INFINITY;
    let mut min_step = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for (k, r) in trace.records.iter().enumerate() {
        if horizon.is_some_and(|h| k > h) {
            break;
        }
        let Some(ch) = &r.chain else { continue };
        min_pi = min_pi.min(ch.hidden_stationarity);
        min_step = min_step.min(r.step_norm);
        min_gap = min_gap.min(ch.hidden_gap);
        let bound = (2.0 * (f0 - f_tilde).max(0.0) / (k_const * k_const * l * (k as f64 + 1.0))).sqrt();
        rate.observe(relative_excess(min_pi, bound + SQRT_RATE_FLOOR));
        by_step.observe(relative_excess(min_pi, min_step / k_const + SQRT_RATE_FLOOR));
        gap.observe(min_gap - trace.diameter * min_pi);
    }
    [rate, by_step, gap]
}

/// `‖x_k − x̃*‖ ≤ √(2(f_0 − f*)(1 − q))/(√L(1 − √q)) · q^{k/2}` with the
/// final iterate as `x̃*`. Also returns the variant with `√(2 − 2q)(f_0 − f*)`
/// in the numerator as an informational record.
pub fn verify_tail_length(trace: &RunTrace, f_star: f64, q: f64) -> (ClaimRecord, ClaimRecord) {
    let l = trace.lipschitz;
    let mut main = ClaimRecord::new("tail_length", Some(q), 1e-6);
    let mut alt = ClaimRecord::new("tail_length_statement_form", Some(q), 1e-6);
    let Some(first) = trace.records.first() else {
        return (main, alt.informational());
    };
    let h0 = (first.f - f_star).max(0.0);
    let denom = l.sqrt() * (1.0 - q.sqrt());
    let pre_main = (2.0 * h0 * (1.0 - q)).sqrt() / denom;
    let pre_alt = (2.0 - 2.0 * q).sqrt() * h0 / denom;
    let last = &trace.final_point;
    for (k, r) in trace.records.iter().enumerate() {
        let decay = q.powf(k as f64 / 2.0);
        let len = dist(&r.point, last);
        main.observe(relative_excess(len, pre_main * decay));
        alt.observe(relative_excess(len, pre_alt * decay));
    }
    let alt_passed = alt.passed;
    if pre_main > trace.diameter {
        main = main.with_note("vacuous: bound(0) exceeds the diameter");
    }
    let alt = alt
        .informational()
        .with_note(if alt_passed { "holds" } else { "violated" });
    (main, alt)
}

/// `q̄` for good steps: `max(1 − (μ/L)τ², (1 + μ/L)⁻¹)` when full Frank-Wolfe
/// steps are possible, `1 − (μ/L)τ²` otherwise.
pub fn good_step_factor(mu: f64, l: f64, tau: f64, full_fw_steps: bool) -> Result<f64> {
    let c = rate_constants(mu, l, tau)?;
    Ok(if full_fw_steps {
        c.q_gs_short.max(c.q_gs_fw)
    } else {
        c.q_gs_short
    })
}

/// What is known about the problem behind a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyContext {
    /// Angle bound of the direction rule.
    pub tau: f64,
    pub polytope_dim: usize,
    pub tracks_active_set: bool,
    pub full_fw_steps: bool,
    /// Reference optimum for convex problems.
    pub f_star: Option<f64>,
    /// Limit on `k` for the square-root rate.
    pub sqrt_horizon: Option<usize>,
}

/// Every claim that applies to the trace's wrapper and known constants.
pub fn verify_trace(trace: &RunTrace, ctx: &VerifyContext) -> Result<RateReport> {
    let mut claims = vec![
        verify_sufficient_decrease(trace),
        verify_monotone(trace),
        verify_gap_inequality(trace),
    ];
    let convex = match (trace.mu, ctx.f_star) {
        (Some(mu), Some(f_star)) => Some((mu, f_star)),
        _ => None,
    };
    match trace.wrapper {
        Wrapper::Plain => {
            claims.push(verify_good_step_count(trace));
            if let Some((mu, f_star)) = convex {
                claims.push(verify_good_step_decrease(trace, f_star, mu));
                let q_gs = good_step_factor(mu, trace.lipschitz, ctx.tau, ctx.full_fw_steps)?;
                claims.push(verify_good_step_rate(trace, f_star, q_gs));
            }
        }
        Wrapper::Ssc => {
            claims.push(verify_no_bad_steps(trace));
            claims.push(verify_ssc_termination(trace, ctx.polytope_dim, ctx.tracks_active_set));
            let (length, values) = verify_hidden_points(trace, ctx.tau)?;
            claims.push(length);
            claims.push(values);
            let k = hidden_constant(trace.lipschitz, ctx.tau)?;
            let f_tilde = trace.final_f();
            claims.extend(verify_sqrt_rate(trace, k, f_tilde, ctx.sqrt_horizon));
            if let Some((mu, f_star)) = convex {
                let q = rate_constants(mu, trace.lipschitz, ctx.tau)?.q;
                claims.push(verify_linear_rate(trace, f_star, q)?);
                let (main, alt) = verify_tail_length(trace, f_star, q);
                claims.push(main);
                claims.push(alt);
            }
        }
    }
    Ok(RateReport { claims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{IterationRecord, StopReason};

    fn record(k: usize, f: f64, point: Vec<f64>, kind: Option<StepKind>) -> IterationRecord {
        IterationRecord {
            k,
            f,
            stationarity: 1.0,
            gap: 0.5,
            step_kind: kind,
            direction: None,
            step_norm: 0.0,
            alpha: 0.0,
            alpha_bar: 0.0,
            alpha_max: 1.0,
            dsb: 1.0,
            chain: None,
            point,
        }
    }

    fn trace(records: Vec<IterationRecord>, wrapper: Wrapper) -> RunTrace {
        let final_point = records.last().unwrap().point.clone();
        RunTrace {
            method: "afw".into(),
            wrapper,
            stepsize: StepsizeRule::Lipschitz,
            region: "test".into(),
            lipschitz: 1.0,
            mu: Some(0.5),
            diameter: 2.0f64.sqrt(),
            tol: 1e-8,
            budget: 10,
            good_step_count: records.len() - 1,
            bad_step_count: 0,
            gradient_calls: records.len(),
            final_point,
            stop_reason: StopReason::Budget,
            records,
        }
    }

    #[test]
    fn zero_length_step_passes_decrease() {
        let t = trace(
            vec![
                record(0, 1.0, vec![0.0], Some(StepKind::SscOuter)),
                record(1, 1.0, vec![0.0], None),
            ],
            Wrapper::Ssc,
        );
        let c = verify_sufficient_decrease(&t);
        assert!(c.passed);
        assert_eq!(c.worst_violation, Some(0.0));
    }

    #[test]
    fn linear_rate_detects_violations() {
        let t = trace(
            vec![
                record(0, 1.0, vec![0.0], Some(StepKind::SscOuter)),
                record(1, 0.5, vec![0.1], Some(StepKind::SscOuter)),
                record(2, 0.3, vec![0.1], None),
            ],
            Wrapper::Ssc,
        );
        assert!(verify_linear_rate(&t, 0.0, 0.6).unwrap().passed);
        assert!(!verify_linear_rate(&t, 0.0, 0.5).unwrap().passed);
        assert_eq!(
            verify_linear_rate(&t, 0.4, 0.9).unwrap_err(),
            Error::WrongReference {
                f_star: 0.4,
                observed: 0.3
            }
        );
        let k0 = verify_linear_rate(&trace(vec![record(0, 1.0, vec![0.0], None)], Wrapper::Ssc), 0.0, 0.5).unwrap();
        assert_eq!(k0.worst_violation, Some(0.0));
    }

    #[test]
    fn sqrt_bound_at_zero() {
        let mut r0 = record(0, 2.0, vec![0.0], Some(StepKind::SscOuter));
        r0.step_norm = 1.0;
        r0.chain = Some(crate::solver::ChainSummary {
            inner_count: 1,
            termination_case: 3,
            hidden_index: 0,
            initial_support: 1,
            max_consecutive_maximal_in_face: 0,
            hidden_f: 2.0,
            hidden_stationarity: 2.0,
            hidden_gap: 1.0,
            hidden_distance: 0.0,
        });
        let t = trace(vec![r0, record(1, 1.0, vec![1.0], None)], Wrapper::Ssc);
        // bound at k = 0 is √(2(f0 − f̃)/(K²L)) = √2/K
        let k = 0.5;
        let [rate, _, _] = verify_sqrt_rate(&t, k, 1.0, None);
        let expected = (2.0f64).sqrt() / k;
        assert!((rate.worst_violation.unwrap() - (2.0 - expected) / expected).abs() < 1e-9);
    }

    #[test]
    fn tail_vacuous_flag() {
        let t = trace(
            vec![
                record(0, 1.0, vec![0.0], Some(StepKind::SscOuter)),
                record(1, 0.0, vec![0.1], None),
            ],
            Wrapper::Ssc,
        );
        let (main, alt) = verify_tail_length(&t, 0.0, 0.999);
        assert!(main.passed && alt.informational);
        assert!(main.note.unwrap().contains("vacuous"));
    }

    #[test]
    fn verification_is_pure() {
        let t = trace(
            vec![
                record(0, 1.0, vec![0.0], Some(StepKind::GoodShort)),
                record(1, 0.4, vec![0.5], None),
            ],
            Wrapper::Plain,
        );
        let ctx = VerifyContext {
            tau: 0.4,
            polytope_dim: 1,
            tracks_active_set: true,
            full_fw_steps: true,
            f_star: Some(0.0),
            sqrt_horizon: None,
        };
        let a = serde_json::to_string(&verify_trace(&t, &ctx).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_trace(&t, &ctx).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
