//! Outer loops: the plain first-order method and its short-step-chain
//! version, with per-iteration trace recording.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::directions::{apply_step, dsb_from_parts, ActiveIterate, DirectionKind};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::method::DirectionRule;
use crate::objective::SmoothObjective;
use crate::region::Region;
use crate::ssc::run_ssc;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    GoodShort,
    FullFw,
    BadMaximal,
    SscOuter,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::GoodShort => "good_short",
            StepKind::FullFw => "full_fw",
            StepKind::BadMaximal => "bad_maximal",
            StepKind::SscOuter => "ssc_outer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [StepKind::GoodShort, StepKind::FullFw, StepKind::BadMaximal, StepKind::SscOuter]
            .into_iter()
            .find(|k| k.as_str() == s)
    }

    pub fn is_good(self) -> bool {
        matches!(self, StepKind::GoodShort | StepKind::FullFw | StepKind::SscOuter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stationary,
    /// The direction rule found no descent direction while the stationarity
    /// measure was still above tolerance.
    NoDescent,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsizeRule {
    #[default]
    Lipschitz,
    Linesearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wrapper {
    Plain,
    Ssc,
}

impl Wrapper {
    pub fn as_str(self) -> &'static str {
        match self {
            Wrapper::Plain => "plain",
            Wrapper::Ssc => "ssc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub budget: usize,
    pub tol: f64,
    pub stepsize: StepsizeRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
            stepsize: StepsizeRule::Lipschitz,
        }
    }
}

/// Step statistics of one chain, kept on the outer record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub inner_count: usize,
    pub termination_case: u8,
    pub hidden_index: usize,
    pub initial_support: usize,
    pub max_consecutive_maximal_in_face: usize,
    /// `f(x̃_k)`.
    pub hidden_f: f64,
    /// `π_{x̃_k}(-∇f(x̃_k))`.
    pub hidden_stationarity: f64,
    pub hidden_gap: f64,
    /// `‖x_k − x̃_k‖`.
    pub hidden_distance: f64,
}

/// State at `x_k` and, unless it is the last record, the step to `x_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    /// `π_{x_k}(-∇f(x_k))`.
    pub stationarity: f64,
    /// `G(x_k)`.
    pub gap: f64,
    pub step_kind: Option<StepKind>,
    pub direction: Option<DirectionKind>,
    pub step_norm: f64,
    pub alpha: f64,
    /// Unclipped short step `⟨g,d⟩/(L‖d‖²)` of the plain method.
    pub alpha_bar: f64,
    pub alpha_max: f64,
    /// Slope ratio of the plain direction at `x_k`.
    pub dsb: f64,
    pub chain: Option<ChainSummary>,
    pub point: Vec<f64>,
}

impl IterationRecord {
    fn at(k: usize, f: f64, stationarity: f64, gap: f64, point: Vec<f64>) -> Self {
        Self {
            k,
            f,
            stationarity,
            gap,
            step_kind: None,
            direction: None,
            step_norm: 0.0,
            alpha: 0.0,
            alpha_bar: f64::NAN,
            alpha_max: f64::NAN,
            dsb: f64::NAN,
            chain: None,
            point,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub method: String,
    pub wrapper: Wrapper,
    pub stepsize: StepsizeRule,
    pub region: String,
    pub lipschitz: f64,
    pub mu: Option<f64>,
    pub diameter: f64,
    pub tol: f64,
    pub budget: usize,
    pub records: Vec<IterationRecord>,
    pub good_step_count: usize,
    pub bad_step_count: usize,
    pub gradient_calls: usize,
    pub final_point: Vec<f64>,
    pub stop_reason: StopReason,
}

impl RunTrace {
    /// Number of steps taken, i.e. records minus the final one.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_f(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.f)
    }

    pub fn final_stationarity(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.stationarity)
    }
}

struct Counted<'a> {
    obj: &'a dyn SmoothObjective,
    calls: Cell<usize>,
}

impl Counted<'_> {
    fn neg_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.calls.set(self.calls.get() + 1);
        self.obj.gradient(x).into_iter().map(|v| -v).collect()
    }
}

fn check_start(obj: &dyn SmoothObjective, region: &Region, x0: &ActiveIterate) -> Result<()> {
    if obj.dim() != region.dim() || x0.point().len() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: x0.point().len(),
        });
    }
    let violation = region.max_violation(x0.point())?;
    if violation > 1e-9 || x0.reconstruction_error(region) > 1e-9 {
        return Err(Error::Infeasible {
            violation: violation.max(x0.reconstruction_error(region)),
        });
    }
    Ok(())
}

fn new_trace(
    rule: &dyn DirectionRule,
    wrapper: Wrapper,
    obj: &dyn SmoothObjective,
    region: &Region,
    options: &SolverOptions,
) -> RunTrace {
    RunTrace {
        method: rule.name().to_string(),
        wrapper,
        stepsize: options.stepsize,
        region: region.label(),
        lipschitz: obj.lipschitz(),
        mu: obj.strong_mu(),
        diameter: region.diameter(),
        tol: options.tol,
        budget: options.budget,
        records: Vec::new(),
        good_step_count: 0,
        bad_step_count: 0,
        gradient_calls: 0,
        final_point: Vec::new(),
        stop_reason: StopReason::Budget,
    }
}

/// Plain first-order method: `x_{k+1} = x_k + α_k d_k` with
/// `α_k = min(ᾱ_k, α_max)` or the exact linesearch step capped at `α_max`.
pub fn run_plain(
    rule: &dyn DirectionRule,
    obj: &dyn SmoothObjective,
    region: &Region,
    x0: ActiveIterate,
    options: &SolverOptions,
) -> Result<RunTrace> {
    check_start(obj, region, &x0)?;
    let counted = Counted {
        obj,
        calls: Cell::new(0),
    };
    let l = obj.lipschitz();
    let mut trace = new_trace(rule, Wrapper::Plain, obj, region, options);
    let mut x = rule.prepare(x0);
    for k in 0.. {
        let g = counted.neg_gradient(x.point());
        let pi = region.tangent_projection_norm(x.point(), &g)?;
        let gap = region.fw_gap(x.point(), &g)?;
        let mut rec = IterationRecord::at(k, obj.value(x.point()), pi, gap, x.point().to_vec());
        if pi <= options.tol {
            trace.stop_reason = StopReason::Stationary;
            trace.records.push(rec);
            break;
        }
        if k >= options.budget {
            trace.stop_reason = StopReason::Budget;
            trace.records.push(rec);
            break;
        }
        let p = rule.propose(region, &x, &g)?;
        if p.is_stationary() {
            trace.stop_reason = StopReason::NoDescent;
            trace.records.push(rec);
            break;
        }
        let dn = norm(&p.d);
        let alpha_bar = p.slope / (l * dn * dn);
        let target = match options.stepsize {
            StepsizeRule::Lipschitz => alpha_bar,
            StepsizeRule::Linesearch => obj
                .exact_linesearch(x.point(), &p.d)
                .ok_or(Error::MissingConstant("exact_linesearch"))??,
        };
        let short = target <= p.alpha_max;
        let alpha = if short { target } else { p.alpha_max };
        let kind = if short {
            StepKind::GoodShort
        } else if p.kind == DirectionKind::FrankWolfe && p.alpha_max == 1.0 {
            StepKind::FullFw
        } else {
            StepKind::BadMaximal
        };
        let next = apply_step(region, &x, &p, alpha)?;
        rec.step_kind = Some(kind);
        rec.direction = Some(p.kind);
        rec.step_norm = dist(next.point(), x.point());
        rec.alpha = alpha;
        rec.alpha_bar = alpha_bar;
        rec.alpha_max = p.alpha_max;
        rec.dsb = dsb_from_parts(p.slope, dn, pi);
        trace.records.push(rec);
        if kind.is_good() {
            trace.good_step_count += 1;
        } else {
            trace.bad_step_count += 1;
        }
        x = next;
    }
    trace.gradient_calls = counted.calls.get();
    trace.final_point = x.point().to_vec();
    Ok(trace)
}

/// First-order method whose every outer step is a short step chain with the
/// gradient frozen at `x_k`.
pub fn run_with_ssc(
    rule: &dyn DirectionRule,
    obj: &dyn SmoothObjective,
    region: &Region,
    x0: ActiveIterate,
    options: &SolverOptions,
) -> Result<RunTrace> {
    check_start(obj, region, &x0)?;
    let counted = Counted {
        obj,
        calls: Cell::new(0),
    };
    let l = obj.lipschitz();
    let mut trace = new_trace(rule, Wrapper::Ssc, obj, region, options);
    let mut x = rule.prepare(x0);
    for k in 0.. {
        let g = counted.neg_gradient(x.point());
        let pi = region.tangent_projection_norm(x.point(), &g)?;
        let gap = region.fw_gap(x.point(), &g)?;
        let mut rec = IterationRecord::at(k, obj.value(x.point()), pi, gap, x.point().to_vec());
        if pi <= options.tol {
            trace.stop_reason = StopReason::Stationary;
            trace.records.push(rec);
            break;
        }
        if k >= options.budget {
            trace.stop_reason = StopReason::Budget;
            trace.records.push(rec);
            break;
        }
        let (next, chain) = run_ssc(rule, region, l, &x, &g)?;
        if chain.inner_count == 0 {
            trace.stop_reason = StopReason::NoDescent;
            trace.records.push(rec);
            break;
        }
        let hidden = chain.hidden_point();
        let hidden_g: Vec<f64> = obj.gradient(hidden).into_iter().map(|v| -v).collect();
        let first = &chain.directions[0];
        rec.step_kind = Some(StepKind::SscOuter);
        rec.direction = Some(first.kind);
        rec.step_norm = dist(next.point(), x.point());
        rec.alpha = chain.alphas[0];
        rec.alpha_bar = first.slope / (l * first.norm() * first.norm());
        rec.alpha_max = first.alpha_max;
        rec.dsb = dsb_from_parts(first.slope, first.norm(), pi);
        rec.chain = Some(ChainSummary {
            inner_count: chain.inner_count,
            termination_case: chain.termination_case.number(),
            hidden_index: chain.hidden_index,
            initial_support: chain.initial_support,
            max_consecutive_maximal_in_face: chain.max_consecutive_maximal_in_face,
            hidden_f: obj.value(hidden),
            hidden_stationarity: region.tangent_projection_norm(hidden, &hidden_g)?,
            hidden_gap: region.fw_gap(hidden, &hidden_g)?,
            hidden_distance: dist(hidden, x.point()),
        });
        trace.records.push(rec);
        trace.good_step_count += 1;
        x = next;
    }
    trace.gradient_calls = counted.calls.get();
    trace.final_point = x.point().to_vec();
    Ok(trace)
}

pub fn run(
    wrapper: Wrapper,
    rule: &dyn DirectionRule,
    obj: &dyn SmoothObjective,
    region: &Region,
    x0: ActiveIterate,
    options: &SolverOptions,
) -> Result<RunTrace> {
    match wrapper {
        Wrapper::Plain => run_plain(rule, obj, region, x0, options),
        Wrapper::Ssc => run_with_ssc(rule, obj, region, x0, options),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::method::{AwayStepFw, FaceDirectionFw, PairwiseFw};
    use crate::objective::QuadraticObjective;

    #[test]
    fn starts_at_minimizer() {
        let s = Region::simplex(3).unwrap();
        let obj = QuadraticObjective::distance_squared(&[1.0, 0.0, 0.0]).unwrap();
        let x0 = ActiveIterate::from_atom(&s, 0).unwrap();
        let opts = SolverOptions::default();
        for wrapper in [Wrapper::Plain, Wrapper::Ssc] {
            let t = run(wrapper, &AwayStepFw, &obj, &s, x0.clone(), &opts).unwrap();
            assert_eq!(t.steps(), 0);
            assert_eq!(t.stop_reason, StopReason::Stationary);
            assert_eq!(t.gradient_calls, 1);
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let s = Region::simplex(3).unwrap();
        let obj = QuadraticObjective::distance_squared(&[1.0, 0.0, 0.0]).unwrap();
        let x0 = ActiveIterate::point_only(vec![0.5, 0.5, 0.5]);
        let err = run_plain(&FaceDirectionFw, &obj, &s, x0, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn all_variants_converge() {
        let s = Region::simplex(5).unwrap();
        let obj = QuadraticObjective::strongly_convex(5, 0.1, 1.0, 3).unwrap();
        let x0 = ActiveIterate::from_atom(&s, 0).unwrap();
        let opts = SolverOptions {
            budget: 20_000,
            ..SolverOptions::default()
        };
        let rules: [&dyn DirectionRule; 3] = [&AwayStepFw, &PairwiseFw, &FaceDirectionFw];
        for rule in rules {
            for wrapper in [Wrapper::Plain, Wrapper::Ssc] {
                let t = run(wrapper, rule, &obj, &s, x0.clone(), &opts).unwrap();
                assert_eq!(t.stop_reason, StopReason::Stationary, "{} {:?}", rule.name(), wrapper);
                for w in t.records.windows(2) {
                    assert!(w[1].f <= w[0].f + 1e-10);
                }
                assert_eq!(t.gradient_calls, t.records.len());
                if wrapper == Wrapper::Ssc {
                    assert_eq!(t.bad_step_count, 0);
                } else {
                    assert_eq!(t.good_step_count + t.bad_step_count, t.steps());
                }
            }
        }
    }

    #[test]
    fn linesearch_rule_runs() {
        let c = Region::hypercube(3).unwrap();
        let obj = QuadraticObjective::strongly_convex(3, 0.2, 1.0, 9).unwrap();
        let opts = SolverOptions {
            stepsize: StepsizeRule::Linesearch,
            ..SolverOptions::default()
        };
        let t = run_plain(&AwayStepFw, &obj, &c, ActiveIterate::from_atom(&c, 0).unwrap(), &opts).unwrap();
        assert_eq!(t.stop_reason, StopReason::Stationary);
    }
}
