//! Short step chains: repeated steps of a direction rule with the gradient
//! held fixed, cut off by a two-ball trust region.

use serde::{Deserialize, Serialize};

use crate::directions::{apply_step, ActiveIterate, DirectionKind, DirectionProposal};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, dot, norm, scale, sub};
use crate::method::DirectionRule;
use crate::region::Region;

/// Absolute slack on squared distances in ball membership tests.
pub const BALL_SLACK: f64 = 1e-12;
/// `α = β` is declared when the two agree to this tolerance.
pub const BETA_TIE: f64 = 1e-14;

/// How a chain ended, numbered as in the hidden-point argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCase {
    /// No descent direction left, or a full step onto the linear maximizer.
    StationaryOrZeroDir,
    /// The current point already lies outside the slope ball.
    OutsideSecondBall,
    /// The last step stopped on the slope ball boundary.
    SecondBallBoundary,
    /// The last step stopped on the decrease ball boundary.
    FirstBallBoundary,
}

impl TerminationCase {
    pub fn number(self) -> u8 {
        match self {
            TerminationCase::StationaryOrZeroDir => 1,
            TerminationCase::OutsideSecondBall => 2,
            TerminationCase::SecondBallBoundary => 3,
            TerminationCase::FirstBallBoundary => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SscTrace {
    /// `y_0 = x̄, …, y_T`.
    pub y_points: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub alpha_maxes: Vec<f64>,
    /// Every proposal made, including a final stationary one.
    pub directions: Vec<DirectionProposal>,
    /// `⟨g, d_j/‖d_j‖⟩` for each step taken.
    pub slopes_hat: Vec<f64>,
    pub termination_case: TerminationCase,
    pub hidden_index: usize,
    /// Number of steps taken, `T`.
    pub inner_count: usize,
    /// Active-set size at `y_0`; zero for point-only iterates.
    pub initial_support: usize,
    pub max_consecutive_maximal_in_face: usize,
}

impl SscTrace {
    pub fn hidden_point(&self) -> &[f64] {
        &self.y_points[self.hidden_index]
    }

    pub fn last_point(&self) -> &[f64] {
        self.y_points.last().expect("trace holds y_0")
    }
}

/// Largest `β ≥ 0` keeping `y + βd` in the closed ball `B(center, radius)`.
pub fn ball_exit_step(center: &[f64], radius: f64, y: &[f64], d: &[f64]) -> Result<f64> {
    let dd = dot(d, d);
    if dd == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let w = sub(y, center);
    let ww = dot(&w, &w);
    let r2 = radius * radius;
    if ww > r2 + BALL_SLACK {
        return Err(Error::OutsideBall);
    }
    let b = dot(&w, d);
    let mut disc = b * b + dd * (r2 - ww);
    if disc < 0.0 {
        if disc >= -1e-14 {
            disc = 0.0;
        } else {
            // inside only thanks to the slack: treat as on the boundary
            disc = b * b;
        }
    }
    Ok(((-b + disc.sqrt()) / dd).max(0.0))
}

/// The two trust-region balls for a chain started at `x̄` with direction `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BetaParts {
    pub beta: f64,
    pub decrease_exit: f64,
    pub slope_exit: f64,
}

pub(crate) fn beta_parts(x_bar: &[f64], g: &[f64], l: f64, y: &[f64], d: &[f64]) -> Result<BetaParts> {
    let dn = norm(d);
    if dn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let gn = norm(g);
    let decrease_center: Vec<f64> = x_bar
        .iter()
        .zip(g)
        .map(|(x, gi)| x + gi / (2.0 * l))
        .collect();
    let decrease_radius = gn / (2.0 * l);
    let slope_radius = (dot(g, d) / dn / l).max(0.0);
    let outside = |c: &[f64], r: f64| dist_sq(y, c) > r * r + BALL_SLACK;
    if outside(&decrease_center, decrease_radius) || outside(x_bar, slope_radius) {
        return Ok(BetaParts {
            beta: 0.0,
            decrease_exit: 0.0,
            slope_exit: 0.0,
        });
    }
    let decrease_exit = ball_exit_step(&decrease_center, decrease_radius, y, d)?;
    let slope_exit = ball_exit_step(x_bar, slope_radius, y, d)?;
    Ok(BetaParts {
        beta: decrease_exit.min(slope_exit),
        decrease_exit,
        slope_exit,
    })
}

/// Maximal step from `y` along `d` inside the trust region, or 0 when `y`
/// has already left it.
pub fn beta_step(x_bar: &[f64], g: &[f64], l: f64, y: &[f64], d: &[f64]) -> Result<f64> {
    Ok(beta_parts(x_bar, g, l, y, d)?.beta)
}

/// Run the chain from `x̄` with the fixed vector `g = -∇f(x̄)`.
pub fn run_ssc(
    rule: &dyn DirectionRule,
    region: &Region,
    lipschitz: f64,
    x_bar: &ActiveIterate,
    g: &[f64],
) -> Result<(ActiveIterate, SscTrace)> {
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter("Lipschitz constant must be positive".into()));
    }
    let cap = region.atoms().len() + region.dim() + 2;
    let origin = x_bar.point().to_vec();
    let mut y = x_bar.clone();
    let mut trace = SscTrace {
        y_points: vec![origin.clone()],
        alphas: Vec::new(),
        betas: Vec::new(),
        alpha_maxes: Vec::new(),
        directions: Vec::new(),
        slopes_hat: Vec::new(),
        termination_case: TerminationCase::StationaryOrZeroDir,
        hidden_index: 0,
        inner_count: 0,
        initial_support: x_bar.support_size(),
        max_consecutive_maximal_in_face: 0,
    };
    let mut inface_run = 0usize;

    loop {
        let j = trace.inner_count;
        if j >= cap {
            return Err(Error::SafetyCap { cap });
        }
        let proposal = rule.propose(region, &y, g)?;
        let stationary = proposal.is_stationary();
        trace.directions.push(proposal.clone());
        if stationary {
            trace.termination_case = TerminationCase::StationaryOrZeroDir;
            trace.hidden_index = j;
            return Ok((y, trace));
        }

        let parts = beta_parts(&origin, g, lipschitz, y.point(), &proposal.d)?;
        let beta = parts.beta;
        let alpha_max = proposal.alpha_max;
        let beta_limited = beta <= alpha_max + BETA_TIE;
        let alpha = if beta_limited { beta } else { alpha_max };

        trace.slopes_hat.push(proposal.unit_slope());
        trace.betas.push(beta);
        trace.alpha_maxes.push(alpha_max);
        trace.alphas.push(alpha);

        let step_alpha = alpha.min(alpha_max);
        y = apply_step(region, &y, &proposal, step_alpha)?;
        trace.y_points.push(y.point().to_vec());
        trace.inner_count = j + 1;

        if !beta_limited && proposal.kind == DirectionKind::InFace {
            inface_run += 1;
            trace.max_consecutive_maximal_in_face = trace.max_consecutive_maximal_in_face.max(inface_run);
        } else {
            inface_run = 0;
        }

        let t = j + 1;
        if beta_limited {
            if beta == 0.0 {
                trace.termination_case = TerminationCase::OutsideSecondBall;
                trace.hidden_index = t;
            } else if parts.slope_exit <= parts.decrease_exit * (1.0 + 1e-12) {
                trace.termination_case = TerminationCase::SecondBallBoundary;
                trace.hidden_index = t - 1;
            } else {
                trace.termination_case = TerminationCase::FirstBallBoundary;
                trace.hidden_index = argmin_lowest(&trace.slopes_hat);
            }
            return Ok((y, trace));
        }
        if proposal.kind == DirectionKind::FrankWolfe && alpha_max == 1.0 {
            trace.termination_case = TerminationCase::StationaryOrZeroDir;
            trace.hidden_index = t;
            return Ok((y, trace));
        }
    }
}

fn argmin_lowest(values: &[f64]) -> usize {
    crate::linalg::argmax_lowest(values.iter().map(|v| -v)).unwrap_or(0)
}

/// Centre of the decrease ball, `x̄ + g/(2L)`.
pub fn decrease_center(x_bar: &[f64], g: &[f64], l: f64) -> Vec<f64> {
    crate::linalg::add_scaled(x_bar, 1.0, &scale(g, 1.0 / (2.0 * l)))
}
