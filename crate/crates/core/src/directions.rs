//! Active sets and the four Frank-Wolfe direction rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};
use crate::region::Region;

/// Weights at or below this are dropped from the active set.
pub const DROP_TOL: f64 = 1e-12;
/// A direction with norm or slope at or below this counts as zero.
pub const STATIONARY_TOL: f64 = 1e-12;

/// A feasible point, optionally stored as an explicit convex combination of
/// atoms. The face-direction method works on the point alone and leaves
/// `weights` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveIterate {
    point: Vec<f64>,
    weights: BTreeMap<usize, f64>,
}

impl ActiveIterate {
    pub fn from_atom(region: &Region, index: usize) -> Result<Self> {
        if index >= region.atoms().len() {
            return Err(Error::InvalidParameter(format!("atom index {index} out of range")));
        }
        Ok(Self {
            point: region.atoms().atom(index).to_vec(),
            weights: BTreeMap::from([(index, 1.0)]),
        })
    }

    pub fn from_weights(region: &Region, weights: BTreeMap<usize, f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        if weights.keys().any(|&k| k >= region.atoms().len()) {
            return Err(Error::InvalidParameter("atom index out of range".into()));
        }
        if weights.values().any(|&w| !(w > DROP_TOL)) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::WeightDrift { sum });
        }
        let point = combine(region, &weights);
        Ok(Self { point, weights })
    }

    /// Uniform weights over every atom.
    pub fn barycenter(region: &Region) -> Self {
        let m = region.atoms().len();
        let weights: BTreeMap<usize, f64> = (0..m).map(|k| (k, 1.0 / m as f64)).collect();
        let point = combine(region, &weights);
        Self { point, weights }
    }

    /// A point without active-set bookkeeping.
    pub fn point_only(point: Vec<f64>) -> Self {
        Self {
            point,
            weights: BTreeMap::new(),
        }
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn weights(&self) -> &BTreeMap<usize, f64> {
        &self.weights
    }

    pub fn tracks_weights(&self) -> bool {
        !self.weights.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn into_point_only(self) -> Self {
        Self::point_only(self.point)
    }

    /// Max deviation of `point` from `Σ λ_a a`.
    pub fn reconstruction_error(&self, region: &Region) -> f64 {
        if !self.tracks_weights() {
            return 0.0;
        }
        let p = combine(region, &self.weights);
        p.iter()
            .zip(&self.point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn combine(region: &Region, weights: &BTreeMap<usize, f64>) -> Vec<f64> {
    let mut p = vec![0.0; region.dim()];
    for (&k, &w) in weights {
        for (pi, ai) in p.iter_mut().zip(region.atoms().atom(k)) {
            *pi += w * ai;
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    FrankWolfe,
    Away,
    Pairwise,
    InFace,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::FrankWolfe => "fw",
            DirectionKind::Away => "away",
            DirectionKind::Pairwise => "pairwise",
            DirectionKind::InFace => "in_face",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::FrankWolfe, Self::Away, Self::Pairwise, Self::InFace]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionProposal {
    pub kind: DirectionKind,
    pub d: Vec<f64>,
    /// `⟨g, d⟩`.
    pub slope: f64,
    pub alpha_max: f64,
    pub to_atom: Option<usize>,
    pub from_atom: Option<usize>,
}

impl DirectionProposal {
    fn new(
        kind: DirectionKind,
        d: Vec<f64>,
        g: &[f64],
        alpha_max: f64,
        to_atom: Option<usize>,
        from_atom: Option<usize>,
    ) -> Self {
        let slope = dot(g, &d);
        Self {
            kind,
            d,
            slope,
            alpha_max,
            to_atom,
            from_atom,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.d)
    }

    /// Treat as the zero direction: no descent available for `-g`.
    pub fn is_stationary(&self) -> bool {
        self.norm() <= STATIONARY_TOL || self.slope <= STATIONARY_TOL
    }

    /// `⟨g, d/‖d‖⟩`.
    pub fn unit_slope(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            0.0
        } else {
            self.slope / n
        }
    }
}

/// `d = s - x` towards the linear maximizer `s` of `⟨·, g⟩`.
pub fn fw_direction(region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
    let s = region.lmo(g)?;
    let d = sub(region.atoms().atom(s), iterate.point());
    Ok(DirectionProposal::new(DirectionKind::FrankWolfe, d, g, 1.0, Some(s), None))
}

/// Worst active atom `argmin_{q ∈ S} ⟨q, g⟩`, lowest index on ties.
fn worst_active(region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (&k, &w) in iterate.weights() {
        let v = dot(region.atoms().atom(k), g);
        match best {
            Some((_, bv, _)) if v >= bv => {}
            _ => best = Some((k, v, w)),
        }
    }
    best.map(|(k, _, w)| (k, w)).ok_or(Error::EmptyActiveSet)
}

/// `d = x - q`; maximal step `λ_q / (1 - λ_q)`.
pub fn away_direction(region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
    let (q, lambda_q) = worst_active(region, iterate, g)?;
    if iterate.support_size() == 1 {
        let n = region.dim();
        return Ok(DirectionProposal::new(
            DirectionKind::Away,
            vec![0.0; n],
            g,
            f64::INFINITY,
            None,
            Some(q),
        ));
    }
    let d = sub(iterate.point(), region.atoms().atom(q));
    let alpha_max = lambda_q / (1.0 - lambda_q);
    Ok(DirectionProposal::new(DirectionKind::Away, d, g, alpha_max, None, Some(q)))
}

/// `d = s - q`; maximal step `λ_q`.
pub fn pfw_direction(region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
    let (q, lambda_q) = worst_active(region, iterate, g)?;
    let s = region.lmo(g)?;
    let d = if s == q {
        vec![0.0; region.dim()]
    } else {
        sub(region.atoms().atom(s), region.atoms().atom(q))
    };
    Ok(DirectionProposal::new(
        DirectionKind::Pairwise,
        d,
        g,
        lambda_q,
        Some(s),
        Some(q),
    ))
}

/// Selection ties favor the Frank-Wolfe candidate.
fn prefer_fw(fw: &DirectionProposal, other: &DirectionProposal) -> bool {
    fw.slope >= other.slope - 1e-14 * other.slope.abs().max(1.0)
}

/// Better of the FW and away directions by slope.
pub fn afw_select(region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
    let fw = fw_direction(region, iterate, g)?;
    let away = away_direction(region, iterate, g)?;
    Ok(if prefer_fw(&fw, &away) { fw } else { away })
}

/// Better of the FW and in-face directions by slope; the in-face direction
/// moves away from the worst vertex of the minimal face, with the maximal
/// step from the halfspace ratio test.
pub fn fdfw_select(region: &Region, x: &[f64], g: &[f64]) -> Result<DirectionProposal> {
    let iterate = ActiveIterate::point_only(x.to_vec());
    let fw = fw_direction(region, &iterate, g)?;
    let face = region.minimal_face(x)?;
    let mut worst: Option<(usize, f64)> = None;
    for &k in &face.face_atoms {
        let v = dot(region.atoms().atom(k), g);
        match worst {
            Some((_, bv)) if v >= bv => {}
            _ => worst = Some((k, v)),
        }
    }
    let Some((xf, _)) = worst else {
        return Ok(fw);
    };
    let d = sub(x, region.atoms().atom(xf));
    let in_face = if norm(&d) <= STATIONARY_TOL || face.dim == 0 {
        DirectionProposal::new(DirectionKind::InFace, vec![0.0; x.len()], g, 0.0, None, Some(xf))
    } else {
        let alpha_max = region.max_feasible_step(x, &d)?;
        DirectionProposal::new(DirectionKind::InFace, d, g, alpha_max, None, Some(xf))
    };
    Ok(if prefer_fw(&fw, &in_face) { fw } else { in_face })
}

/// `x + αd` with the weight update matching the direction kind.
pub fn apply_step(
    region: &Region,
    iterate: &ActiveIterate,
    proposal: &DirectionProposal,
    alpha: f64,
) -> Result<ActiveIterate> {
    let alpha_max = proposal.alpha_max;
    if !(alpha >= 0.0) || alpha > alpha_max * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::StepOutOfRange { alpha, alpha_max });
    }
    if alpha == 0.0 {
        return Ok(iterate.clone());
    }
    if !iterate.tracks_weights() {
        let mut p = crate::linalg::add_scaled(iterate.point(), alpha, &proposal.d);
        if proposal.kind == DirectionKind::FrankWolfe && alpha == 1.0 {
            if let Some(s) = proposal.to_atom {
                p = region.atoms().atom(s).to_vec();
            }
        }
        region.clean_point(&mut p);
        return Ok(ActiveIterate::point_only(p));
    }

    let maximal = alpha >= alpha_max;
    let mut w = iterate.weights().clone();
    match proposal.kind {
        DirectionKind::FrankWolfe => {
            let s = proposal.to_atom.ok_or(Error::InvalidParameter("FW proposal without atom".into()))?;
            if maximal {
                w.clear();
                w.insert(s, 1.0);
            } else {
                w.values_mut().for_each(|v| *v *= 1.0 - alpha);
                *w.entry(s).or_insert(0.0) += alpha;
            }
        }
        DirectionKind::Away => {
            let q = proposal.from_atom.ok_or(Error::InvalidParameter("away proposal without atom".into()))?;
            w.values_mut().for_each(|v| *v *= 1.0 + alpha);
            if maximal {
                w.remove(&q);
            } else if let Some(v) = w.get_mut(&q) {
                *v -= alpha;
            }
        }
        DirectionKind::Pairwise => {
            let q = proposal.from_atom.ok_or(Error::InvalidParameter("pairwise proposal without atom".into()))?;
            let s = proposal.to_atom.ok_or(Error::InvalidParameter("pairwise proposal without atom".into()))?;
            let moved = if maximal { w[&q] } else { alpha };
            *w.entry(s).or_insert(0.0) += moved;
            if maximal {
                w.remove(&q);
            } else if let Some(v) = w.get_mut(&q) {
                *v -= alpha;
            }
        }
        DirectionKind::InFace => {
            return Err(Error::InvalidParameter(
                "in-face steps do not track active-set weights".into(),
            ))
        }
    }
    w.retain(|_, v| *v > DROP_TOL);
    if w.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let sum: f64 = w.values().sum();
    if (sum - 1.0).abs() > 1e-12 {
        w.values_mut().for_each(|v| *v /= sum);
        let resum: f64 = w.values().sum();
        if (sum - 1.0).abs() > 1e-9 || (resum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightDrift { sum });
        }
    }
    let point = combine(region, &w);
    Ok(ActiveIterate { point, weights: w })
}

/// `⟨g, d⟩ / (π_x(g) ‖d‖)`, or 1 when `x` is stationary for `-g`.
pub fn dsb_measure(region: &Region, x: &[f64], g: &[f64], d: &[f64]) -> Result<f64> {
    let dn = norm(d);
    if dn == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let pi = region.tangent_projection_norm(x, g)?;
    Ok(dsb_from_parts(dot(g, d), dn, pi))
}

pub(crate) fn dsb_from_parts(slope: f64, dnorm: f64, pi: f64) -> f64 {
    if pi <= 1e-14 {
        1.0
    } else {
        slope / (pi * dnorm)
    }
}
