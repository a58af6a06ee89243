//! Direction rules as named strategies.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use crate::directions::{afw_select, fdfw_select, pfw_direction, ActiveIterate, DirectionProposal};
use crate::error::{Error, Result};
use crate::geometry::GeometryBounds;
use crate::region::Region;

/// A Frank-Wolfe variant: how to pick a descent direction at an iterate.
pub trait DirectionRule: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Whether iterates carry explicit active-set weights.
    fn tracks_active_set(&self) -> bool {
        true
    }

    /// Adapt a starting iterate to the bookkeeping this rule needs.
    fn prepare(&self, iterate: ActiveIterate) -> ActiveIterate {
        if self.tracks_active_set() {
            iterate
        } else {
            iterate.into_point_only()
        }
    }

    fn propose(&self, region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal>;

    /// Lower bound on the slope ratio of the directions this rule selects.
    fn angle_bound(&self, bounds: &GeometryBounds) -> f64;

    /// Whether the variant can take full Frank-Wolfe steps, which count as
    /// good steps with the `(1 + μ/L)⁻¹` contraction.
    fn has_full_fw_steps(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AwayStepFw;

impl DirectionRule for AwayStepFw {
    fn name(&self) -> &'static str {
        "afw"
    }

    fn propose(&self, region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
        afw_select(region, iterate, g)
    }

    fn angle_bound(&self, bounds: &GeometryBounds) -> f64 {
        bounds.tau_afw
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PairwiseFw;

impl DirectionRule for PairwiseFw {
    fn name(&self) -> &'static str {
        "pfw"
    }

    fn propose(&self, region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
        pfw_direction(region, iterate, g)
    }

    fn angle_bound(&self, bounds: &GeometryBounds) -> f64 {
        bounds.tau_pfw
    }

    fn has_full_fw_steps(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FaceDirectionFw;

impl DirectionRule for FaceDirectionFw {
    fn name(&self) -> &'static str {
        "fdfw"
    }

    fn tracks_active_set(&self) -> bool {
        false
    }

    fn propose(&self, region: &Region, iterate: &ActiveIterate, g: &[f64]) -> Result<DirectionProposal> {
        fdfw_select(region, iterate.point(), g)
    }

    fn angle_bound(&self, bounds: &GeometryBounds) -> f64 {
        bounds.tau_fd
    }
}

/// Name-indexed collection of direction rules.
#[derive(Debug, Clone)]
pub struct MethodRegistry {
    rules: BTreeMap<String, Arc<dyn DirectionRule>>,
}

impl Default for MethodRegistry {
    fn default() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(AwayStepFw));
        registry.register(Arc::new(PairwiseFw));
        registry.register(Arc::new(FaceDirectionFw));
        registry
    }
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            rules: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, rule: Arc<dyn DirectionRule>) {
        self.rules.insert(rule.name().to_string(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DirectionRule>> {
        self.rules
            .get(&name.to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}
