//! Projection-free first-order methods over polytopes.
//!
//! The crate provides the away-step, pairwise and face-direction Frank-Wolfe
//! variants, both as plain first-order loops and wrapped in a short step chain
//! (a frozen-gradient inner loop bounded by a two-ball trust region), together
//! with the tangent-cone geometry needed to measure stationarity and a set of
//! verifiers that check the per-step and global rate inequalities on recorded
//! traces.
//!
//! Direction rules are strategies behind [`method::DirectionRule`] and are
//! looked up by name through [`method::MethodRegistry`].

pub mod directions;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod method;
pub mod nnls;
pub mod objective;
pub mod oracle;
pub mod rates;
pub mod region;
pub mod rng;
pub mod solver;
pub mod ssc;

pub use directions::{ActiveIterate, DirectionKind, DirectionProposal};
pub use error::{Error, Result};
pub use geometry::{GeometryBounds, RateConstants, WidthSource};
pub use method::{DirectionRule, MethodRegistry};
pub use objective::{QuadraticObjective, SmoothObjective};
pub use rates::{ClaimRecord, RateReport};
pub use region::{AtomSet, FaceDescriptor, Halfspace, Region, RegionKind};
pub use solver::{IterationRecord, RunTrace, StepKind, StepsizeRule, StopReason, Wrapper};
pub use ssc::{SscTrace, TerminationCase};
