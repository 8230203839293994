//! Discounted-MDP side of the toolkit: simulation-based estimation of
//! discounted transition probabilities between Voronoi regions, and
//! robust solvers under elementwise-interval or ellipsoidal uncertainty
//! sets.

mod ellipsoid;
mod estimate;
mod interval;
pub mod linalg;

use thiserror::Error;

use crate::estimation::EstimationError;
use crate::scenario::ScenarioError;

pub use ellipsoid::{
    chi_square_quantile, ellipsoid_inner_max, fit_omega, robust_value_iteration_ellipsoidal,
    robust_value_iteration_ellipsoidal_observed, EllipsoidalMdp, EllipsoidalRow, InnerMax,
    RobustSolution,
};
pub use estimate::{estimate, ActionDesc, MdpEstimate, TrialRecord, ESTIMATE_FORMAT};
pub use interval::{
    interval_bounds, interval_value_iteration, interval_value_iteration_observed, IntervalMdp,
    ValueInterval,
};
pub use linalg::Matrix;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("rejection sampling exhausted for region {state} (empty or unreachable Voronoi cell)")]
    VoronoiSamplingExhausted { state: usize },
    #[error("non-contractive rows (state, action): {pairs:?}")]
    NonContractive { pairs: Vec<(usize, usize)> },
    #[error("no convergence within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("need at least two trials")]
    TooFewTrials,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported estimate format {0} (expected {ESTIMATE_FORMAT})")]
    UnsupportedFormat(u32),
}
