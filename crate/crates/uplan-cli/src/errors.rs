//! Error-to-exit-code mapping for the CLI.
//!
//! 0 ok, 2 validation, 3 unreachable, 4 infeasible, 5 non-contractive,
//! 6 I/O, 7 sampling budget exhausted, 8 solver non-convergence.

use thiserror::Error;
use uplan_core::mdp::MdpError;
use uplan_core::pathing::PathingError;
use uplan_core::roadmap::RoadmapError;
use uplan_core::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Unreachable(String),
    #[error("infeasible at p_min {p_min}: best achievable probability {best}")]
    Infeasible { p_min: f64, best: f64 },
    #[error("{0}")]
    NonContractive(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Sampling(String),
    #[error("{0}")]
    NoConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Unreachable(_) => 3,
            CliError::Infeasible { .. } => 4,
            CliError::NonContractive(_) => 5,
            CliError::Io(_) => 6,
            CliError::Sampling(_) => 7,
            CliError::NoConvergence(_) => 8,
        }
    }

    /// Machine-readable payload printed to stdout on failure.
    pub fn payload(&self) -> serde_json::Value {
        match self {
            CliError::Infeasible { p_min, best } => serde_json::json!({
                "error": "infeasible",
                "p_min": p_min,
                "best_achievable": best,
            }),
            CliError::Unreachable(msg) => serde_json::json!({
                "error": "unreachable",
                "detail": msg,
            }),
            other => serde_json::json!({
                "error": format!("{other}"),
            }),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::SamplingBudgetExhausted { .. } => CliError::Sampling(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<RoadmapError> for CliError {
    fn from(e: RoadmapError) -> Self {
        match e {
            RoadmapError::Scenario(inner) => inner.into(),
            RoadmapError::DisconnectedQuery(_) => CliError::Unreachable(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<PathingError> for CliError {
    fn from(e: PathingError) -> Self {
        match e {
            PathingError::Unreachable => CliError::Unreachable(e.to_string()),
            PathingError::Infeasible { p_min, best } => CliError::Infeasible { p_min, best },
            PathingError::Invalid(msg) => CliError::Validation(msg),
        }
    }
}

impl From<MdpError> for CliError {
    fn from(e: MdpError) -> Self {
        match e {
            MdpError::NonContractive { .. } => CliError::NonContractive(e.to_string()),
            MdpError::VoronoiSamplingExhausted { .. } => CliError::Sampling(e.to_string()),
            MdpError::NoConvergence { .. } => CliError::NoConvergence(e.to_string()),
            MdpError::Scenario(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}
