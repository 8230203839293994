//! Planning with stochastic local controllers.
//!
//! The toolkit builds probabilistic roadmaps under obstacle-position
//! uncertainty, finds maximum-success-probability paths, minimizes path
//! cost subject to a success-probability constraint, and solves robust
//! (interval / ellipsoidal) discounted MDPs estimated from simulation.
//!
//! All numeric code is generic over the [`Scalar`] type; the aliases at
//! the crate root fix `f64`, which is what the CLI uses.

pub mod controller;
pub mod estimation;
pub mod geom;
pub mod mdp;
pub mod num;
pub mod pathing;
pub mod rng;
pub mod roadmap;
pub mod scenario;

pub use num::Scalar;

/// `f64` instantiations of the core types.
pub type Configuration = scenario::Configuration<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type WorldSample = scenario::WorldSample<f64>;
pub type Obstacle = scenario::Obstacle<f64>;
pub type RobotModel = scenario::RobotModel<f64>;
pub type ControllerSpec = controller::ControllerSpec<f64>;
pub type TrialOutcome = controller::TrialOutcome<f64>;
pub type EdgeStats = estimation::EdgeStats<f64>;
pub type Roadmap = roadmap::Roadmap<f64>;
pub type BuildParams = roadmap::BuildParams<f64>;
pub type PlanGraph = pathing::PlanGraph<f64>;
pub type PlannedPath = pathing::PlannedPath<f64>;
pub type ExecutionStats = pathing::ExecutionStats<f64>;
pub type MdpEstimate = mdp::MdpEstimate<f64>;
pub type IntervalMdp = mdp::IntervalMdp<f64>;
pub type EllipsoidalMdp = mdp::EllipsoidalMdp<f64>;
pub type ValueInterval = mdp::ValueInterval<f64>;
