//! World definitions: configuration space, robot geometry, uncertain
//! obstacles, plus collision checking and free-space sampling.
//!
//! Obstacles have Gaussian-distributed positions; a [`WorldSample`] is one
//! realization of every obstacle position. Free-space sampling and query
//! validation use the *nominal* world (all noise zero).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControllerSpec;
use crate::geom::{self, Point2, Rect};
use crate::num::Scalar;

/// Current scenario file format version.
pub const SCENARIO_FORMAT: u32 = 1;

/// Attempts allowed when rejection-sampling a free configuration.
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("configuration has {got} coordinates, scenario expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("world sample has {got} obstacle positions, scenario has {expected}")]
    WorldMismatch { expected: usize, got: usize },
    #[error("rejection budget of {budget} exhausted while sampling free space")]
    SamplingBudgetExhausted { budget: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unsupported scenario format {0} (expected {SCENARIO_FORMAT})")]
    UnsupportedFormat(u32),
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A point in configuration space. Positions are in workspace length
/// units, joint angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Configuration<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dof(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean distance on raw coordinates (angles are not wrapped).
    pub fn distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b) * (a - b))
            .fold(T::zero(), |acc, d| acc + d)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }
}

impl<T: Scalar> From<Vec<T>> for Configuration<T> {
    fn from(coords: Vec<T>) -> Self {
        Self::new(coords)
    }
}

/// Obstacle footprint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObstacleShape<T> {
    Disc { radius: T },
    Rect { width: T, height: T },
}

/// A planar obstacle whose position is only known up to independent
/// per-axis Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle<T> {
    pub shape: ObstacleShape<T>,
    pub nominal_position: [T; 2],
    pub position_std: [T; 2],
}

impl<T: Scalar> Obstacle<T> {
    /// Smallest geometric feature, used for step-size fidelity advice.
    pub fn min_feature(&self) -> T {
        match self.shape {
            ObstacleShape::Disc { radius } => radius,
            ObstacleShape::Rect { width, height } => {
                width.min(height) / (T::one() + T::one())
            }
        }
    }
}

/// Robot body model. Configurations are concatenated disc centers for
/// `DiscSet` and joint angles for `PlanarArm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RobotModel<T> {
    DiscSet { radii: Vec<T> },
    PlanarArm { base: [T; 2], link_lengths: Vec<T> },
}

impl<T: Scalar> RobotModel<T> {
    pub fn dof(&self) -> usize {
        match self {
            RobotModel::DiscSet { radii } => 2 * radii.len(),
            RobotModel::PlanarArm { link_lengths, .. } => link_lengths.len(),
        }
    }
}

/// Axis-aligned box over configuration coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, config: &Configuration<T>) -> bool {
        config.dof() == self.dim()
            && config
                .coords()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&c, (&lo, &hi))| c >= lo && c <= hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration<T> {
        let coords = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| T::uniform(rng, lo, hi))
            .collect();
        Configuration::new(coords)
    }
}

/// A complete planning world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario<T> {
    pub bounds: Bounds<T>,
    pub robot: RobotModel<T>,
    pub obstacles: Vec<Obstacle<T>>,
    pub start: Configuration<T>,
    pub goal: Configuration<T>,
    pub endgame_radius: T,
    pub step_size: T,
    pub max_steps: usize,
    pub controller: ControllerSpec<T>,
}

/// One realization of every obstacle position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSample<T> {
    pub obstacle_positions: Vec<[T; 2]>,
}

#[derive(Serialize, Deserialize)]
struct VersionedScenario<T> {
    format: u32,
    #[serde(flatten)]
    scenario: Scenario<T>,
}

impl<T: Scalar> Scenario<T> {
    pub fn dof(&self) -> usize {
        self.robot.dof()
    }

    /// Check all structural invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |msg: String| Err(ScenarioError::Invalid(msg));
        let dof = self.dof();
        if dof == 0 {
            return err("robot has zero degrees of freedom".into());
        }
        if self.bounds.lo.len() != self.bounds.hi.len() {
            return err("bounds lo/hi length mismatch".into());
        }
        if self.bounds.dim() != dof {
            return err(format!(
                "bounds have {} dims, robot has {} dof",
                self.bounds.dim(),
                dof
            ));
        }
        for (&lo, &hi) in self.bounds.lo.iter().zip(&self.bounds.hi) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return err("bounds must be finite with lo < hi".into());
            }
        }
        match &self.robot {
            RobotModel::DiscSet { radii } => {
                if radii.is_empty() || radii.iter().any(|&r| !(r > T::zero())) {
                    return err("disc radii must be positive".into());
                }
            }
            RobotModel::PlanarArm { base, link_lengths } => {
                if !(base[0].is_finite() && base[1].is_finite()) {
                    return err("arm base must be finite".into());
                }
                if link_lengths.is_empty() || link_lengths.iter().any(|&l| !(l > T::zero())) {
                    return err("link lengths must be positive".into());
                }
            }
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            match obs.shape {
                ObstacleShape::Disc { radius } => {
                    if !(radius > T::zero()) {
                        return err(format!("obstacle {i}: radius must be positive"));
                    }
                }
                ObstacleShape::Rect { width, height } => {
                    if !(width > T::zero() && height > T::zero()) {
                        return err(format!("obstacle {i}: extents must be positive"));
                    }
                }
            }
            if obs.position_std.iter().any(|&s| !(s >= T::zero())) {
                return err(format!("obstacle {i}: position std must be >= 0"));
            }
            if !(obs.nominal_position[0].is_finite() && obs.nominal_position[1].is_finite()) {
                return err(format!("obstacle {i}: nominal position must be finite"));
            }
        }
        if !self.start.is_finite() || !self.bounds.contains(&self.start) {
            return err("start must be finite and inside bounds".into());
        }
        if !self.goal.is_finite() || !self.bounds.contains(&self.goal) {
            return err("goal must be finite and inside bounds".into());
        }
        if !(self.endgame_radius > T::zero()) {
            return err("endgame_radius must be positive".into());
        }
        if !(self.step_size > T::zero()) {
            return err("step_size must be positive".into());
        }
        if self.max_steps == 0 {
            return err("max_steps must be >= 1".into());
        }
        if !(self.controller.actuation_noise_std >= T::zero()) {
            return err("actuation_noise_std must be >= 0".into());
        }
        Ok(())
    }

    /// Advisory fidelity warnings (do not block validation).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(feature) = self
            .obstacles
            .iter()
            .map(|o| o.min_feature())
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            // Workspace motion per step: joint steps sweep the arm tip by
            // up to (total reach) radians-to-length.
            let workspace_step = match &self.robot {
                RobotModel::DiscSet { .. } => self.step_size,
                RobotModel::PlanarArm { link_lengths, .. } => {
                    let reach = link_lengths.iter().fold(T::zero(), |s, &l| s + l);
                    self.step_size * reach
                }
            };
            if workspace_step > feature / (T::one() + T::one()) {
                out.push(format!(
                    "workspace motion per step {} exceeds half the smallest obstacle \
                     feature {}; collisions may be stepped over",
                    workspace_step, feature
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String, ScenarioError> {
        let doc = VersionedScenario {
            format: SCENARIO_FORMAT,
            scenario: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: VersionedScenario<T> = serde_json::from_str(text)?;
        if doc.format != SCENARIO_FORMAT {
            return Err(ScenarioError::UnsupportedFormat(doc.format));
        }
        doc.scenario.validate()?;
        Ok(doc.scenario)
    }

    /// The world with every obstacle at its nominal position.
    pub fn nominal_world(&self) -> WorldSample<T> {
        WorldSample {
            obstacle_positions: self.obstacles.iter().map(|o| o.nominal_position).collect(),
        }
    }
}

/// Draw one world: each obstacle position is its nominal position plus
/// independent per-axis Gaussian noise.
pub fn sample_world<T: Scalar, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    rng: &mut R,
) -> WorldSample<T> {
    let obstacle_positions = scenario
        .obstacles
        .iter()
        .map(|o| {
            [
                o.nominal_position[0] + o.position_std[0] * T::std_normal(rng),
                o.nominal_position[1] + o.position_std[1] * T::std_normal(rng),
            ]
        })
        .collect();
    WorldSample { obstacle_positions }
}

/// Body elements of the robot at a given configuration.
enum Body<T> {
    Discs(Vec<(Point2<T>, T)>),
    Links(Vec<(Point2<T>, Point2<T>)>),
}

fn body_at<T: Scalar>(robot: &RobotModel<T>, config: &Configuration<T>) -> Body<T> {
    match robot {
        RobotModel::DiscSet { radii } => {
            let discs = radii
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    let c = config.coords();
                    ([c[2 * i], c[2 * i + 1]], r)
                })
                .collect();
            Body::Discs(discs)
        }
        RobotModel::PlanarArm { base, link_lengths } => {
            let mut links = Vec::with_capacity(link_lengths.len());
            let mut p = *base;
            let mut angle = T::zero();
            for (&len, &theta) in link_lengths.iter().zip(config.coords()) {
                angle += theta;
                let q = [p[0] + len * angle.cos(), p[1] + len * angle.sin()];
                links.push((p, q));
                p = q;
            }
            Body::Links(links)
        }
    }
}

fn obstacle_hit<T: Scalar>(body: &Body<T>, shape: &ObstacleShape<T>, pos: Point2<T>) -> bool {
    match body {
        Body::Discs(discs) => discs.iter().any(|&(c, r)| match *shape {
            ObstacleShape::Disc { radius } => geom::dist(c, pos) <= r + radius,
            ObstacleShape::Rect { width, height } => geom::circle_intersects_rect(
                c,
                r,
                &Rect {
                    center: pos,
                    width,
                    height,
                },
            ),
        }),
        Body::Links(links) => links.iter().any(|&(a, b)| match *shape {
            ObstacleShape::Disc { radius } => geom::segment_intersects_circle(a, b, pos, radius),
            ObstacleShape::Rect { width, height } => geom::segment_intersects_rect(
                a,
                b,
                &Rect {
                    center: pos,
                    width,
                    height,
                },
            ),
        }),
    }
}

/// Is the robot at `config` in collision under the given world?
///
/// Collision means any body element intersects any obstacle, any two
/// robot discs overlap, any nonadjacent arm links cross, or a disc leaves
/// its configuration-bounds window. Arm links are anchored at the base,
/// so no workspace containment test applies to them.
pub fn collides<T: Scalar>(
    scenario: &Scenario<T>,
    config: &Configuration<T>,
    world: &WorldSample<T>,
) -> Result<bool, ScenarioError> {
    if config.dof() != scenario.dof() {
        return Err(ScenarioError::DimensionMismatch {
            expected: scenario.dof(),
            got: config.dof(),
        });
    }
    if world.obstacle_positions.len() != scenario.obstacles.len() {
        return Err(ScenarioError::WorldMismatch {
            expected: scenario.obstacles.len(),
            got: world.obstacle_positions.len(),
        });
    }
    Ok(collides_unchecked(scenario, config, world))
}

pub(crate) fn collides_unchecked<T: Scalar>(
    scenario: &Scenario<T>,
    config: &Configuration<T>,
    world: &WorldSample<T>,
) -> bool {
    let body = body_at(&scenario.robot, config);

    // Robot-robot interference and workspace containment.
    match &body {
        Body::Discs(discs) => {
            for i in 0..discs.len() {
                let (c, r) = discs[i];
                // Disc must stay fully inside its bounds window.
                let lo_x = scenario.bounds.lo[2 * i];
                let hi_x = scenario.bounds.hi[2 * i];
                let lo_y = scenario.bounds.lo[2 * i + 1];
                let hi_y = scenario.bounds.hi[2 * i + 1];
                if c[0] - r < lo_x || c[0] + r > hi_x || c[1] - r < lo_y || c[1] + r > hi_y {
                    return true;
                }
                for &(c2, r2) in &discs[i + 1..] {
                    if geom::dist(c, c2) <= r + r2 {
                        return true;
                    }
                }
            }
        }
        Body::Links(links) => {
            // Self-collision between nonadjacent links.
            for i in 0..links.len() {
                for j in i + 2..links.len() {
                    let (a, b) = links[i];
                    let (c, d) = links[j];
                    // Skip the shared joint between consecutive pairs;
                    // nonadjacent links share no endpoint.
                    if geom::segments_intersect(a, b, c, d) {
                        return true;
                    }
                }
            }
        }
    }

    scenario
        .obstacles
        .iter()
        .zip(&world.obstacle_positions)
        .any(|(obs, &pos)| obstacle_hit(&body, &obs.shape, pos))
}

/// Sample a configuration uniformly over the bounds, rejecting samples
/// that collide under the nominal world. Errors when [`REJECTION_BUDGET`]
/// attempts all fail, which signals a pathological scenario.
pub fn sample_free_config<T: Scalar, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    rng: &mut R,
) -> Result<Configuration<T>, ScenarioError> {
    let nominal = scenario.nominal_world();
    for _ in 0..REJECTION_BUDGET {
        let config = scenario.bounds.sample(rng);
        if !collides_unchecked(scenario, &config, &nominal) {
            return Ok(config);
        }
    }
    Err(ScenarioError::SamplingBudgetExhausted {
        budget: REJECTION_BUDGET,
    })
}
