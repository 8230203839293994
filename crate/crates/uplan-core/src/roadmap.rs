//! The milestone graph: free-space milestones connected by directed edges
//! whose statistics come from local-controller trials.
//!
//! Node ids follow the query convention: interior milestones occupy ids
//! `1..=m`, a query start takes id `0` and a query goal takes id `m + 1`.
//! Interior ids are stable across query insertion; re-inserting a query
//! replaces the previous query nodes and their edges.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{run_trials, ControllerSpec};
use crate::estimation::{edge_stats, BoundMode, EdgeStats, EstimationError};
use crate::num::{cst, Scalar};
use crate::rng;
use crate::scenario::{collides, sample_free_config, Configuration, Scenario, ScenarioError};

/// Current roadmap file format version.
pub const ROADMAP_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum RoadmapError {
    #[error("invalid build parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("query endpoint collides under the nominal world: {0}")]
    QueryInCollision(&'static str),
    #[error("disconnected query: no successful connection {0}")]
    DisconnectedQuery(&'static str),
    #[error("roadmap parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported roadmap format {0} (expected {ROADMAP_FORMAT})")]
    UnsupportedFormat(u32),
    #[error("roadmap file inconsistent: {0}")]
    Inconsistent(String),
}

/// Build provenance carried by every roadmap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams<T> {
    /// Milestone parameter of the construction: `n - 1` interior
    /// milestones are sampled.
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub gamma: T,
    pub seed: u64,
    pub bound_mode: BoundMode,
}

/// A directed edge annotated with its trial statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadmapEdge<T> {
    pub from: usize,
    pub to: usize,
    pub gamma: T,
    pub stats: EdgeStats<T>,
}

impl<T: Scalar> RoadmapEdge<T> {
    /// Probability used for planning (the reliability lower bound).
    pub fn p(&self) -> T {
        self.stats.p_lower
    }

    /// Mean cost over successful trials. Stored edges always have at
    /// least one success.
    pub fn cost(&self) -> T {
        self.stats.c_hat.expect("stored edge has cost")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct QueryNodes<T> {
    start: Configuration<T>,
    goal: Configuration<T>,
}

/// Milestones plus annotated directed edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Roadmap<T> {
    interior: Vec<Configuration<T>>,
    query: Option<QueryNodes<T>>,
    edges: Vec<RoadmapEdge<T>>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    build_params: BuildParams<T>,
}

impl<T: Scalar> Roadmap<T> {
    /// Number of interior milestones.
    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Total id space size (interior plus the two query slots).
    pub fn id_capacity(&self) -> usize {
        self.interior.len() + 2
    }

    pub fn has_query(&self) -> bool {
        self.query.is_some()
    }

    pub fn start_id(&self) -> Option<usize> {
        self.query.as_ref().map(|_| 0)
    }

    pub fn goal_id(&self) -> Option<usize> {
        self.query.as_ref().map(|_| self.interior.len() + 1)
    }

    pub fn config(&self, id: usize) -> Option<&Configuration<T>> {
        let m = self.interior.len();
        match id {
            0 => self.query.as_ref().map(|q| &q.start),
            i if (1..=m).contains(&i) => Some(&self.interior[i - 1]),
            i if i == m + 1 => self.query.as_ref().map(|q| &q.goal),
            _ => None,
        }
    }

    pub fn edges(&self) -> &[RoadmapEdge<T>] {
        &self.edges
    }

    pub fn out_edges(&self, id: usize) -> impl Iterator<Item = &RoadmapEdge<T>> {
        self.out_adj
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&e| &self.edges[e])
    }

    pub fn in_edges(&self, id: usize) -> impl Iterator<Item = &RoadmapEdge<T>> {
        self.in_adj
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&e| &self.edges[e])
    }

    pub fn build_params(&self) -> &BuildParams<T> {
        &self.build_params
    }

    /// Histogram of edge probabilities: counts for the ten bins
    /// `[0, 0.1) .. [0.9, 1)` plus the number of exactly-1 edges.
    pub fn probability_histogram(&self) -> ([usize; 10], usize) {
        let mut bins = [0usize; 10];
        let mut ones = 0usize;
        for e in &self.edges {
            let p = e.p().to_f64().unwrap_or(0.0);
            if p >= 1.0 {
                ones += 1;
            } else {
                bins[((p * 10.0) as usize).min(9)] += 1;
            }
        }
        (bins, ones)
    }

    fn rebuild_adjacency(&mut self) {
        self.edges.sort_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)));
        let cap = self.id_capacity();
        self.out_adj = vec![Vec::new(); cap];
        self.in_adj = vec![Vec::new(); cap];
        for (idx, e) in self.edges.iter().enumerate() {
            self.out_adj[e.from].push(idx);
            self.in_adj[e.to].push(idx);
        }
    }

    /// Assemble a roadmap from explicit parts (synthetic graphs, tests,
    /// external tooling). Interior milestones get ids `1..=len`; the
    /// caller vouches for the edge statistics.
    pub fn from_parts(
        interior: Vec<Configuration<T>>,
        edges: Vec<RoadmapEdge<T>>,
        build_params: BuildParams<T>,
    ) -> Result<Self, RoadmapError> {
        let m = interior.len();
        for e in &edges {
            if e.from > m + 1 || e.to > m + 1 {
                return Err(RoadmapError::InvalidParams(format!(
                    "edge {} -> {} outside id range 0..={}",
                    e.from,
                    e.to,
                    m + 1
                )));
            }
            if e.stats.successes == 0 || e.stats.c_hat.is_none() {
                return Err(RoadmapError::InvalidParams(
                    "stored edges need at least one successful trial".into(),
                ));
            }
            let p = e.p().to_f64().unwrap_or(-1.0);
            if !(p > 0.0 && p <= 1.0) {
                return Err(RoadmapError::InvalidParams(format!(
                    "edge probability {p} outside (0, 1]"
                )));
            }
        }
        let mut rm = Self {
            interior,
            query: None,
            edges,
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            build_params,
        };
        rm.rebuild_adjacency();
        Ok(rm)
    }
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<(), RoadmapError> {
    let g = gamma.to_f64().unwrap_or(f64::NAN);
    if !(0.5..1.0).contains(&g) {
        return Err(RoadmapError::InvalidParams(format!(
            "gamma must lie in [0.5, 1) so that edge bounds stay in [0, 1], got {g}"
        )));
    }
    Ok(())
}

/// `k` nearest interior milestones to `config` by Euclidean distance,
/// nondecreasing, ties broken by lower id. Returns fewer when the roadmap
/// is smaller than `k`. `exclude` skips one id (a milestone's own id).
fn nearest_interior<T: Scalar>(
    interior: &[Configuration<T>],
    config: &Configuration<T>,
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let mut scored: Vec<(T, usize)> = interior
        .iter()
        .enumerate()
        .map(|(idx, c)| (config.distance(c), idx + 1))
        .filter(|&(_, id)| Some(id) != exclude)
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, id)| id).collect()
}

/// Public nearest-neighbor query over the roadmap's interior milestones.
pub fn nearest_neighbors<T: Scalar>(
    roadmap: &Roadmap<T>,
    config: &Configuration<T>,
    k: usize,
) -> Vec<usize> {
    nearest_interior(&roadmap.interior, config, k, None)
}

fn edge_from_outcomes<T: Scalar>(
    from: usize,
    to: usize,
    outcomes: &[crate::controller::TrialOutcome<T>],
    gamma: T,
    mode: BoundMode,
) -> Result<Option<RoadmapEdge<T>>, RoadmapError> {
    let stats = edge_stats(outcomes, gamma, mode)?;
    if stats.successes == 0 || !(stats.p_lower > T::zero()) {
        return Ok(None);
    }
    Ok(Some(RoadmapEdge {
        from,
        to,
        gamma,
        stats,
    }))
}

/// Build a roadmap: sample `n - 1` free milestones, connect each to its
/// `k` nearest neighbors with `trials` controller trials per direction,
/// and keep edges with at least one success and a positive lower bound.
pub fn build<T: Scalar>(
    scenario: &Scenario<T>,
    controller: &ControllerSpec<T>,
    params: BuildParams<T>,
) -> Result<Roadmap<T>, RoadmapError> {
    if params.n < 2 {
        return Err(RoadmapError::InvalidParams("n must be >= 2".into()));
    }
    if params.k == 0 {
        return Err(RoadmapError::InvalidParams("k must be >= 1".into()));
    }
    if params.trials == 0 {
        return Err(RoadmapError::InvalidParams("trials must be >= 1".into()));
    }
    check_gamma(params.gamma)?;

    let mut milestone_stream = rng::stream(params.seed, &[rng::domain::MILESTONES]);
    let interior: Vec<Configuration<T>> = (0..params.n - 1)
        .map(|_| sample_free_config(scenario, &mut milestone_stream))
        .collect::<Result<_, _>>()?;

    let mut edges = Vec::new();
    let mut simulated: HashSet<(usize, usize)> = HashSet::new();
    for i in 1..=interior.len() {
        let neighbors = nearest_interior(&interior, &interior[i - 1], params.k, Some(i));
        for j in neighbors {
            for (a, b) in [(i, j), (j, i)] {
                if !simulated.insert((a, b)) {
                    continue;
                }
                let outcomes = run_trials(
                    scenario,
                    controller,
                    &interior[a - 1],
                    &interior[b - 1],
                    (a as u64, b as u64),
                    params.trials,
                    params.seed,
                );
                if let Some(edge) =
                    edge_from_outcomes(a, b, &outcomes, params.gamma, params.bound_mode)?
                {
                    edges.push(edge);
                }
            }
        }
    }

    let mut rm = Roadmap {
        interior,
        query: None,
        edges,
        out_adj: Vec::new(),
        in_adj: Vec::new(),
        build_params: params,
    };
    rm.rebuild_adjacency();
    Ok(rm)
}

/// Splice a query into the roadmap: connect `start` (id 0) by outgoing
/// trials to its `k` nearest milestones and `goal` (id m + 1) by incoming
/// trials from its `k` nearest milestones. Returns the two ids and the
/// augmented roadmap; the input roadmap is left untouched.
pub fn insert_query<T: Scalar>(
    roadmap: &Roadmap<T>,
    scenario: &Scenario<T>,
    controller: &ControllerSpec<T>,
    start: Configuration<T>,
    goal: Configuration<T>,
    k: usize,
    trials: usize,
    gamma: T,
    seed: u64,
) -> Result<(usize, usize, Roadmap<T>), RoadmapError> {
    if k == 0 || trials == 0 {
        return Err(RoadmapError::InvalidParams(
            "k and trials must be >= 1".into(),
        ));
    }
    check_gamma(gamma)?;
    let nominal = scenario.nominal_world();
    if collides(scenario, &start, &nominal)? {
        return Err(RoadmapError::QueryInCollision("start"));
    }
    if collides(scenario, &goal, &nominal)? {
        return Err(RoadmapError::QueryInCollision("goal"));
    }

    let m = roadmap.interior.len();
    let start_id = 0usize;
    let goal_id = m + 1;
    let mode = roadmap.build_params.bound_mode;

    // Drop any previous query edges, keep interior-interior edges.
    let mut edges: Vec<RoadmapEdge<T>> = roadmap
        .edges
        .iter()
        .filter(|e| (1..=m).contains(&e.from) && (1..=m).contains(&e.to))
        .cloned()
        .collect();

    let mut connected_start = false;
    for j in nearest_interior(&roadmap.interior, &start, k, None) {
        let outcomes = run_trials(
            scenario,
            controller,
            &start,
            &roadmap.interior[j - 1],
            (start_id as u64, j as u64),
            trials,
            seed,
        );
        if let Some(edge) = edge_from_outcomes(start_id, j, &outcomes, gamma, mode)? {
            edges.push(edge);
            connected_start = true;
        }
    }
    if !connected_start {
        return Err(RoadmapError::DisconnectedQuery("out of the start"));
    }

    let mut connected_goal = false;
    for i in nearest_interior(&roadmap.interior, &goal, k, None) {
        let outcomes = run_trials(
            scenario,
            controller,
            &roadmap.interior[i - 1],
            &goal,
            (i as u64, goal_id as u64),
            trials,
            seed,
        );
        if let Some(edge) = edge_from_outcomes(i, goal_id, &outcomes, gamma, mode)? {
            edges.push(edge);
            connected_goal = true;
        }
    }
    if !connected_goal {
        return Err(RoadmapError::DisconnectedQuery("into the goal"));
    }

    let mut augmented = Roadmap {
        interior: roadmap.interior.clone(),
        query: Some(QueryNodes { start, goal }),
        edges,
        out_adj: Vec::new(),
        in_adj: Vec::new(),
        build_params: roadmap.build_params.clone(),
    };
    augmented.rebuild_adjacency();
    Ok((start_id, goal_id, augmented))
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SerializedEdge<T> {
    from: usize,
    to: usize,
    #[serde(rename = "T")]
    trials: usize,
    #[serde(rename = "T_success")]
    successes: usize,
    c_hat: T,
    gamma: T,
    p_lower: T,
}

#[derive(Serialize, Deserialize)]
struct SerializedRoadmap<T> {
    format: u32,
    build_params: BuildParams<T>,
    milestones: Vec<Configuration<T>>,
    query: Option<QueryNodes<T>>,
    edges: Vec<SerializedEdge<T>>,
}

impl<T: Scalar> Roadmap<T> {
    pub fn to_json(&self) -> Result<String, RoadmapError> {
        let doc = SerializedRoadmap {
            format: ROADMAP_FORMAT,
            build_params: self.build_params.clone(),
            milestones: self.interior.clone(),
            query: self.query.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| SerializedEdge {
                    from: e.from,
                    to: e.to,
                    trials: e.stats.trials,
                    successes: e.stats.successes,
                    c_hat: e.cost(),
                    gamma: e.gamma,
                    p_lower: e.p(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parse and verify a stored roadmap. Every edge's `p_lower` must
    /// match the value recomputed from its stored counts; this catches
    /// hand-edited or corrupted files.
    pub fn from_json(text: &str) -> Result<Self, RoadmapError> {
        let doc: SerializedRoadmap<T> = serde_json::from_str(text)?;
        if doc.format != ROADMAP_FORMAT {
            return Err(RoadmapError::UnsupportedFormat(doc.format));
        }
        let mode = doc.build_params.bound_mode;
        let tol = cst::<T>(1e-9);
        let edges = doc
            .edges
            .into_iter()
            .map(|e| {
                let stats = EdgeStats::from_counts(
                    e.trials,
                    e.successes,
                    Some(e.c_hat),
                    e.gamma,
                    mode,
                )?;
                if (stats.p_lower - e.p_lower).abs() > tol {
                    return Err(RoadmapError::Inconsistent(format!(
                        "edge {} -> {}: stored p_lower {} but counts give {}",
                        e.from, e.to, e.p_lower, stats.p_lower
                    )));
                }
                Ok(RoadmapEdge {
                    from: e.from,
                    to: e.to,
                    gamma: e.gamma,
                    stats,
                })
            })
            .collect::<Result<Vec<_>, RoadmapError>>()?;

        let mut rm = Roadmap {
            interior: doc.milestones,
            query: doc.query,
            edges,
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            build_params: doc.build_params,
        };
        let m = rm.interior.len();
        for e in &rm.edges {
            let valid = |id: usize| id <= m + 1 && (rm.query.is_some() || (1..=m).contains(&id));
            if !valid(e.from) || !valid(e.to) {
                return Err(RoadmapError::Inconsistent(format!(
                    "edge {} -> {} references missing node",
                    e.from, e.to
                )));
            }
        }
        rm.rebuild_adjacency();
        Ok(rm)
    }
}
