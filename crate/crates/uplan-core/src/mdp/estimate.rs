//! Monte-Carlo estimation of discounted transition probabilities and
//! costs between Voronoi regions.
//!
//! Regions are the Voronoi cells of the milestones. A trial for region
//! `i` starts at a uniform free point whose nearest milestone is `i` and
//! runs one controller until the trajectory is closer to another
//! milestone (destination), collides / leaves the bounds / exhausts the
//! step budget (absorbed). The discounted transition estimate is
//! `P_hat(i, j) = mean over trials of alpha^(tau - 1) * [dest == j]` and
//! the cost estimate is the mean discounted path length over all trials,
//! absorbed ones included.

use serde::{Deserialize, Serialize};

use crate::controller::{step_toward, ControllerSpec};
use crate::num::Scalar;
use crate::rng;
use crate::scenario::{
    collides_unchecked, sample_world, Configuration, Scenario, REJECTION_BUDGET,
};

use super::linalg::Matrix;
use super::MdpError;

/// Current estimate file format version.
pub const ESTIMATE_FORMAT: u32 = 1;

/// One action: run `controllers[controller]` aimed at milestone `target`.
/// Every action is available in every region; actions aimed at far-away
/// milestones simply tend to absorb or exit elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDesc {
    pub controller: usize,
    pub target: usize,
}

/// One simulated trial: destination region (`None` when absorbed),
/// stopping time in steps, and accumulated discounted cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<T> {
    pub dest: Option<usize>,
    pub tau: usize,
    pub dcost: T,
}

/// Simulation-based discounted MDP estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpEstimate<T> {
    pub milestones: Vec<Configuration<T>>,
    pub controllers: Vec<ControllerSpec<T>>,
    pub actions: Vec<ActionDesc>,
    pub alpha: T,
    pub trials_per_state: usize,
    /// Per action: n x n discounted transition probability estimates.
    pub p_hat: Vec<Matrix<T>>,
    /// Per action, per state: mean discounted cost over all trials.
    pub c_hat: Vec<Vec<T>>,
    /// Raw trials, indexed `[action][state][trial]`.
    pub records: Vec<Vec<Vec<TrialRecord<T>>>>,
}

#[derive(Serialize, Deserialize)]
struct VersionedEstimate<T> {
    format: u32,
    #[serde(flatten)]
    estimate: MdpEstimate<T>,
}

impl<T: Scalar> MdpEstimate<T> {
    pub fn n_states(&self) -> usize {
        self.milestones.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Estimated row mass `sum_j P_hat(i, j)` for `(state, action)`.
    pub fn row_mass(&self, action: usize, state: usize) -> T {
        self.p_hat[action]
            .row(state)
            .iter()
            .fold(T::zero(), |s, &v| s + v)
    }

    pub fn to_json(&self) -> Result<String, MdpError> {
        let doc = VersionedEstimate {
            format: ESTIMATE_FORMAT,
            estimate: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let doc: VersionedEstimate<T> = serde_json::from_str(text)?;
        if doc.format != ESTIMATE_FORMAT {
            return Err(MdpError::UnsupportedFormat(doc.format));
        }
        let est = doc.estimate;
        let n = est.n_states();
        let a = est.n_actions();
        let consistent = est.p_hat.len() == a
            && est.c_hat.len() == a
            && est.records.len() == a
            && est.p_hat.iter().all(|m| m.rows() == n && m.cols() == n && m.is_valid())
            && est.c_hat.iter().all(|c| c.len() == n)
            && est.records.iter().all(|r| r.len() == n);
        if !consistent {
            return Err(MdpError::InvalidParams(
                "estimate arrays disagree with state/action counts".into(),
            ));
        }
        Ok(est)
    }
}

fn nearest_milestone<T: Scalar>(milestones: &[Configuration<T>], c: &Configuration<T>) -> usize {
    let mut best = 0usize;
    let mut best_d = milestones[0].distance(c);
    for (i, m) in milestones.iter().enumerate().skip(1) {
        let d = m.distance(c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Aggregate raw trial records into `(P_hat row, c_hat entry)`.
pub(crate) fn aggregate_row<T: Scalar>(
    records: &[TrialRecord<T>],
    n_states: usize,
    alpha: T,
) -> (Vec<T>, T) {
    let t = T::from_usize(records.len()).unwrap();
    let mut row = vec![T::zero(); n_states];
    let mut cost = T::zero();
    for r in records {
        if let Some(j) = r.dest {
            row[j] += alpha.powi(r.tau as i32 - 1);
        }
        cost += r.dcost;
    }
    for v in &mut row {
        *v /= t;
    }
    (row, cost / t)
}

/// Simulate one region-exit trial. Exposed within the crate for targeted
/// tests; [`estimate`] drives it across all `(state, action)` pairs.
pub(crate) fn run_region_trial<T: Scalar, R: rand::Rng + ?Sized>(
    scenario: &Scenario<T>,
    milestones: &[Configuration<T>],
    controller: &ControllerSpec<T>,
    target: &Configuration<T>,
    home: usize,
    start: Configuration<T>,
    alpha: T,
    rng: &mut R,
) -> TrialRecord<T> {
    let world = sample_world(scenario, rng);
    let mut cur = start;
    let mut dcost = T::zero();
    let mut discount = T::one(); // alpha^(t-1)
    for t in 1..=scenario.max_steps {
        let next = step_toward(controller, &cur, target, scenario.step_size, rng);
        let step_len = cur.distance(&next);
        dcost += discount * step_len;
        if !scenario.bounds.contains(&next) || collides_unchecked(scenario, &next, &world) {
            return TrialRecord {
                dest: None,
                tau: t,
                dcost,
            };
        }
        cur = next;
        let nearest = nearest_milestone(milestones, &cur);
        if nearest != home {
            return TrialRecord {
                dest: Some(nearest),
                tau: t,
                dcost,
            };
        }
        discount *= alpha;
    }
    TrialRecord {
        dest: None,
        tau: scenario.max_steps,
        dcost,
    }
}

/// Estimate the discounted MDP over the milestones' Voronoi regions with
/// `trials_per_state` simulations per `(state, action)` pair.
pub fn estimate<T: Scalar>(
    scenario: &Scenario<T>,
    milestones: Vec<Configuration<T>>,
    controllers: Vec<ControllerSpec<T>>,
    alpha: T,
    trials_per_state: usize,
    seed: u64,
) -> Result<MdpEstimate<T>, MdpError> {
    let n = milestones.len();
    if n < 2 {
        return Err(MdpError::InvalidParams("need at least 2 milestones".into()));
    }
    for (i, a) in milestones.iter().enumerate() {
        for b in milestones.iter().skip(i + 1) {
            if a == b {
                return Err(MdpError::InvalidParams("milestones must be distinct".into()));
            }
        }
    }
    if controllers.is_empty() {
        return Err(MdpError::InvalidParams("need at least one controller".into()));
    }
    let alpha_f = alpha.to_f64().unwrap_or(f64::NAN);
    if !(0.0..1.0).contains(&alpha_f) {
        return Err(MdpError::InvalidParams(format!(
            "alpha must lie in [0, 1), got {alpha_f}"
        )));
    }
    if trials_per_state == 0 {
        return Err(MdpError::InvalidParams("trials_per_state must be >= 1".into()));
    }

    let actions: Vec<ActionDesc> = (0..controllers.len())
        .flat_map(|c| (0..n).map(move |j| ActionDesc {
            controller: c,
            target: j,
        }))
        .collect();

    let nominal = scenario.nominal_world();
    let mut p_hat = Vec::with_capacity(actions.len());
    let mut c_hat = Vec::with_capacity(actions.len());
    let mut records = Vec::with_capacity(actions.len());

    for (a_idx, action) in actions.iter().enumerate() {
        let controller = &controllers[action.controller];
        let target = milestones[action.target].clone();
        let mut action_records: Vec<Vec<TrialRecord<T>>> = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        for i in 0..n {
            let mut trials = Vec::with_capacity(trials_per_state);
            for k in 0..trials_per_state {
                let mut start_rng = rng::stream(
                    seed,
                    &[rng::domain::MDP_START, a_idx as u64, i as u64, k as u64],
                );
                let mut start = None;
                for _ in 0..REJECTION_BUDGET {
                    let c = scenario.bounds.sample(&mut start_rng);
                    if nearest_milestone(&milestones, &c) == i
                        && !collides_unchecked(scenario, &c, &nominal)
                    {
                        start = Some(c);
                        break;
                    }
                }
                let start = start.ok_or(MdpError::VoronoiSamplingExhausted { state: i })?;
                let mut trial_rng = rng::stream(
                    seed,
                    &[rng::domain::MDP_TRIAL, a_idx as u64, i as u64, k as u64],
                );
                trials.push(run_region_trial(
                    scenario,
                    &milestones,
                    controller,
                    &target,
                    i,
                    start,
                    alpha,
                    &mut trial_rng,
                ));
            }
            let (row, cost) = aggregate_row(&trials, n, alpha);
            rows.push(row);
            costs.push(cost);
            action_records.push(trials);
        }
        p_hat.push(Matrix::from_rows(rows));
        c_hat.push(costs);
        records.push(action_records);
    }

    Ok(MdpEstimate {
        milestones,
        controllers,
        actions,
        alpha,
        trials_per_state,
        p_hat,
        c_hat,
        records,
    })
}
