//! Local controllers as generative models.
//!
//! A controller steers from one configuration toward a nearby target and
//! is evaluated purely by simulation: each trial draws one world (frozen
//! obstacle positions), then steps along the straight line to the target
//! with per-step actuation noise until it reaches the endgame region,
//! collides, or runs out of steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::num::Scalar;
use crate::rng;
use crate::scenario::{collides_unchecked, sample_world, Configuration, Scenario, WorldSample};

/// Controller family. Only straight-line steering ships; the enum is the
/// extension point for smarter local policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    StraightLine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec<T> {
    pub kind: ControllerKind,
    /// Std of the Gaussian perturbation added to every configuration
    /// coordinate after each step.
    pub actuation_noise_std: T,
}

/// Result of one simulated transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome<T> {
    pub success: bool,
    /// Accumulated configuration-space path length; 0 when unsuccessful.
    pub cost: T,
    /// Discrete steps consumed, including the terminating one.
    pub steps: usize,
}

/// Advance one control step from `cur` toward `target`: move by at most
/// `step_size` along the straight line, then add actuation noise.
pub fn step_toward<T: Scalar, R: Rng + ?Sized>(
    controller: &ControllerSpec<T>,
    cur: &Configuration<T>,
    target: &Configuration<T>,
    step_size: T,
    rng: &mut R,
) -> Configuration<T> {
    let ControllerKind::StraightLine = controller.kind;
    let d = cur.distance(target);
    let scale = if d > T::zero() {
        step_size.min(d) / d
    } else {
        T::zero()
    };
    let noise = controller.actuation_noise_std;
    let coords = cur
        .coords()
        .iter()
        .zip(target.coords())
        .map(|(&c, &t)| {
            let mut x = c + (t - c) * scale;
            if noise > T::zero() {
                x += noise * T::std_normal(rng);
            }
            x
        })
        .collect();
    Configuration::new(coords)
}

/// Simulate one attempt to steer from `from` to `to`.
///
/// The world is sampled once at trial start and stays fixed. Success
/// means entering the endgame ball around `to`; failure means colliding,
/// leaving the configuration bounds, or exceeding `max_steps`. Collision
/// is checked at each discrete step configuration, not along the sweep.
pub fn simulate_transition<T: Scalar, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    controller: &ControllerSpec<T>,
    from: &Configuration<T>,
    to: &Configuration<T>,
    rng: &mut R,
) -> TrialOutcome<T> {
    debug_assert!(scenario.bounds.contains(from) && scenario.bounds.contains(to));
    let world = sample_world(scenario, rng);
    simulate_in_world(scenario, controller, from, to, &world, rng)
}

pub(crate) fn simulate_in_world<T: Scalar, R: Rng + ?Sized>(
    scenario: &Scenario<T>,
    controller: &ControllerSpec<T>,
    from: &Configuration<T>,
    to: &Configuration<T>,
    world: &WorldSample<T>,
    rng: &mut R,
) -> TrialOutcome<T> {
    let mut cur = from.clone();
    let mut cost = T::zero();
    for step in 1..=scenario.max_steps {
        if cur.distance(to) <= scenario.endgame_radius {
            return TrialOutcome {
                success: true,
                cost,
                steps: step,
            };
        }
        let next = step_toward(controller, &cur, to, scenario.step_size, rng);
        if !scenario.bounds.contains(&next) || collides_unchecked(scenario, &next, world) {
            return TrialOutcome {
                success: false,
                cost: T::zero(),
                steps: step,
            };
        }
        cost += cur.distance(&next);
        cur = next;
    }
    TrialOutcome {
        success: false,
        cost: T::zero(),
        steps: scenario.max_steps,
    }
}

/// Run `trials` independent transitions with per-trial streams derived
/// from `(seed, edge identity, trial index)`, so results are independent
/// of evaluation order.
pub fn run_trials<T: Scalar>(
    scenario: &Scenario<T>,
    controller: &ControllerSpec<T>,
    from: &Configuration<T>,
    to: &Configuration<T>,
    edge: (u64, u64),
    trials: usize,
    seed: u64,
) -> Vec<TrialOutcome<T>> {
    (0..trials)
        .map(|t| {
            let mut stream =
                rng::stream(seed, &[rng::domain::EDGE_TRIAL, edge.0, edge.1, t as u64]);
            simulate_transition(scenario, controller, from, to, &mut stream)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Bounds, Obstacle, ObstacleShape, RobotModel};

    fn point_robot_scenario(
        obstacles: Vec<Obstacle<f64>>,
        noise: f64,
        step_size: f64,
        endgame: f64,
    ) -> Scenario<f64> {
        Scenario {
            bounds: Bounds {
                lo: vec![-2.0, -2.0],
                hi: vec![3.0, 3.0],
            },
            robot: RobotModel::DiscSet { radii: vec![1e-6] },
            obstacles,
            start: Configuration::new(vec![0.0, 0.5]),
            goal: Configuration::new(vec![1.0, 0.5]),
            endgame_radius: endgame,
            step_size,
            max_steps: 500,
            controller: ControllerSpec {
                kind: ControllerKind::StraightLine,
                actuation_noise_std: noise,
            },
        }
    }

    #[test]
    fn already_in_endgame() {
        let sc = point_robot_scenario(vec![], 0.0, 0.1, 0.05);
        let c = Configuration::new(vec![0.3, 0.3]);
        let out = simulate_transition(
            &sc,
            &sc.controller.clone(),
            &c,
            &c,
            &mut rng::stream(1, &[0]),
        );
        assert!(out.success);
        assert_eq!(out.cost, 0.0);
        assert_eq!(out.steps, 1);
    }

    #[test]
    fn deterministic_stepping_arithmetic() {
        // d = 1.0, h = 0.2, endgame = 0.05: five moves of 0.2 close the
        // distance exactly, success detected on iteration 6 with cost 1.0.
        let sc = point_robot_scenario(vec![], 0.0, 0.2, 0.05);
        let from = Configuration::new(vec![0.0, 0.5]);
        let to = Configuration::new(vec![1.0, 0.5]);
        let out = simulate_transition(
            &sc,
            &sc.controller.clone(),
            &from,
            &to,
            &mut rng::stream(1, &[0]),
        );
        assert!(out.success);
        assert_eq!(out.steps, 6);
        assert!((out.cost - 1.0).abs() < 1e-12);
        // And the generic prediction: ceil((d - endgame)/h) + 1 steps.
        assert_eq!(out.steps, ((1.0f64 - 0.05) / 0.2).ceil() as usize + 1);
    }

    #[test]
    fn blocked_line_fails_with_zero_cost() {
        let sc = point_robot_scenario(
            vec![Obstacle {
                shape: ObstacleShape::Disc { radius: 0.1 },
                nominal_position: [0.5, 0.5],
                position_std: [0.0, 0.0],
            }],
            0.0,
            0.05,
            0.02,
        );
        let from = Configuration::new(vec![0.0, 0.5]);
        let to = Configuration::new(vec![1.0, 0.5]);
        let out = simulate_transition(
            &sc,
            &sc.controller.clone(),
            &from,
            &to,
            &mut rng::stream(1, &[0]),
        );
        assert!(!out.success);
        assert_eq!(out.cost, 0.0);
    }

    #[test]
    fn run_trials_shape_and_determinism() {
        let sc = point_robot_scenario(vec![], 0.01, 0.1, 0.05);
        let from = Configuration::new(vec![0.0, 0.5]);
        let to = Configuration::new(vec![1.0, 0.5]);
        let one = run_trials(&sc, &sc.controller.clone(), &from, &to, (1, 2), 1, 99);
        assert_eq!(one.len(), 1);
        let a = run_trials(&sc, &sc.controller.clone(), &from, &to, (1, 2), 20, 99);
        let b = run_trials(&sc, &sc.controller.clone(), &from, &to, (1, 2), 20, 99);
        assert_eq!(a, b);
        let c = run_trials(&sc, &sc.controller.clone(), &from, &to, (2, 1), 20, 99);
        assert_ne!(a, c);
    }

    #[test]
    fn cost_positive_implies_success() {
        let sc = point_robot_scenario(
            vec![Obstacle {
                shape: ObstacleShape::Disc { radius: 0.12 },
                nominal_position: [0.5, 0.55],
                position_std: [0.05, 0.05],
            }],
            0.005,
            0.05,
            0.03,
        );
        let from = Configuration::new(vec![0.0, 0.5]);
        let to = Configuration::new(vec![1.0, 0.5]);
        for out in run_trials(&sc, &sc.controller.clone(), &from, &to, (0, 1), 300, 5) {
            assert!(out.steps >= 1 && out.steps <= sc.max_steps);
            if out.cost > 0.0 {
                assert!(out.success);
            }
            if !out.success {
                assert_eq!(out.cost, 0.0);
            }
        }
    }

    /// Gaussian-tail oracle: obstacle jitters only in y across a straight
    /// east-west route; the trial succeeds iff the sampled |y - 0.5|
    /// clears the combined radius, so P(success) = 2 * Phi(-c / s).
    #[test]
    fn success_rate_matches_gaussian_tail_oracle() {
        let r_obs = 0.1;
        let r_robot = 0.05;
        let sigma = 0.15;
        let clearance = r_obs + r_robot;
        let mut sc = point_robot_scenario(
            vec![Obstacle {
                shape: ObstacleShape::Disc { radius: r_obs },
                nominal_position: [0.5, 0.5],
                position_std: [0.0, sigma],
            }],
            0.0,
            0.1, // obstacle x sits exactly on a step point
            0.05,
        );
        sc.robot = RobotModel::DiscSet {
            radii: vec![r_robot],
        };
        let from = Configuration::new(vec![0.0, 0.5]);
        let to = Configuration::new(vec![1.0, 0.5]);
        let trials = 10_000;
        let outs = run_trials(&sc, &sc.controller.clone(), &from, &to, (0, 1), trials, 2024);
        let rate = outs.iter().filter(|o| o.success).count() as f64 / trials as f64;

        // Independent oracle: quadrature-based normal CDF.
        let p = 2.0 * crate::estimation::tests::phi_quadrature(-clearance / sigma);
        assert!(p > 0.05 && p < 0.95, "test setup should be nondegenerate");
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(
            (rate - p).abs() < 3.0 * se,
            "rate {rate} vs oracle {p} +/- {}",
            3.0 * se
        );
    }
}
