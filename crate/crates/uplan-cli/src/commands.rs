//! Implementations of the CLI subcommands. Every command is a pure
//! function of its input files, flags and seed, and returns the JSON
//! document printed to stdout.

use std::path::Path;

use serde_json::{json, Value};

use uplan_core::estimation::BoundMode;
use uplan_core::mdp;
use uplan_core::pathing::{self, EdgeProbability};
use uplan_core::roadmap::{self, BuildParams};
use uplan_core::scenario::sample_free_config;
use uplan_core::{rng, Configuration, PlanGraph, PlannedPath, Roadmap, Scenario};

use crate::errors::CliError;
use crate::io::{atomic_write, read};
use crate::render::render_svg;
use crate::{BoundModeArg, BuildArgs, ExecuteArgs, MdpEstimateArgs, MdpSolveArgs, PlanArgs, SolveModeArg};

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Ok(Scenario::from_json(&read(path)?)?)
}

fn load_roadmap(path: &Path) -> Result<Roadmap, CliError> {
    Ok(Roadmap::from_json(&read(path)?)?)
}

impl From<BoundModeArg> for BoundMode {
    fn from(arg: BoundModeArg) -> Self {
        match arg {
            BoundModeArg::Verbatim => BoundMode::Verbatim,
            BoundModeArg::Stderr => BoundMode::StandardError,
        }
    }
}

pub fn validate(path: &Path) -> Result<Value, CliError> {
    let scenario = load_scenario(path)?;
    let robot = match &scenario.robot {
        uplan_core::scenario::RobotModel::DiscSet { radii } => {
            format!("disc_set({})", radii.len())
        }
        uplan_core::scenario::RobotModel::PlanarArm { link_lengths, .. } => {
            format!("planar_arm({})", link_lengths.len())
        }
    };
    Ok(json!({
        "ok": true,
        "dof": scenario.dof(),
        "robot": robot,
        "obstacles": scenario.obstacles.len(),
        "warnings": scenario.warnings(),
    }))
}

pub fn build(args: &BuildArgs) -> Result<Value, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let params = BuildParams {
        n: args.n,
        k: args.k,
        trials: args.trials,
        gamma: args.gamma,
        seed: args.seed,
        bound_mode: args.bound_mode.into(),
    };
    let rm = roadmap::build(&scenario, &scenario.controller.clone(), params)?;
    atomic_write(&args.out, &rm.to_json()?)?;
    let (bins, ones) = rm.probability_histogram();
    Ok(json!({
        "milestones": rm.interior_count(),
        "edges": rm.edges().len(),
        "histogram": { "bins": bins.to_vec(), "ones": ones },
        "out": args.out.display().to_string(),
    }))
}

fn path_record(
    graph: &PlanGraph,
    roadmap: &Roadmap,
    path: &PlannedPath,
    p_min: Option<f64>,
    levels: Option<usize>,
) -> Value {
    let _ = graph;
    let waypoints: Vec<Vec<f64>> = path
        .node_ids
        .iter()
        .map(|&id| roadmap.config(id).expect("path node exists").coords().to_vec())
        .collect();
    json!({
        "path": path.node_ids,
        "cost": path.total_cost,
        "success_lower_bound": path.success_lower_bound,
        "p_min": p_min,
        "S": levels,
        "waypoints": waypoints,
    })
}

pub fn plan(args: &PlanArgs) -> Result<Value, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let rm = load_roadmap(&args.roadmap)?;
    let build_params = rm.build_params().clone();
    let k = args.k.unwrap_or(build_params.k);
    let trials = args.trials.unwrap_or(build_params.trials);
    let gamma = args.gamma.unwrap_or(build_params.gamma);

    let (start_id, goal_id, augmented) = roadmap::insert_query(
        &rm,
        &scenario,
        &scenario.controller.clone(),
        scenario.start.clone(),
        scenario.goal.clone(),
        k,
        trials,
        gamma,
        args.seed,
    )?;
    if let Some(out) = &args.save_roadmap {
        atomic_write(out, &augmented.to_json()?)?;
    }

    let prob = if args.use_p_hat {
        EdgeProbability::Empirical
    } else {
        EdgeProbability::LowerBound
    };
    let graph = PlanGraph::from_roadmap(&augmented, prob);

    if let Some(sweep) = &args.sweep {
        if args.render.is_some() {
            return Err(CliError::Validation(
                "--render is not available with --sweep".into(),
            ));
        }
        let values: Vec<f64> = sweep
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| CliError::Validation(format!("bad sweep value {tok:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(CliError::Validation("empty sweep list".into()));
        }
        let mut records = Vec::new();
        for p_min in values {
            match pathing::constrained_shortest_path(&graph, start_id, goal_id, p_min, args.levels)
            {
                Ok(path) => records.push(path_record(
                    &graph,
                    &augmented,
                    &path,
                    Some(p_min),
                    Some(args.levels),
                )),
                Err(pathing::PathingError::Infeasible { p_min, best }) => records.push(json!({
                    "p_min": p_min,
                    "error": "infeasible",
                    "best_achievable": best,
                })),
                Err(other) => return Err(other.into()),
            }
        }
        return Ok(Value::Array(records));
    }

    let (path, record) = match args.p_min {
        Some(p_min) => {
            let path =
                pathing::constrained_shortest_path(&graph, start_id, goal_id, p_min, args.levels)?;
            let record = path_record(&graph, &augmented, &path, Some(p_min), Some(args.levels));
            (path, record)
        }
        None => {
            let path = pathing::max_prob_path(&graph, start_id, goal_id)?;
            let record = path_record(&graph, &augmented, &path, None, None);
            (path, record)
        }
    };

    if let Some(svg_path) = &args.render {
        let configs: Vec<Configuration> = path
            .node_ids
            .iter()
            .map(|&id| augmented.config(id).expect("path node exists").clone())
            .collect();
        atomic_write(svg_path, &render_svg(&scenario, Some(&augmented), &configs))?;
    }
    Ok(record)
}

pub fn execute(args: &ExecuteArgs) -> Result<Value, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let rm = load_roadmap(&args.roadmap)?;
    let plan_doc: Value = serde_json::from_str(&read(&args.plan)?)
        .map_err(|e| CliError::Validation(format!("plan file: {e}")))?;
    let ids: Vec<usize> = plan_doc
        .get("path")
        .and_then(|v| v.as_array())
        .ok_or_else(|| CliError::Validation("plan file lacks a path array".into()))?
        .iter()
        .map(|v| {
            v.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| CliError::Validation("non-integer path id".into()))
        })
        .collect::<Result<_, _>>()?;

    // Reassemble the planned path with its bound from the stored edges.
    let mut bound = 1.0;
    let mut cost = 0.0;
    for w in ids.windows(2) {
        let edge = rm
            .out_edges(w[0])
            .find(|e| e.to == w[1])
            .ok_or_else(|| {
                CliError::Validation(format!("plan edge {} -> {} not in roadmap", w[0], w[1]))
            })?;
        bound *= edge.p();
        cost += edge.cost();
    }
    let path = PlannedPath {
        node_ids: ids,
        total_cost: Some(cost),
        success_lower_bound: bound,
    };

    let stats = pathing::execute_policy(
        &scenario,
        &scenario.controller.clone(),
        &rm,
        &path,
        args.runs,
        args.seed,
    )?;
    Ok(json!({
        "runs": stats.runs,
        "successes": stats.successes,
        "success_rate": stats.success_rate,
        "mean_cost_of_successes": stats.mean_cost_of_successes,
        "success_lower_bound": path.success_lower_bound,
    }))
}

pub fn mdp_estimate(args: &MdpEstimateArgs) -> Result<Value, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    if args.n < 2 {
        return Err(CliError::Validation("need at least 2 milestones".into()));
    }
    let mut stream = rng::stream(args.seed, &[rng::domain::MILESTONES]);
    let milestones: Vec<Configuration> = (0..args.n)
        .map(|_| sample_free_config(&scenario, &mut stream))
        .collect::<Result<_, _>>()?;
    let est = mdp::estimate(
        &scenario,
        milestones,
        vec![scenario.controller.clone()],
        args.alpha,
        args.trials_per_state,
        args.seed,
    )?;
    atomic_write(&args.out, &est.to_json()?)?;
    Ok(json!({
        "states": est.n_states(),
        "actions": est.n_actions(),
        "alpha": est.alpha,
        "trials_per_state": est.trials_per_state,
        "out": args.out.display().to_string(),
    }))
}

pub fn mdp_solve(args: &MdpSolveArgs) -> Result<Value, CliError> {
    let est = mdp::MdpEstimate::from_json(&read(&args.estimate)?)?;
    let verbose = args.verbose;
    let on_sweep = |iter: usize, residual: f64| {
        if verbose {
            eprintln!("iter {iter}: residual {residual:e}");
        }
    };
    match args.mode {
        SolveModeArg::Interval => {
            let imdp = mdp::interval_bounds(&est, args.gamma)?;
            let out =
                mdp::interval_value_iteration_observed(&imdp, args.tol, args.max_iters, on_sweep)?;
            let doc = json!({
                "format": 1,
                "mode": "interval",
                "gamma": args.gamma,
                "v_lo": out.v_lo,
                "v_hi": out.v_hi,
                "policy_hi": out.policy_hi,
                "iterations": out.iterations,
                "residual": out.residual,
                "actions": est.actions,
            });
            atomic_write(&args.out, &format!("{:#}\n", doc))?;
            Ok(json!({
                "mode": "interval",
                "iterations": out.iterations,
                "residual": out.residual,
                "out": args.out.display().to_string(),
            }))
        }
        SolveModeArg::Ellipsoid => {
            let n = est.n_states();
            let mut rows = Vec::with_capacity(est.n_actions());
            let mut delta_max = 0.0f64;
            for a in 0..est.n_actions() {
                let mut per_state = Vec::with_capacity(n);
                for i in 0..n {
                    let (omega, delta) = mdp::fit_omega(
                        &est.records[a][i],
                        n,
                        est.alpha,
                        args.reg_eps,
                        args.gamma,
                    )?;
                    delta_max = delta_max.max(delta);
                    per_state.push(mdp::EllipsoidalRow { omega, delta });
                }
                rows.push(per_state);
            }
            let emdp = mdp::EllipsoidalMdp {
                n_states: n,
                n_actions: est.n_actions(),
                p_hat: est.p_hat.clone(),
                rows,
            };
            // Pessimistic costs from the interval construction at the
            // same confidence level.
            let costs = mdp::interval_bounds(&est, args.gamma)?.c_hi;
            let out = mdp::robust_value_iteration_ellipsoidal_observed(
                &emdp,
                &costs,
                args.tol,
                args.max_iters,
                on_sweep,
            )?;
            let doc = json!({
                "format": 1,
                "mode": "ellipsoid",
                "gamma": args.gamma,
                "reg_eps": args.reg_eps,
                "values": out.values,
                "policy": out.policy,
                "iterations": out.iterations,
                "residual": out.residual,
                "box_exit_warnings": out.box_exit_warnings,
                "delta_max": delta_max,
                "actions": est.actions,
            });
            atomic_write(&args.out, &format!("{:#}\n", doc))?;
            Ok(json!({
                "mode": "ellipsoid",
                "iterations": out.iterations,
                "residual": out.residual,
                "box_exit_warnings": out.box_exit_warnings,
                "out": args.out.display().to_string(),
            }))
        }
    }
}

pub fn bound(epsilon: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Value, CliError> {
    let m = pathing::milestone_bound(epsilon, alpha, beta, gamma)?;
    Ok(json!(m))
}
