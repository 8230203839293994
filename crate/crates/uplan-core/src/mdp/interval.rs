//! Elementwise-interval uncertainty sets and interval value iteration.
//!
//! The pessimistic update maximizes, and the optimistic update minimizes,
//! the one-step return over transition rows constrained elementwise to
//! `[P_lo, P_hi]` with total mass in `[row_mass_lo, row_mass_hi]`. Both
//! inner problems are solved by the greedy budget rule: start every entry
//! at its lower bound, then pour the remaining mass into destinations in
//! order of (decreasing / increasing) value, each capped at its upper
//! bound.

use serde::{Deserialize, Serialize};

use crate::estimation::inv_norm_cdf;
use crate::num::{cst, Scalar};

use super::estimate::MdpEstimate;
use super::linalg::{dot, Matrix};
use super::MdpError;

/// Discounted MDP with elementwise interval uncertainty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMdp<T> {
    pub n_states: usize,
    pub n_actions: usize,
    pub p_lo: Vec<Matrix<T>>,
    pub p_hi: Vec<Matrix<T>>,
    pub c_lo: Vec<Vec<T>>,
    pub c_hi: Vec<Vec<T>>,
    pub row_mass_lo: Vec<Vec<T>>,
    pub row_mass_hi: Vec<Vec<T>>,
    /// Point estimate of each row's mass, used to decide whether a
    /// non-contractive upper bound may be clamped.
    pub row_mass_hat: Vec<Vec<T>>,
}

/// Paired value vectors at the fixed point, plus the pessimistic policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueInterval<T> {
    pub v_lo: Vec<T>,
    pub v_hi: Vec<T>,
    /// Per-state action minimizing the pessimistic value, ties to the
    /// lower action index.
    pub policy_hi: Vec<usize>,
    pub iterations: usize,
    pub residual: T,
}

/// Confidence bounds around the simulation estimates: every entry gets
/// `mean ± z_gamma * SE` clipped to its natural range; the same
/// construction bounds costs and row masses. Requires `gamma` in
/// `[0.5, 1)` so that lower bounds stay below upper bounds.
pub fn interval_bounds<T: Scalar>(
    estimate: &MdpEstimate<T>,
    gamma: T,
) -> Result<IntervalMdp<T>, MdpError> {
    let g = gamma.to_f64().unwrap_or(f64::NAN);
    if !(0.5..1.0).contains(&g) {
        return Err(MdpError::InvalidParams(format!(
            "gamma must lie in [0.5, 1), got {g}"
        )));
    }
    let z = inv_norm_cdf(gamma)?;
    let n = estimate.n_states();
    let n_actions = estimate.n_actions();
    let alpha = estimate.alpha;

    let mut p_lo = Vec::with_capacity(n_actions);
    let mut p_hi = Vec::with_capacity(n_actions);
    let mut c_lo = Vec::with_capacity(n_actions);
    let mut c_hi = Vec::with_capacity(n_actions);
    let mut row_mass_lo = Vec::with_capacity(n_actions);
    let mut row_mass_hi = Vec::with_capacity(n_actions);
    let mut row_mass_hat = Vec::with_capacity(n_actions);

    // mean ± z * sqrt(unbiased variance / T), with the T = 1 convention
    // of zero spread.
    let bounds_of = |samples: &[T], clip_hi: Option<T>| -> (T, T, T) {
        let t = samples.len();
        let tf = T::from_usize(t).unwrap();
        let mean = samples.iter().fold(T::zero(), |s, &v| s + v) / tf;
        let spread = if t >= 2 {
            let var = samples
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .fold(T::zero(), |s, v| s + v)
                / (tf - T::one());
            z * (var / tf).sqrt()
        } else {
            T::zero()
        };
        let lo = (mean - spread).max(T::zero());
        let hi = match clip_hi {
            Some(cap) => (mean + spread).min(cap),
            None => mean + spread,
        };
        (lo, mean, hi)
    };

    for a in 0..n_actions {
        let mut plo = Matrix::zeros(n, n);
        let mut phi = Matrix::zeros(n, n);
        let mut clo = Vec::with_capacity(n);
        let mut chi = Vec::with_capacity(n);
        let mut mlo = Vec::with_capacity(n);
        let mut mhi = Vec::with_capacity(n);
        let mut mhat = Vec::with_capacity(n);
        for i in 0..n {
            let records = &estimate.records[a][i];
            for j in 0..n {
                let contributions: Vec<T> = records
                    .iter()
                    .map(|r| {
                        if r.dest == Some(j) {
                            alpha.powi(r.tau as i32 - 1)
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                let (lo, _, hi) = bounds_of(&contributions, Some(T::one()));
                plo[(i, j)] = lo;
                phi[(i, j)] = hi;
            }
            let costs: Vec<T> = records.iter().map(|r| r.dcost).collect();
            let (lo, _, hi) = bounds_of(&costs, None);
            clo.push(lo);
            chi.push(hi);
            let masses: Vec<T> = records
                .iter()
                .map(|r| {
                    if r.dest.is_some() {
                        alpha.powi(r.tau as i32 - 1)
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let (lo, mean, hi) = bounds_of(&masses, Some(T::one()));
            mlo.push(lo);
            mhi.push(hi);
            mhat.push(mean);
        }
        p_lo.push(plo);
        p_hi.push(phi);
        c_lo.push(clo);
        c_hi.push(chi);
        row_mass_lo.push(mlo);
        row_mass_hi.push(mhi);
        row_mass_hat.push(mhat);
    }

    Ok(IntervalMdp {
        n_states: n,
        n_actions,
        p_lo,
        p_hi,
        c_lo,
        c_hi,
        row_mass_lo,
        row_mass_hi,
        row_mass_hat,
    })
}

impl<T: Scalar> IntervalMdp<T> {
    /// Point-interval MDP (no uncertainty): both bounds equal the given
    /// transition matrices and costs.
    pub fn point(p: Vec<Matrix<T>>, c: Vec<Vec<T>>) -> Self {
        let n_actions = p.len();
        let n_states = p.first().map_or(0, |m| m.rows());
        let mass: Vec<Vec<T>> = p
            .iter()
            .map(|m| {
                (0..n_states)
                    .map(|i| m.row(i).iter().fold(T::zero(), |s, &v| s + v))
                    .collect()
            })
            .collect();
        Self {
            n_states,
            n_actions,
            p_lo: p.clone(),
            p_hi: p,
            c_lo: c.clone(),
            c_hi: c,
            row_mass_lo: mass.clone(),
            row_mass_hi: mass.clone(),
            row_mass_hat: mass,
        }
    }
}

/// Greedy extremal row: entries start at `lo`, remaining mass up to
/// `target_mass` is poured along `order`, each entry capped at `hi`.
/// Returns the inner product with `v`.
fn extremal_row_value<T: Scalar>(
    lo: &[T],
    hi: &[T],
    target_mass: T,
    v: &[T],
    order: &[usize],
) -> T {
    let sum_lo = lo.iter().fold(T::zero(), |s, &x| s + x);
    let mut value = dot(lo, v);
    let mut remaining = (target_mass - sum_lo).max(T::zero());
    for &j in order {
        if remaining <= T::zero() {
            break;
        }
        let slack = hi[j] - lo[j];
        if slack <= T::zero() {
            continue;
        }
        let add = slack.min(remaining);
        value += add * v[j];
        remaining -= add;
    }
    value
}

fn order_by_value<T: Scalar>(v: &[T], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = v[a].partial_cmp(&v[b]).unwrap();
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    idx
}

/// Pessimistic one-step return for `(state, action)` given values `v`.
fn inner_max<T: Scalar>(imdp: &IntervalMdp<T>, a: usize, i: usize, v: &[T], mass_hi: T) -> T {
    let lo = imdp.p_lo[a].row(i);
    let hi = imdp.p_hi[a].row(i);
    let sum_hi = hi.iter().fold(T::zero(), |s, &x| s + x);
    let order = order_by_value(v, true);
    extremal_row_value(lo, hi, mass_hi.min(sum_hi), v, &order)
}

/// Optimistic one-step return for `(state, action)` given values `v`.
fn inner_min<T: Scalar>(imdp: &IntervalMdp<T>, a: usize, i: usize, v: &[T]) -> T {
    let lo = imdp.p_lo[a].row(i);
    let hi = imdp.p_hi[a].row(i);
    let sum_lo = lo.iter().fold(T::zero(), |s, &x| s + x);
    let order = order_by_value(v, false);
    extremal_row_value(lo, hi, imdp.row_mass_lo[a][i].max(sum_lo), v, &order)
}

/// Iterate the paired pessimistic/optimistic updates from `V = 0` until
/// the sup-norm change of both drops below `tol`.
///
/// Rows whose upper mass bound reaches 1 are clamped to `1 - 1e-9` when
/// the point estimate itself is below 1; rows whose estimate is already
/// at 1 are genuinely non-contractive and rejected.
pub fn interval_value_iteration<T: Scalar>(
    imdp: &IntervalMdp<T>,
    tol: T,
    max_iters: usize,
) -> Result<ValueInterval<T>, MdpError> {
    interval_value_iteration_observed(imdp, tol, max_iters, |_, _| {})
}

/// As [`interval_value_iteration`], invoking `on_sweep(iteration,
/// residual)` after every sweep (drives the CLI's verbose mode).
pub fn interval_value_iteration_observed<T: Scalar>(
    imdp: &IntervalMdp<T>,
    tol: T,
    max_iters: usize,
    mut on_sweep: impl FnMut(usize, T),
) -> Result<ValueInterval<T>, MdpError> {
    if imdp.n_states == 0 || imdp.n_actions == 0 {
        return Err(MdpError::InvalidParams("empty MDP".into()));
    }
    if !(tol > T::zero()) || max_iters == 0 {
        return Err(MdpError::InvalidParams(
            "tol must be > 0 and max_iters >= 1".into(),
        ));
    }

    // Contraction screening with the documented clamping rule.
    let one = T::one();
    let clamp_cap = one - cst::<T>(1e-9);
    let mut mass_hi = vec![vec![T::zero(); imdp.n_states]; imdp.n_actions];
    let mut offending = Vec::new();
    for a in 0..imdp.n_actions {
        for i in 0..imdp.n_states {
            let hi = imdp.row_mass_hi[a][i];
            if hi < one {
                mass_hi[a][i] = hi;
            } else if imdp.row_mass_hat[a][i] < one {
                mass_hi[a][i] = clamp_cap;
            } else {
                offending.push((i, a));
            }
        }
    }
    if !offending.is_empty() {
        return Err(MdpError::NonContractive { pairs: offending });
    }

    let n = imdp.n_states;
    let mut v_hi = vec![T::zero(); n];
    let mut v_lo = vec![T::zero(); n];
    let mut policy_hi = vec![0usize; n];
    for iter in 1..=max_iters {
        let mut next_hi = vec![T::zero(); n];
        let mut next_lo = vec![T::zero(); n];
        let mut residual = T::zero();
        for i in 0..n {
            let mut best_hi = T::infinity();
            let mut best_lo = T::infinity();
            let mut best_action = 0usize;
            for a in 0..imdp.n_actions {
                let q_hi = imdp.c_hi[a][i] + inner_max(imdp, a, i, &v_hi, mass_hi[a][i]);
                if q_hi < best_hi {
                    best_hi = q_hi;
                    best_action = a;
                }
                let q_lo = imdp.c_lo[a][i] + inner_min(imdp, a, i, &v_lo);
                if q_lo < best_lo {
                    best_lo = q_lo;
                }
            }
            next_hi[i] = best_hi;
            next_lo[i] = best_lo;
            policy_hi[i] = best_action;
            residual = residual
                .max((next_hi[i] - v_hi[i]).abs())
                .max((next_lo[i] - v_lo[i]).abs());
        }
        v_hi = next_hi;
        v_lo = next_lo;
        on_sweep(iter, residual);
        if residual < tol {
            return Ok(ValueInterval {
                v_lo,
                v_hi,
                policy_hi,
                iterations: iter,
                residual,
            });
        }
    }
    Err(MdpError::NoConvergence {
        iterations: max_iters,
    })
}
