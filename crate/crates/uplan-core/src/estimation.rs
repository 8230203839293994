//! Edge statistics from trial outcomes: empirical success probability,
//! mean cost, empirical variance and the reliability-gamma lower bound on
//! the success probability.
//!
//! Two bound modes are provided. `Verbatim` rescales by the per-trial
//! standard deviation sigma-hat; `StandardError` rescales by
//! sigma-hat / sqrt(T), the standard deviation of the mean. The verbatim
//! form is much more conservative: it zeroes out mid-range success
//! probabilities unless T is small. Both are kept because neither is
//! clearly "the" intended estimator; callers choose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::TrialOutcome;
use crate::num::{cst, Scalar};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("gamma must lie strictly inside (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("edge statistics need at least one trial")]
    NoTrials,
}

/// How the lower confidence bound rescales the empirical variance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// p_lower = max(p_hat - sigma_hat * z_gamma, 0).
    Verbatim,
    /// p_lower = max(p_hat - sigma_hat / sqrt(T) * z_gamma, 0).
    StandardError,
}

/// Summary statistics for one directed edge.
///
/// `sigma2_hat` is the unbiased sample variance of the Bernoulli success
/// indicators, computed as [T_success(1 - 2 p_hat) + T p_hat^2] / (T - 1);
/// by convention it is 0 when T = 1. `c_hat` is absent when no trial
/// succeeded — such edges must be treated as nonexistent downstream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats<T> {
    pub trials: usize,
    pub successes: usize,
    pub p_hat: T,
    pub c_hat: Option<T>,
    pub sigma2_hat: T,
    pub p_lower: T,
}

/// Compute [`EdgeStats`] from trial outcomes.
///
/// With gamma >= 0.5 the bound satisfies 0 <= p_lower <= p_hat; gamma
/// below 0.5 is accepted (the formula is applied as-is) but yields an
/// anti-conservative value above p_hat.
pub fn edge_stats<T: Scalar>(
    outcomes: &[TrialOutcome<T>],
    gamma: T,
    mode: BoundMode,
) -> Result<EdgeStats<T>, EstimationError> {
    if outcomes.is_empty() {
        return Err(EstimationError::NoTrials);
    }
    let gamma_f = gamma.to_f64().unwrap_or(f64::NAN);
    if !(gamma_f > 0.0 && gamma_f < 1.0) {
        return Err(EstimationError::GammaOutOfRange(gamma_f));
    }

    let trials = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    let t = cst::<T>(trials as f64);
    let t_succ = cst::<T>(successes as f64);
    let p_hat = t_succ / t;

    let c_hat = if successes > 0 {
        let total = outcomes
            .iter()
            .filter(|o| o.success)
            .fold(T::zero(), |acc, o| acc + o.cost);
        Some(total / t_succ)
    } else {
        None
    };

    let sigma2_hat = if trials >= 2 {
        let one = T::one();
        let two = one + one;
        let raw = (t_succ * (one - two * p_hat) + t * p_hat * p_hat) / (t - one);
        raw.max(T::zero())
    } else {
        T::zero()
    };

    let z = inv_norm_cdf(gamma)?;
    let scale = match mode {
        BoundMode::Verbatim => sigma2_hat.sqrt(),
        BoundMode::StandardError => sigma2_hat.sqrt() / t.sqrt(),
    };
    let p_lower = (p_hat - scale * z).max(T::zero());

    Ok(EdgeStats {
        trials,
        successes,
        p_hat,
        c_hat,
        sigma2_hat,
        p_lower,
    })
}

impl<T: Scalar> EdgeStats<T> {
    /// Recompute the stats implied by raw counts (used to verify stored
    /// roadmaps against their provenance fields).
    pub fn from_counts(
        trials: usize,
        successes: usize,
        c_hat: Option<T>,
        gamma: T,
        mode: BoundMode,
    ) -> Result<Self, EstimationError> {
        let outcomes: Vec<TrialOutcome<T>> = (0..trials)
            .map(|i| TrialOutcome {
                success: i < successes,
                cost: T::zero(),
                steps: 1,
            })
            .collect();
        let mut stats = edge_stats(&outcomes, gamma, mode)?;
        stats.c_hat = c_hat;
        Ok(stats)
    }
}

// ---------------------------------------------------------------------------
// Standard normal CDF and quantile.
// ---------------------------------------------------------------------------

/// Standard normal CDF, accurate to roughly machine precision.
///
/// Uses the all-positive-term power series of erf for small arguments and
/// the Laplace continued fraction of erfc (modified Lentz) for the tails.
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    let xf = x.to_f64().expect("finite scalar");
    cst(norm_cdf_f64(xf))
}

fn norm_cdf_f64(x: f64) -> f64 {
    let z = -x / std::f64::consts::SQRT_2; // phi(x) = erfc(z) / 2
    0.5 * erfc_f64(z)
}

fn erfc_f64(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_f64(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// erf(x) = 2x/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n / (2n+1)!!
/// All terms are positive, so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0u32;
    while term > 1e-18 * sum {
        n += 1;
        term *= two_x2 / (2.0 * n as f64 + 1.0);
        sum += term;
        if n > 200 {
            break;
        }
    }
    let fpi = std::f64::consts::PI;
    2.0 * x / fpi.sqrt() * (-x * x).exp() * sum
}

/// Laplace continued fraction for erfc, evaluated with modified Lentz:
/// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/(2x + 2/(x + 3/(2x + ...)))).
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200 {
        let a = 0.5 * k as f64; // numerators 1/2, 1, 3/2, ... when folded to step x
        let b = x;
        // Continued fraction in the equivalent folded form:
        // 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + 2/(x + ...)))))
        d = b + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    let fpi = std::f64::consts::PI;
    (-x * x).exp() / fpi.sqrt() / f
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation refined with one Halley step against
/// [`norm_cdf`]; |Phi(result) - gamma| stays below 1e-8 for gamma in
/// [1e-6, 1 - 1e-6] (in f64).
pub fn inv_norm_cdf<T: Scalar>(gamma: T) -> Result<T, EstimationError> {
    let p = gamma.to_f64().unwrap_or(f64::NAN);
    if !(p > 0.0 && p < 1.0) {
        return Err(EstimationError::GammaOutOfRange(p));
    }
    Ok(cst(inv_norm_cdf_f64(p)))
}

fn inv_norm_cdf_f64(p: f64) -> f64 {
    // Coefficients from Acklam's published rational approximation.
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p > 1.0 - P_LOW {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // One Halley refinement step.
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let e = norm_cdf_f64(x) - p;
    let u = e * sqrt_2pi * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
