//! Solving the tilt: given a target mean mu, find beta_hat with
//! tilted_mean(beta_hat) = mu, and package the quantities every estimator
//! needs.
//!
//! The divergence rate is the Legendre transform of ln Z,
//!
//! ```text
//!   D(mu) = beta_hat mu - ln Z(beta_hat),      dD/dmu = beta_hat(mu),
//! ```
//!
//! strictly convex on the mean range with its minimum D = 0 at the base
//! mean. The four catalogue families have closed forms for beta_hat and
//! D; finite pmfs go through a safeguarded Newton iteration on the
//! strictly increasing map beta -> tilted_mean(beta).

use crate::distributions::DistributionModel;
use crate::{Error, Result};

/// Tilts with |beta_hat| below this are flagged `near_base_mean`: the
/// correction constant divides by beta_hat, so downstream refinements
/// refuse rather than amplify noise.
pub const DEGENERATE_BETA: f64 = 1e-4;

/// The solved tilt at a target mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedSummary {
    /// beta_hat(mu), the tilt reaching the target mean.
    pub beta_hat: f64,
    /// D(mu) = beta_hat mu - ln Z(beta_hat), non-negative.
    pub divergence: f64,
    /// V(mu), the variance of the tilted law, positive.
    pub variance: f64,
    /// ln Z(beta_hat).
    pub log_partition_at_tilt: f64,
    /// The mu that was solved for.
    pub target_mean: f64,
    /// Set when |beta_hat| < [`DEGENERATE_BETA`]; see there.
    pub near_base_mean: bool,
}

/// Solves the tilt at `mu`. Catalogue families use their closed forms
/// (with the divergence in its cancellation-free shape); finite pmfs use
/// the bracketed Newton solver. `mu` must lie strictly inside the mean
/// range; means below the base mean are legal here (beta_hat < 0), the
/// tail estimators reject them separately.
pub fn solve_tilt(model: &DistributionModel, mu: f64) -> Result<TiltedSummary> {
    let range = model.mean_range();
    if !mu.is_finite() || !range.contains(mu) {
        return Err(Error::MuOutOfRange {
            mu,
            infimum: range.infimum,
            supremum: range.supremum,
        });
    }
    let (beta_hat, divergence, variance, log_partition_at_tilt) = match model {
        DistributionModel::Bernoulli { p } => {
            let beta = (mu * (1.0 - p) / (p * (1.0 - mu))).ln();
            let d = mu * (mu / p).ln() + (1.0 - mu) * ((1.0 - mu) / (1.0 - p)).ln();
            let z = ((1.0 - p) / (1.0 - mu)).ln();
            (beta, d, mu * (1.0 - mu), z)
        }
        DistributionModel::Poisson { lambda } => {
            let beta = (mu / lambda).ln();
            let d = mu * beta - mu + lambda;
            (beta, d, mu, mu - lambda)
        }
        DistributionModel::Exponential { rate } => {
            let beta = rate - 1.0 / mu;
            let z = (rate * mu).ln();
            let d = rate * mu - 1.0 - z;
            (beta, d, mu * mu, z)
        }
        DistributionModel::Gaussian { mean, variance } => {
            let beta = (mu - mean) / variance;
            let d = (mu - mean) * (mu - mean) / (2.0 * variance);
            (
                beta,
                d,
                *variance,
                mean * beta + 0.5 * variance * beta * beta,
            )
        }
        DistributionModel::FinitePmf { .. } => {
            let beta = solve_tilt_numeric(model, mu, range.base_mean)?;
            let z = model.log_partition(beta)?;
            (beta, beta * mu - z, model.tilted_variance(beta)?, z)
        }
    };
    Ok(TiltedSummary {
        beta_hat,
        // The closed forms are exact; only rounding can push D below 0,
        // and only when mu is essentially the base mean.
        divergence: divergence.max(0.0),
        variance,
        log_partition_at_tilt,
        target_mean: mu,
        near_base_mean: beta_hat.abs() < DEGENERATE_BETA,
    })
}

/// dD/dmu, which equals beta_hat(mu). Exposed under its analytic name so
/// the gradient property test reads as the identity it checks.
pub fn divergence_derivative(model: &DistributionModel, mu: f64) -> Result<f64> {
    Ok(solve_tilt(model, mu)?.beta_hat)
}

/// Newton iteration on f(beta) = tilted_mean(beta) - mu with
/// tilted_variance as the exact slope, safeguarded by a bracket that
/// every step must stay inside (bisection otherwise). tilted_mean is
/// strictly increasing, so the bracket never lies.
fn solve_tilt_numeric(model: &DistributionModel, mu: f64, base_mean: f64) -> Result<f64> {
    const MAX_ITER: usize = 200;
    let mean_tol = 1e-12 * mu.abs().max(1.0);
    if (mu - base_mean).abs() <= mean_tol {
        return Ok(0.0);
    }

    let (mut lo, mut hi) = bracket(model, mu, base_mean)?;
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let f = model.tilted_mean(beta)? - mu;
        if f.abs() <= mean_tol {
            return Ok(polish(model, mu, beta, f));
        }
        if f > 0.0 {
            hi = beta;
        } else {
            lo = beta;
        }
        let mut next = beta - f / model.tilted_variance(beta)?;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step_tol = 1e-14 * beta.abs().max(1.0);
        if (next - beta).abs() <= step_tol {
            let f_next = model.tilted_mean(next)? - mu;
            return Ok(polish(model, mu, next, f_next));
        }
        beta = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
    })
}

/// One extra guarded Newton step after the stop criterion fires. The
/// stop tolerance is on the mean, which maps to a beta error of
/// mean_tol / V; near the edges of a bounded support V is small and that
/// quotient is coarser than the advertised beta agreement, while one
/// quadratic step lands well inside it. Kept only when it helps.
fn polish(model: &DistributionModel, mu: f64, beta: f64, f: f64) -> f64 {
    let step = match model.tilted_variance(beta) {
        Ok(v) => f / v,
        Err(_) => return beta,
    };
    let cand = beta - step;
    match model.tilted_mean(cand) {
        Ok(m) if (m - mu).abs() <= f.abs() => cand,
        _ => beta,
    }
}

/// Expands geometrically from beta = 0 toward the target side until the
/// tilted mean straddles mu, capping at the natural-domain endpoint when
/// there is one. The caller guarantees mu is interior, so the crossing
/// exists.
fn bracket(model: &DistributionModel, mu: f64, base_mean: f64) -> Result<(f64, f64)> {
    let upward = mu > base_mean;
    let (dom_lo, dom_hi) = model.natural_domain();
    let limit = if upward { dom_hi } else { dom_lo };
    let mut step = 1.0;
    let mut inner = 0.0;
    for _ in 0..200 {
        let mut cand = if upward { step } else { -step };
        if limit.is_finite() {
            // Stay strictly inside the domain; 1e-12 of the remaining
            // width keeps the moment evaluations finite.
            let width = (limit - inner).abs();
            let edge = limit - if upward { 1.0 } else { -1.0 } * 1e-12 * width;
            if upward && cand > edge {
                cand = edge;
            }
            if !upward && cand < edge {
                cand = edge;
            }
        }
        let m = model.tilted_mean(cand)?;
        if (upward && m >= mu) || (!upward && m <= mu) {
            return Ok(if upward { (inner, cand) } else { (cand, inner) });
        }
        inner = cand;
        step *= 2.0;
    }
    Err(Error::NoConvergence { iterations: 200 })
}
