//! Tail-probability estimators for P{mean of n draws >= mu}.
//!
//! Three levels, each a refinement of the previous:
//!
//! ```text
//!   sanov             -n D(mu)
//!   bahadur_rao       -n D(mu) - (1/2) ln(2 pi n V(mu)) - ln bf(mu)
//!   refined_gaussian  ln Phi(-sqrt(2 n D(mu_n - c_mu / n)))
//! ```
//!
//! `bf` is the lattice-aware prefactor: beta_hat for non-lattice models
//! and (1 - e^{-d beta_hat})/d on a lattice of span d (its d -> 0 limit
//! is beta_hat, so the two agree where they meet). The refined estimate
//! first rounds mu up to the sum lattice (tail probabilities are constant
//! between grid points), then shifts the target by c_mu / n, where
//!
//! ```text
//!   c_mu = ln( sqrt(2 D / V) / bf ) / beta_hat
//! ```
//!
//! is chosen so the Gaussian tail at the shifted mean reproduces the
//! Bahadur-Rao prefactor to leading order. Everything here works in log
//! domain; `prob` fields are a convenience and underflow to 0 on their
//! own without touching `log_prob`.

use crate::distributions::{DistributionModel, LatticeInfo};
use crate::numerics;
use crate::tilting::{self, TiltedSummary};
use crate::{Error, Result};

/// Estimator selector. The labels are the stable public names used in
/// CLI and CSV output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sanov,
    BahadurRao,
    RefinedGaussian,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Sanov => "sanov",
            Method::BahadurRao => "bahadur_rao",
            Method::RefinedGaussian => "refined_gaussian",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sanov" => Ok(Method::Sanov),
            "br" | "bahadur_rao" => Ok(Method::BahadurRao),
            "refined" | "refined_gaussian" => Ok(Method::RefinedGaussian),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }
}

/// A validated upper-tail request: mu strictly above the base mean and
/// inside the mean range, with the lattice-rounded threshold mu_n
/// precomputed where the model has a lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailQuery {
    pub n: u64,
    pub mu: f64,
    /// Smallest mean grid point >= mu with n times it on the sum
    /// lattice; `None` for non-lattice models.
    pub mu_rounded: Option<f64>,
}

impl TailQuery {
    pub fn new(model: &DistributionModel, n: u64, mu: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be at least 1".into(),
            });
        }
        let range = model.mean_range();
        if !mu.is_finite() || !range.contains(mu) {
            return Err(Error::MuOutOfRange {
                mu,
                infimum: range.infimum,
                supremum: range.supremum,
            });
        }
        if mu <= range.base_mean {
            return Err(Error::BelowBaseMean {
                mu,
                base_mean: range.base_mean,
            });
        }
        let mu_rounded = match model.lattice_of() {
            Some(_) => Some(round_up_to_grid(model, n, mu)?),
            None => None,
        };
        Ok(TailQuery { n, mu, mu_rounded })
    }
}

/// One tail estimate. `summary` is the tilt the estimate was built from
/// (at the rounded threshold for the refined lattice path).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxResult {
    pub method: Method,
    /// Log tail estimate, truncated at 0: the cruder formulas can exceed
    /// probability 1 at very small n, and an estimate of a probability
    /// caps there.
    pub log_prob: f64,
    /// exp(log_prob), or 0 when log_prob < -700 (past the f64 floor);
    /// log_prob stays finite and meaningful either way.
    pub prob: f64,
    /// The correction constant, for the refined method only.
    pub c_mu: Option<f64>,
    pub summary: TiltedSummary,
}

impl ApproxResult {
    fn new(method: Method, log_prob: f64, c_mu: Option<f64>, summary: TiltedSummary) -> Self {
        let log_prob = log_prob.min(0.0);
        let prob = if log_prob >= -700.0 {
            log_prob.exp()
        } else {
            0.0
        };
        ApproxResult {
            method,
            log_prob,
            prob,
            c_mu,
            summary,
        }
    }
}

/// The Sanov exponent: ln P ~ -n D(mu), the crudest of the three.
pub fn sanov_log(summary: &TiltedSummary, n: u64) -> f64 {
    -(n as f64) * summary.divergence
}

/// The prefactor distinguishing lattice from non-lattice models:
/// (1 - e^{-d beta_hat})/d on a lattice of span d, beta_hat otherwise.
pub fn beta_factor(model: &DistributionModel, summary: &TiltedSummary) -> Result<f64> {
    require_upper_tilt(model, summary)?;
    Ok(match model.lattice_of() {
        Some(LatticeInfo { span: d, .. }) => -(-d * summary.beta_hat).exp_m1() / d,
        None => summary.beta_hat,
    })
}

/// Shared gate for everything that divides by beta_hat: the tilt must
/// point upward and must not sit in the degenerate band around 0.
fn require_upper_tilt(model: &DistributionModel, summary: &TiltedSummary) -> Result<()> {
    if summary.near_base_mean {
        return Err(Error::DegenerateTilt {
            mu: summary.target_mean,
            beta_hat: summary.beta_hat,
        });
    }
    if summary.beta_hat <= 0.0 {
        return Err(Error::BelowBaseMean {
            mu: summary.target_mean,
            base_mean: model.base_mean(),
        });
    }
    Ok(())
}

/// The Bahadur-Rao estimate,
/// -n D - (1/2) ln(2 pi n V) - ln bf.
///
/// On a lattice the formula is only valid at thresholds the sum can
/// actually attain, so n mu must sit on the sum lattice within
/// [`crate::distributions::LATTICE_TOL`] of an index; no rounding is
/// applied here.
pub fn bahadur_rao_log(
    model: &DistributionModel,
    summary: &TiltedSummary,
    n: u64,
) -> Result<ApproxResult> {
    let bf = beta_factor(model, summary)?;
    if let Some(lat) = model.lattice_of() {
        let nmu = n as f64 * summary.target_mean;
        let idx = (nmu - n as f64 * lat.offset) / lat.span;
        if (idx - idx.round()).abs() > crate::distributions::LATTICE_TOL {
            return Err(Error::LatticeMisaligned { nmu });
        }
    }
    let nf = n as f64;
    let log_prob = -nf * summary.divergence
        - 0.5 * (std::f64::consts::TAU * nf * summary.variance).ln()
        - bf.ln();
    Ok(ApproxResult::new(
        Method::BahadurRao,
        log_prob,
        None,
        *summary,
    ))
}

/// The correction constant c_mu = ln( sqrt(2D/V) / bf ) / beta_hat.
///
/// Before returning, the defining identity
/// sqrt(2D/V) = bf e^{c beta_hat} is re-checked to 1e-10; a violation
/// means a defect in the surrounding formulas, not bad input.
pub fn c_mu(model: &DistributionModel, summary: &TiltedSummary) -> Result<f64> {
    let bf = beta_factor(model, summary)?;
    if summary.divergence <= 0.0 {
        return Err(Error::DegenerateTilt {
            mu: summary.target_mean,
            beta_hat: summary.beta_hat,
        });
    }
    let ratio = (2.0 * summary.divergence / summary.variance).sqrt();
    let c = (ratio.ln() - bf.ln()) / summary.beta_hat;
    let residual = (ratio / (bf * (c * summary.beta_hat).exp()) - 1.0).abs();
    if !c.is_finite() || residual > 1e-10 {
        return Err(Error::Internal(format!(
            "c_mu identity residual {residual:e} at mu = {}",
            summary.target_mean
        )));
    }
    Ok(c)
}

/// The Bernoulli closed form,
///
/// ```text
///   c_mu = 1/2 + ln( 2 D(mu||p) p(1-p) / (mu-p)^2 )
///              / ( 2 ln( mu(1-p) / (p(1-mu)) ) ),
/// ```
///
/// equal to the generic `c_mu` on Bernoulli(p) by algebra; kept as an
/// independent implementation so the two can cross-check each other.
pub fn binomial_c_mu(p: f64, mu: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie strictly inside (0, 1), got {p}"),
        });
    }
    if !mu.is_finite() || mu <= p || mu >= 1.0 {
        return Err(Error::MuOutOfRange {
            mu,
            infimum: p,
            supremum: 1.0,
        });
    }
    let d = mu * (mu / p).ln() + (1.0 - mu) * ((1.0 - mu) / (1.0 - p)).ln();
    let beta = (mu * (1.0 - p) / (p * (1.0 - mu))).ln();
    Ok(0.5 + (2.0 * d * p * (1.0 - p) / ((mu - p) * (mu - p))).ln() / (2.0 * beta))
}

/// Rounds mu up to the smallest mean grid point mu_n >= mu whose sum
/// n mu_n lies on the sum lattice {k d + n offset}. Thresholds within
/// the lattice tolerance below a grid point snap onto it instead of
/// jumping a full step.
pub fn round_up_to_grid(model: &DistributionModel, n: u64, mu: f64) -> Result<f64> {
    let lat = model.lattice_of().ok_or(Error::NotLattice)?;
    let nf = n as f64;
    let t = nf * (mu - lat.offset) / lat.span;
    let k = crate::distributions::ceil_snap(t);
    let rounded = k * lat.span / nf + lat.offset;
    // Float dust in the division can land a hair below mu; the query
    // invariant mu_rounded >= mu wins.
    Ok(rounded.max(mu))
}

/// The refined Gaussian estimate ln Phi(-sqrt(2 n D(mu'))) at the
/// shifted mean mu' = mu_n - c/n.
///
/// For lattice models mu is rounded up to the grid first and c is
/// evaluated at the rounded point. D at the shifted mean is obtained by
/// re-solving the tilt exactly there rather than by the Taylor step the
/// asymptotic analysis uses; the re-solve is cheap and strictly more
/// accurate.
pub fn refined_gaussian_log(model: &DistributionModel, mu: f64, n: u64) -> Result<ApproxResult> {
    refined_impl(model, mu, n, None)
}

/// As [`refined_gaussian_log`] but with the correction constant replaced
/// by `c_alt`, for sensitivity experiments; `c_alt = 0` gives the plain
/// mean-shift-free Gaussian estimate.
pub fn refined_gaussian_log_with_constant(
    model: &DistributionModel,
    mu: f64,
    n: u64,
    c_alt: f64,
) -> Result<ApproxResult> {
    refined_impl(model, mu, n, Some(c_alt))
}

fn refined_impl(
    model: &DistributionModel,
    mu: f64,
    n: u64,
    c_override: Option<f64>,
) -> Result<ApproxResult> {
    let query = TailQuery::new(model, n, mu)?;
    let mu_n = query.mu_rounded.unwrap_or(query.mu);
    let summary = tilting::solve_tilt(model, mu_n)?;
    let c = match c_override {
        Some(c_alt) => {
            require_upper_tilt(model, &summary)?;
            c_alt
        }
        None => c_mu(model, &summary)?,
    };
    let shifted = mu_n - c / n as f64;
    let base_mean = model.base_mean();
    if shifted <= base_mean {
        // The expansion assumed n large enough that the shift stays in
        // the upper tail; report rather than clamp.
        return Err(Error::ShiftedMeanBelowBase { shifted, base_mean });
    }
    let shifted_summary = tilting::solve_tilt(model, shifted)?;
    let z = (2.0 * n as f64 * shifted_summary.divergence).sqrt();
    let log_prob = numerics::log_std_normal_cdf(-z);
    Ok(ApproxResult::new(
        Method::RefinedGaussian,
        log_prob,
        Some(c),
        summary,
    ))
}

/// The limiting ratio between refined estimates built with the true c_mu
/// and with any other constant: exp(beta_hat (c_mu - c_alt)).
pub fn constant_sensitivity(
    model: &DistributionModel,
    summary: &TiltedSummary,
    c_alt: f64,
) -> Result<f64> {
    let c = c_mu(model, summary)?;
    Ok((summary.beta_hat * (c - c_alt)).exp())
}

/// Evaluates one method end to end from a raw (mu, n) request; the
/// dispatcher behind the CLI and the convergence harness. Sanov and
/// Bahadur-Rao evaluate at mu exactly as given (Bahadur-Rao then insists
/// on lattice alignment); the refined method rounds internally.
pub fn estimate(
    model: &DistributionModel,
    mu: f64,
    n: u64,
    method: Method,
) -> Result<ApproxResult> {
    // Validates range, positivity of the tail request, and n.
    let _ = TailQuery::new(model, n, mu)?;
    match method {
        Method::Sanov => {
            let summary = tilting::solve_tilt(model, mu)?;
            Ok(ApproxResult::new(
                Method::Sanov,
                sanov_log(&summary, n),
                None,
                summary,
            ))
        }
        Method::BahadurRao => {
            let summary = tilting::solve_tilt(model, mu)?;
            bahadur_rao_log(model, &summary, n)
        }
        Method::RefinedGaussian => refined_gaussian_log(model, mu, n),
    }
}
