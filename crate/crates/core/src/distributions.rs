//! Base distributions and their exponential-family structure.
//!
//! A model P with density (or mass) p(x) is tilted by a natural parameter
//! beta into
//!
//! ```text
//!   P_beta(dx) = e^{beta x} / Z(beta) P(dx),
//!   Z(beta)    = E[e^{beta X}],
//! ```
//!
//! and everything downstream (tilt solving, divergence, tail estimates)
//! only ever touches the model through ln Z and its first two derivatives,
//! which are the mean and variance of `P_beta`. The catalogue covers the
//! regimes the estimators distinguish: bounded lattice (Bernoulli),
//! unbounded lattice (Poisson), continuous with a bounded natural domain
//! (Exponential), continuous with full domain (Gaussian), and arbitrary
//! finite lattice laws (`FinitePmf`) as the generic path.

use crate::numerics;
use crate::{Error, Result};

/// Absolute tolerance on lattice-index integrality. Support points are
/// user-typed decimals; anything tighter starts rejecting legitimate
/// grids like 0.1 steps.
pub const LATTICE_TOL: f64 = 1e-9;

/// A base law for the i.i.d. summands.
///
/// Construct through the checked constructors (or [`parse_model`]); the
/// moment operations assume the stated parameter domains hold.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionModel {
    Bernoulli { p: f64 },
    Poisson { lambda: f64 },
    Exponential { rate: f64 },
    Gaussian { mean: f64, variance: f64 },
    FinitePmf { support: Vec<f64>, probs: Vec<f64> },
}

/// Lattice structure of a model: support contained in `{offset + k span}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeInfo {
    pub span: f64,
    pub offset: f64,
}

/// The open interval of means reachable by tilting, with the untilted
/// mean inside it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanRange {
    pub infimum: f64,
    pub base_mean: f64,
    pub supremum: f64,
}

impl MeanRange {
    /// Strict interior test; the endpoints themselves are not attained by
    /// any finite tilt.
    pub fn contains(&self, mu: f64) -> bool {
        mu > self.infimum && mu < self.supremum
    }
}

impl DistributionModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: format!("must lie strictly inside (0, 1), got {p}"),
            });
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be positive, got {lambda}"),
            });
        }
        Ok(Self::Poisson { lambda })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "rate",
                reason: format!("must be positive, got {rate}"),
            });
        }
        Ok(Self::Exponential { rate })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mean",
                reason: format!("must be finite, got {mean}"),
            });
        }
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "var",
                reason: format!("must be positive, got {variance}"),
            });
        }
        Ok(Self::Gaussian { mean, variance })
    }

    /// A finite lattice law. Requires at least two strictly increasing,
    /// finite support points and matching positive weights summing to 1
    /// within 1e-12; the weights are renormalized to an exact unit sum so
    /// later moment formulas need no correction term.
    pub fn finite_pmf(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: format!("needs at least two points, got {}", support.len()),
            });
        }
        if probs.len() != support.len() {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!(
                    "length {} does not match support length {}",
                    probs.len(),
                    support.len()
                ),
            });
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: "all points must be finite".into(),
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: "points must be strictly increasing".into(),
            });
        }
        if probs.iter().any(|q| !q.is_finite() || *q <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: "all weights must be positive and finite".into(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "probs",
                reason: format!("weights sum to {total}, more than 1e-12 away from 1"),
            });
        }
        let probs = probs.into_iter().map(|q| q / total).collect();
        Ok(Self::FinitePmf { support, probs })
    }

    /// The open natural-parameter domain of ln Z.
    pub fn natural_domain(&self) -> (f64, f64) {
        match self {
            Self::Exponential { rate } => (f64::NEG_INFINITY, *rate),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn check_beta(&self, beta: f64) -> Result<()> {
        let (lo, hi) = self.natural_domain();
        // Endpoints count as outside: Z diverges there or the tilt is
        // improper, and the solvers must stay on finite arithmetic.
        if !beta.is_finite() || beta <= lo || beta >= hi {
            return Err(Error::BetaOutOfDomain { beta, lo, hi });
        }
        Ok(())
    }

    /// ln Z(beta).
    pub fn log_partition(&self, beta: f64) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(match self {
            Self::Bernoulli { p } => {
                // ln(1 - p + p e^beta), written so the exp never overflows.
                if beta <= 0.0 {
                    ((1.0 - p) + p * beta.exp()).ln()
                } else {
                    beta + (p + (1.0 - p) * (-beta).exp()).ln()
                }
            }
            Self::Poisson { lambda } => lambda * beta.exp_m1(),
            Self::Exponential { rate } => -(-beta / rate).ln_1p(),
            Self::Gaussian { mean, variance } => mean * beta + 0.5 * variance * beta * beta,
            Self::FinitePmf { support, probs } => {
                let terms: Vec<f64> = support
                    .iter()
                    .zip(probs)
                    .map(|(x, q)| q.ln() + beta * x)
                    .collect();
                numerics::log_sum(&terms)?
            }
        })
    }

    /// Mean of the tilted law, Z'(beta)/Z(beta); strictly increasing in
    /// beta.
    pub fn tilted_mean(&self, beta: f64) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(match self {
            Self::Bernoulli { p } => {
                // 1 / (1 + ((1-p)/p) e^{-beta}); saturates cleanly at 0, 1.
                let w = (1.0 - p) / p * (-beta).exp();
                1.0 / (1.0 + w)
            }
            Self::Poisson { lambda } => lambda * beta.exp(),
            Self::Exponential { rate } => 1.0 / (rate - beta),
            Self::Gaussian { mean, variance } => mean + variance * beta,
            Self::FinitePmf { .. } => self.pmf_moments(beta).0,
        })
    }

    /// Variance of the tilted law, (ln Z)''(beta); strictly positive.
    pub fn tilted_variance(&self, beta: f64) -> Result<f64> {
        self.check_beta(beta)?;
        Ok(match self {
            Self::Bernoulli { p } => {
                let w = (1.0 - p) / p * (-beta).exp();
                let m = 1.0 / (1.0 + w);
                // m (1 - m) without forming 1 - m, which cancels once the
                // tilted mean saturates.
                m * m * w
            }
            Self::Poisson { lambda } => lambda * beta.exp(),
            Self::Exponential { rate } => {
                let m = 1.0 / (rate - beta);
                m * m
            }
            Self::Gaussian { variance, .. } => *variance,
            Self::FinitePmf { .. } => self.pmf_moments(beta).1,
        })
    }

    /// Tilted mean and variance of a finite pmf via max-shifted weights.
    /// Two passes: the variance sums squared deviations from the already
    /// computed mean, so it stays positive and accurate at any tilt.
    fn pmf_moments(&self, beta: f64) -> (f64, f64) {
        let Self::FinitePmf { support, probs } = self else {
            unreachable!("pmf_moments is only called on FinitePmf");
        };
        let logw: Vec<f64> = support
            .iter()
            .zip(probs)
            .map(|(x, q)| q.ln() + beta * x)
            .collect();
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|lw| (lw - max).exp()).collect();
        let wsum: f64 = w.iter().sum();
        let mean = support.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() / wsum;
        let var = support
            .iter()
            .zip(&w)
            .map(|(x, wi)| {
                let d = x - mean;
                wi * d * d
            })
            .sum::<f64>()
            / wsum;
        (mean, var)
    }

    /// Mean of the untilted law.
    pub fn base_mean(&self) -> f64 {
        self.mean_range().base_mean
    }

    /// The attainable tilted means: an open interval around the base
    /// mean. For bounded supports the endpoints are the support extremes,
    /// approached but never reached.
    pub fn mean_range(&self) -> MeanRange {
        match self {
            Self::Bernoulli { p } => MeanRange {
                infimum: 0.0,
                base_mean: *p,
                supremum: 1.0,
            },
            Self::Poisson { lambda } => MeanRange {
                infimum: 0.0,
                base_mean: *lambda,
                supremum: f64::INFINITY,
            },
            Self::Exponential { rate } => MeanRange {
                infimum: 0.0,
                base_mean: 1.0 / rate,
                supremum: f64::INFINITY,
            },
            Self::Gaussian { mean, .. } => MeanRange {
                infimum: f64::NEG_INFINITY,
                base_mean: *mean,
                supremum: f64::INFINITY,
            },
            Self::FinitePmf { support, probs } => MeanRange {
                infimum: support[0],
                base_mean: support.iter().zip(probs).map(|(x, q)| x * q).sum(),
                supremum: support[support.len() - 1],
            },
        }
    }

    /// Lattice structure, when the model has one. Bernoulli and Poisson
    /// live on the integers; finite pmfs get a common-divisor search over
    /// support differences; the continuous families have none.
    pub fn lattice_of(&self) -> Option<LatticeInfo> {
        match self {
            Self::Bernoulli { .. } | Self::Poisson { .. } => Some(LatticeInfo {
                span: 1.0,
                offset: 0.0,
            }),
            Self::Exponential { .. } | Self::Gaussian { .. } => None,
            Self::FinitePmf { support, .. } => pmf_lattice(support),
        }
    }
}

/// Finds the maximal span d with support contained in {x_0 + k d}, or
/// `None` when no span passes the integrality check (e.g. irrational
/// spacing ratios).
fn pmf_lattice(support: &[f64]) -> Option<LatticeInfo> {
    let offset = support[0];
    let diffs: Vec<f64> = support.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = support.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let tol = LATTICE_TOL * scale;

    let mut span = diffs[0];
    for &d in &diffs[1..] {
        span = float_gcd(span, d, tol);
        if span <= tol {
            return None;
        }
    }

    // Least-squares polish: with indices k_i = round(d_i / span) fixed,
    // the span minimizing sum (d_i - k_i s)^2 is sum(k d)/sum(k^2). This
    // undoes the drift the Euclid loop accumulates on decimal grids.
    let mut kd = 0.0;
    let mut kk = 0.0;
    for &d in &diffs {
        let k = (d / span).round();
        kd += k * d;
        kk += k * k;
    }
    span = kd / kk;

    for x in support {
        let idx = (x - offset) / span;
        if (idx - idx.round()).abs() > LATTICE_TOL {
            return None;
        }
    }
    Some(LatticeInfo { span, offset })
}

/// ceil with a snap: values within the lattice tolerance of an integer
/// round to it rather than up past it. Shared by everything that maps a
/// real threshold onto lattice indices (grid rounding, tail summation
/// cutoffs): n*mu routinely lands a few ulps above the integer it means.
pub(crate) fn ceil_snap(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= LATTICE_TOL * t.abs().max(1.0) {
        r
    } else {
        t.ceil()
    }
}

/// Euclid's algorithm on reals. Remainders within `tol` of 0 or of the
/// divisor snap to 0, so decimal inputs terminate instead of chasing
/// their binary representation error.
fn float_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.abs().max(b.abs()), a.abs().min(b.abs()));
    while b > tol {
        let mut r = a % b;
        if r > b - tol {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    a
}

/// Parses the CLI model grammar:
///
/// ```text
///   bernoulli:p=0.5
///   poisson:lambda=1
///   exponential:rate=1
///   gaussian:mean=0,var=1
///   pmf:support=0,0.5,1;probs=0.25,0.5,0.25
/// ```
///
/// Scalar families separate parameters with commas; `pmf` separates its
/// two list parameters with a semicolon because the lists themselves are
/// comma-separated. Errors name the offending key.
pub fn parse_model(spec: &str) -> Result<DistributionModel> {
    let (family, params) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("model spec {spec:?} is missing the ':' separator")))?;
    match family {
        "bernoulli" => {
            let [p] = parse_scalars(params, ["p"])?;
            DistributionModel::bernoulli(p)
        }
        "poisson" => {
            let [lambda] = parse_scalars(params, ["lambda"])?;
            DistributionModel::poisson(lambda)
        }
        "exponential" => {
            let [rate] = parse_scalars(params, ["rate"])?;
            DistributionModel::exponential(rate)
        }
        "gaussian" => {
            let [mean, var] = parse_scalars(params, ["mean", "var"])?;
            DistributionModel::gaussian(mean, var)
        }
        "pmf" => parse_pmf(params),
        other => Err(Error::Parse(format!("unknown model family {other:?}"))),
    }
}

/// Parses `key=value` scalar parameters, comma-separated, required in the
/// given order.
fn parse_scalars<const N: usize>(params: &str, keys: [&'static str; N]) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut parts = params.split(',');
    for (slot, key) in out.iter_mut().zip(keys) {
        let part = parts
            .next()
            .ok_or_else(|| Error::Parse(format!("missing parameter {key}")))?;
        *slot = parse_keyed_value(part, key)?;
    }
    if let Some(extra) = parts.next() {
        return Err(Error::Parse(format!("unexpected parameter {extra:?}")));
    }
    Ok(out)
}

fn parse_keyed_value(part: &str, key: &str) -> Result<f64> {
    let (k, v) = part
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected {key}=<value>, got {part:?}")))?;
    if k != key {
        return Err(Error::Parse(format!("expected parameter {key}, got {k:?}")));
    }
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("parameter {key}: {v:?} is not a number")))
}

fn parse_pmf(params: &str) -> Result<DistributionModel> {
    let (support_part, probs_part) = params.split_once(';').ok_or_else(|| {
        Error::Parse("pmf needs support=...;probs=... separated by ';'".to_string())
    })?;
    let support = parse_list(support_part, "support")?;
    let probs = parse_list(probs_part, "probs")?;
    DistributionModel::finite_pmf(support, probs)
}

fn parse_list(part: &str, key: &str) -> Result<Vec<f64>> {
    let (k, v) = part
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected {key}=<list>, got {part:?}")))?;
    if k != key {
        return Err(Error::Parse(format!("expected parameter {key}, got {k:?}")));
    }
    v.split(',')
        .map(|item| {
            item.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("parameter {key}: {item:?} is not a number")))
        })
        .collect()
}
