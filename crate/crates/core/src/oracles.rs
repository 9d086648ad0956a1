//! Ground truth: exact tail probabilities where the sum has a tractable
//! law, dynamic-programming convolution for small finite pmfs, and a
//! seeded Monte Carlo fallback for everything else.
//!
//! The closed-form routes all reduce to special functions from
//! [`crate::numerics`]:
//!
//! ```text
//!   Bernoulli    sum ~ Binomial(n, p)          log-domain term sum
//!   Poisson      sum ~ Poisson(n lambda)       lower incomplete gamma
//!   Exponential  sum ~ Gamma(n, rate)          upper incomplete gamma
//!   Gaussian     sum ~ Gaussian                ln Phi
//! ```
//!
//! Every oracle returns ln P{sum >= n mu} (the tail of the mean and of
//! the sum coincide), never the probability itself, so results stay
//! meaningful far past the f64 underflow point.

use crate::distributions::{self, DistributionModel};
use crate::numerics;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

/// A Monte Carlo tail estimate with its 95% score (Wilson) interval.
/// The score interval stays honest at the tiny proportions rare-event
/// sampling produces, where the Wald interval collapses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub seed: u64,
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: format!("must be finite, got {mu}"),
        });
    }
    Ok(())
}

/// ln P{Binomial(n, p) >= n mu}, exactly, by summing the log-domain
/// terms ln C(n,k) + k ln p + (n-k) ln(1-p) from the smallest (k = n)
/// upward into a compensated accumulator.
pub fn binomial_tail(n: u64, p: f64, mu: f64) -> Result<f64> {
    check_n(n)?;
    check_mu(mu)?;
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie strictly inside (0, 1), got {p}"),
        });
    }
    let k0 = distributions::ceil_snap(n as f64 * mu);
    if k0 <= 0.0 {
        return Ok(0.0);
    }
    if k0 > n as f64 {
        return Ok(f64::NEG_INFINITY);
    }
    let k0 = k0 as u64;
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let terms: Vec<f64> = (k0..=n)
        .rev()
        .map(|k| {
            let lc = numerics::log_binomial_coefficient(n, k as i64)
                .expect("k is within 0..=n by construction");
            lc + k as f64 * ln_p + (n - k) as f64 * ln_q
        })
        .collect();
    numerics::log_sum(&terms)
}

/// ln P{sum of n Exponential(rate) >= n mu} = ln Q(n, rate n mu); the sum
/// is Gamma(n, rate).
pub fn gamma_tail(n: u64, rate: f64, mu: f64) -> Result<f64> {
    check_n(n)?;
    check_mu(mu)?;
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "rate",
            reason: format!("must be positive, got {rate}"),
        });
    }
    if mu <= 0.0 {
        return Ok(0.0);
    }
    Ok(numerics::log_reg_gamma_upper(
        n as f64,
        rate * n as f64 * mu,
    ))
}

/// ln P{mean of n Gaussian(m, v) >= mu} = ln Phi(-sqrt(n) (mu - m)/sigma).
pub fn gaussian_tail(n: u64, mean: f64, variance: f64, mu: f64) -> Result<f64> {
    check_n(n)?;
    check_mu(mu)?;
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "var",
            reason: format!("must be positive, got {variance}"),
        });
    }
    let z = (n as f64).sqrt() * (mu - mean) / variance.sqrt();
    Ok(numerics::log_std_normal_cdf(-z))
}

/// ln P{Poisson(n lambda) >= ceil(n mu)}, via the identity
/// P{Poisson(m) >= k} = P(k, m) with P the lower regularized gamma.
pub fn poisson_sum_tail(n: u64, lambda: f64, mu: f64) -> Result<f64> {
    check_n(n)?;
    check_mu(mu)?;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    let k = distributions::ceil_snap(n as f64 * mu);
    if k <= 0.0 {
        return Ok(0.0);
    }
    Ok(numerics::log_reg_gamma_lower(k, n as f64 * lambda))
}

/// Array-size cap for the pmf convolution: the sum takes n j_max + 1
/// lattice values.
const MAX_DP_LEN: u64 = 1_000_000;
/// Work cap (outer steps times array length times support size);
/// anything bigger belongs to the Monte Carlo oracle.
const MAX_DP_WORK: u64 = 200_000_000;

/// Exact tail of a finite-pmf sum by in-place convolution over the sum
/// lattice. Rejects non-lattice supports and sizes beyond the caps
/// above with `Unsupported`, which callers treat as "use Monte Carlo".
pub fn pmf_sum_tail(model: &DistributionModel, n: u64, mu: f64) -> Result<f64> {
    let DistributionModel::FinitePmf { support, probs } = model else {
        return Err(Error::Unsupported(
            "pmf_sum_tail applies only to finite pmf models".into(),
        ));
    };
    check_n(n)?;
    check_mu(mu)?;
    let lat = model.lattice_of().ok_or_else(|| {
        Error::Unsupported("support has no common lattice; use the Monte Carlo oracle".into())
    })?;
    let idx: Vec<usize> = support
        .iter()
        .map(|x| ((x - lat.offset) / lat.span).round() as usize)
        .collect();
    let j_max = *idx.last().expect("support is non-empty") as u64;
    let len = n * j_max + 1;
    if len > MAX_DP_LEN || n * len * support.len() as u64 > MAX_DP_WORK {
        return Err(Error::Unsupported(format!(
            "pmf convolution over {len} lattice points for n = {n} exceeds the \
             dynamic-programming budget; use the Monte Carlo oracle"
        )));
    }

    // Sum value = n offset + span K; find the first index at or above the
    // threshold before doing any work.
    let t = n as f64 * (mu - lat.offset) / lat.span;
    let k_thr = distributions::ceil_snap(t);
    if k_thr <= 0.0 {
        return Ok(0.0);
    }
    if k_thr > (n * j_max) as f64 {
        return Ok(f64::NEG_INFINITY);
    }
    let k_thr = k_thr as usize;

    // dp[k] = P{K = k} after m draws. The update walks k downward, so
    // dp[k - j] always still holds the previous round (j >= 0 and
    // entries above k are the only ones already overwritten). Total mass
    // is conserved at 1, so no global rescaling is ever needed; only
    // individual entries below the f64 floor (tails beyond ~1e-308)
    // flush to zero, far past anything the budgets above admit.
    let mut dp = vec![0.0f64; len as usize];
    dp[0] = 1.0;
    let mut top = 0usize;
    for _ in 0..n {
        top += j_max as usize;
        for k in (0..=top).rev() {
            let mut acc = 0.0;
            for (&j, q) in idx.iter().zip(probs) {
                if k >= j {
                    acc += q * dp[k - j];
                }
            }
            dp[k] = acc;
        }
    }

    // Tail mass, smallest terms (largest k) first.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in (k_thr..=top).rev() {
        let y = dp[k] - comp;
        let next = sum + y;
        comp = (next - sum) - y;
        sum = next;
    }
    Ok(sum.ln())
}

/// Routes a model to its exact oracle. `Unsupported` surfaces from the
/// pmf path when the convolution budget or lattice requirement fails.
pub fn exact_tail(model: &DistributionModel, n: u64, mu: f64) -> Result<f64> {
    match model {
        DistributionModel::Bernoulli { p } => binomial_tail(n, *p, mu),
        DistributionModel::Poisson { lambda } => poisson_sum_tail(n, *lambda, mu),
        DistributionModel::Exponential { rate } => gamma_tail(n, *rate, mu),
        DistributionModel::Gaussian { mean, variance } => gaussian_tail(n, *mean, *variance, mu),
        DistributionModel::FinitePmf { .. } => pmf_sum_tail(model, n, mu),
    }
}

/// Work unit for the parallel Monte Carlo loop. Each chunk runs its own
/// counter-derived substream, so the hit count is a sum of
/// chunk-deterministic integers and the result cannot depend on the
/// thread schedule.
const MC_CHUNK: u64 = 65_536;

/// Monte Carlo estimate of P{mean of n draws >= mu} from `samples`
/// sample means. Identical seeds give bit-identical results at any
/// thread count.
pub fn mc_tail(
    model: &DistributionModel,
    n: u64,
    mu: f64,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    check_n(n)?;
    check_mu(mu)?;
    if samples < 1000 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("need at least 1000, got {samples}"),
        });
    }
    let sampler = Sampler::new(model)?;
    // Comparing float sums against n*mu directly would drop lattice hits
    // that land a few ulps under the threshold (10 draws of 0.7 sum to
    // 7.000000000000001); back off by a relative epsilon well under any
    // lattice span.
    let nmu = n as f64 * mu;
    let threshold = nmu - 1e-9 * nmu.abs().max(1.0);
    let n_chunks = samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut h = 0u64;
            for _ in 0..count {
                if sampler.sum_of_n(n, &mut rng) >= threshold {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let point = hits as f64 / samples as f64;
    let (ci_low, ci_high) = wilson_interval(hits, samples);
    Ok(MCEstimate {
        point,
        ci_low,
        ci_high,
        samples,
        seed,
    })
}

/// 95% score interval for a binomial proportion.
fn wilson_interval(hits: u64, samples: u64) -> (f64, f64) {
    // Phi^{-1}(0.975)
    const Z: f64 = 1.959963984540054;
    let m = samples as f64;
    let phat = hits as f64 / m;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / m;
    let center = (phat + z2 / (2.0 * m)) / denom;
    let half = Z * (phat * (1.0 - phat) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-model draw state, built once and shared read-only across chunks.
enum Sampler<'a> {
    Bernoulli { p: f64 },
    Poisson(rand_distr::Poisson<f64>),
    Exponential(rand_distr::Exp<f64>),
    Gaussian(rand_distr::Normal<f64>),
    FinitePmf { support: &'a [f64], cdf: Vec<f64> },
}

impl<'a> Sampler<'a> {
    fn new(model: &'a DistributionModel) -> Result<Self> {
        Ok(match model {
            DistributionModel::Bernoulli { p } => Sampler::Bernoulli { p: *p },
            DistributionModel::Poisson { lambda } => Sampler::Poisson(
                rand_distr::Poisson::new(*lambda)
                    .map_err(|e| Error::Internal(format!("poisson sampler: {e}")))?,
            ),
            DistributionModel::Exponential { rate } => Sampler::Exponential(
                rand_distr::Exp::new(*rate)
                    .map_err(|e| Error::Internal(format!("exponential sampler: {e}")))?,
            ),
            DistributionModel::Gaussian { mean, variance } => Sampler::Gaussian(
                rand_distr::Normal::new(*mean, variance.sqrt())
                    .map_err(|e| Error::Internal(format!("gaussian sampler: {e}")))?,
            ),
            DistributionModel::FinitePmf { support, probs } => {
                let mut cdf = Vec::with_capacity(probs.len());
                let mut acc = 0.0;
                for q in probs {
                    acc += q;
                    cdf.push(acc);
                }
                Sampler::FinitePmf { support, cdf }
            }
        })
    }

    fn sum_of_n(&self, n: u64, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            Sampler::Bernoulli { p } => {
                let mut hits = 0u64;
                for _ in 0..n {
                    if rng.random::<f64>() < *p {
                        hits += 1;
                    }
                }
                hits as f64
            }
            Sampler::Poisson(dist) => (0..n).map(|_| dist.sample(rng)).sum(),
            Sampler::Exponential(dist) => (0..n).map(|_| dist.sample(rng)).sum(),
            Sampler::Gaussian(dist) => (0..n).map(|_| dist.sample(rng)).sum(),
            Sampler::FinitePmf { support, cdf } => (0..n)
                .map(|_| {
                    let u = rng.random::<f64>();
                    // First index with cdf above u; the final cdf entry can
                    // round below 1, so clamp.
                    let i = cdf.partition_point(|&c| c <= u).min(support.len() - 1);
                    support[i]
                })
                .sum(),
        }
    }
}
