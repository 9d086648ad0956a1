//! Tail probabilities for sums of i.i.d. random variables.
//!
//! Given a base distribution with mean `mu0` and a target mean `mu > mu0`,
//! the probability that the sample mean of `n` independent copies reaches
//! `mu` decays exponentially.  This crate computes that decay at three
//! levels of refinement:
//!
//! ```text
//!   sanov               log P ~ -n D(mu)
//!   bahadur_rao         log P ~ -n D(mu) - (1/2) ln(2 pi n V) - ln bf
//!   refined_gaussian    log P ~ ln Phi(-sqrt(2 n D(mu_n - c/n)))
//! ```
//!
//! where `D` is the divergence rate (the Legendre transform of the log
//! partition function), `V` the variance under the tilted measure, `bf` a
//! factor distinguishing lattice from non-lattice supports, and `c` a
//! mean-shift constant chosen so that the shifted Gaussian estimate agrees
//! with the Bahadur-Rao prefactor to first order.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: log-domain special functions (`ln Phi`, log-gamma,
//!   regularized incomplete gamma, stable log-sum).
//! * [`distributions`]: the model catalogue and its exponential-family
//!   structure (log partition, tilted moments, lattice detection).
//! * [`tilting`]: solving `E_beta[X] = mu` for the tilt parameter.
//! * [`approximations`]: the three estimates above plus the mean-shift
//!   constant `c_mu` and its sensitivity diagnostics.
//! * [`oracles`]: exact tail sums and a Monte Carlo fallback used to
//!   validate the approximations.
//! * [`harness`]: convergence studies and reference-table reproduction
//!   with CSV output.

pub mod approximations;
pub mod distributions;
pub mod harness;
pub mod numerics;
pub mod oracles;
pub mod tilting;

pub use approximations::{ApproxResult, Method, TailQuery};
pub use distributions::{DistributionModel, LatticeInfo, MeanRange, parse_model};
pub use harness::{ConvergenceReport, ConvergenceRow, Table1Report};
pub use oracles::MCEstimate;
pub use tilting::TiltedSummary;

/// Errors shared by every layer of the crate.
///
/// Variants are deliberately fine-grained: callers (the CLI, the FFI
/// surface, the test harness) route on them rather than on message text.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model specification string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A parameter failed validation.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A tilt parameter fell outside the natural domain of the model.
    #[error("beta {beta} outside natural domain ({lo}, {hi})")]
    BetaOutOfDomain { beta: f64, lo: f64, hi: f64 },

    /// A target mean fell outside the attainable range of tilted means.
    #[error("target mean {mu} outside attainable range ({infimum}, {supremum})")]
    MuOutOfRange {
        mu: f64,
        infimum: f64,
        supremum: f64,
    },

    /// The upper-tail machinery requires `mu` strictly above the base mean.
    #[error("target mean {mu} not above base mean {base_mean}")]
    BelowBaseMean { mu: f64, base_mean: f64 },

    /// The tilt solver exhausted its iteration budget.
    #[error("tilt solver failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// The tilt at `mu` is too close to zero for the refinements to be
    /// meaningful (the `1/beta_hat` factors blow up).
    #[error("degenerate tilt at mu {mu}: beta_hat {beta_hat} too close to zero")]
    DegenerateTilt { mu: f64, beta_hat: f64 },

    /// A lattice-only formula was asked to evaluate at a non-lattice point.
    #[error("n*mu = {nmu} does not sit on the lattice of the sum")]
    LatticeMisaligned { nmu: f64 },

    /// A lattice-only operation was applied to a non-lattice model.
    #[error("model has no lattice structure")]
    NotLattice,

    /// The mean-shifted target `mu_n - c/n` dropped to or below the base
    /// mean, so the shifted divergence is no longer a tail rate.
    #[error("shifted mean {shifted} at or below base mean {base_mean}")]
    ShiftedMeanBelowBase { shifted: f64, base_mean: f64 },

    /// The requested computation is outside what this crate implements.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An aggregate operation received no input.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A fit was requested with too few usable data points.
    #[error("insufficient data: only {retained} usable rows")]
    InsufficientData { retained: usize },

    /// An internal consistency check failed; indicates a defect, not a
    /// caller error.
    #[error("internal error: {0}")]
    Internal(String),

    /// File input/output failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
