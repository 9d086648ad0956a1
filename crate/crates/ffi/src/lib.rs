//! C ABI for the ldtail tail-probability library.
//!
//! Conventions:
//!
//! * Every fallible call returns an [`LdStatus`]. Output parameters are
//!   written only when the call returns `LD_STATUS_OK`.
//! * Models are opaque handles: create with [`ld_model_parse`], release
//!   with [`ld_model_free`]. Handles are immutable and may be shared
//!   across threads.
//! * On failure a thread-local message describing the error is stored;
//!   fetch it with [`ld_last_error_message`] on the same thread. The
//!   pointer stays valid until the next failing call on that thread.
//! * Rust panics never unwind across the boundary; they surface as
//!   `LD_STATUS_PANIC`.
//!
//! The matching C header lives in `include/ldtail.h` and is generated
//! from this file by cbindgen at build time.

use std::any::Any;
use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};

use ldtail::approximations::{self, Method};
use ldtail::distributions::parse_model;
use ldtail::{DistributionModel, Error, oracles, tilting};

/// Status code of every fallible call. `LD_STATUS_OK` is zero; anything
/// nonzero is a failure and leaves a message for
/// [`ld_last_error_message`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    /// A model specification string could not be parsed.
    Parse = 1,
    /// A parameter failed validation.
    InvalidParameter = 2,
    /// A tilt parameter fell outside the natural domain of the model.
    BetaOutOfDomain = 3,
    /// A target mean fell outside the attainable range of tilted means.
    MuOutOfRange = 4,
    /// The target mean must lie strictly above the base mean.
    BelowBaseMean = 5,
    /// The tilt solver exhausted its iteration budget.
    NoConvergence = 6,
    /// The tilt at mu is too close to zero for the refinements.
    DegenerateTilt = 7,
    /// n*mu does not sit on the lattice of the sum.
    LatticeMisaligned = 8,
    /// A lattice-only operation was applied to a non-lattice model.
    NotLattice = 9,
    /// The mean-shifted target dropped to or below the base mean.
    ShiftedMeanBelowBase = 10,
    /// The requested computation is outside what the library implements.
    Unsupported = 11,
    /// An aggregate operation received no input.
    EmptyInput = 12,
    /// A fit was requested with too few usable data points.
    InsufficientData = 13,
    /// Internal consistency check failed; indicates a library defect.
    Internal = 14,
    /// File input/output failed.
    Io = 15,
    /// A required pointer argument was null.
    NullArgument = 16,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 17,
    /// The library panicked; state is unchanged but the result is lost.
    Panic = 18,
}

/// Tail estimate selector, mirroring the library's three formulas.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdMethod {
    Sanov = 0,
    BahadurRao = 1,
    RefinedGaussian = 2,
}

impl From<LdMethod> for Method {
    fn from(m: LdMethod) -> Self {
        match m {
            LdMethod::Sanov => Method::Sanov,
            LdMethod::BahadurRao => Method::BahadurRao,
            LdMethod::RefinedGaussian => Method::RefinedGaussian,
        }
    }
}

impl From<Method> for LdMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Sanov => LdMethod::Sanov,
            Method::BahadurRao => LdMethod::BahadurRao,
            Method::RefinedGaussian => LdMethod::RefinedGaussian,
        }
    }
}

/// Opaque distribution model handle.
pub struct LdModel(DistributionModel);

/// Solution of the tilt equation E_beta[X] = mu.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdTiltedSummary {
    pub beta_hat: f64,
    pub divergence: f64,
    pub variance: f64,
    pub log_partition_at_tilt: f64,
    pub target_mean: f64,
    /// The tilt is so small that divergence-based refinements are
    /// unreliable.
    pub near_base_mean: bool,
}

/// One tail estimate. `c_mu` is meaningful only when `has_c_mu` is
/// true (the refined Gaussian method on a non-degenerate tilt).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdTailEstimate {
    pub method: LdMethod,
    /// ln P{S_n >= n mu}, always <= 0.
    pub log_prob: f64,
    pub prob: f64,
    pub c_mu: f64,
    pub has_c_mu: bool,
}

/// Monte Carlo tail estimate with a 95% confidence interval.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LdMcEstimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    // CString rejects interior NULs; none of our messages contain them,
    // but panic payloads are arbitrary.
    let sanitized = msg.replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NULs stripped above");
    });
}

fn status_of(err: &Error) -> LdStatus {
    match err {
        Error::Parse(_) => LdStatus::Parse,
        Error::InvalidParameter { .. } => LdStatus::InvalidParameter,
        Error::BetaOutOfDomain { .. } => LdStatus::BetaOutOfDomain,
        Error::MuOutOfRange { .. } => LdStatus::MuOutOfRange,
        Error::BelowBaseMean { .. } => LdStatus::BelowBaseMean,
        Error::NoConvergence { .. } => LdStatus::NoConvergence,
        Error::DegenerateTilt { .. } => LdStatus::DegenerateTilt,
        Error::LatticeMisaligned { .. } => LdStatus::LatticeMisaligned,
        Error::NotLattice => LdStatus::NotLattice,
        Error::ShiftedMeanBelowBase { .. } => LdStatus::ShiftedMeanBelowBase,
        Error::Unsupported(_) => LdStatus::Unsupported,
        Error::EmptyInput(_) => LdStatus::EmptyInput,
        Error::InsufficientData { .. } => LdStatus::InsufficientData,
        Error::Internal(_) => LdStatus::Internal,
        Error::Io { .. } => LdStatus::Io,
    }
}

type FfiResult = Result<(), (LdStatus, String)>;

fn lib_err(err: Error) -> (LdStatus, String) {
    (status_of(&err), err.to_string())
}

fn panic_text(payload: Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with non-string payload".to_string()
    }
}

/// Runs the body under catch_unwind and folds the outcome into a
/// status, recording the message on failure.
fn ffi_call<F: FnOnce() -> FfiResult>(body: F) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            set_error(&format!("panic: {}", panic_text(payload)));
            LdStatus::Panic
        }
    }
}

fn require<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, (LdStatus, String)> {
    // SAFETY: deferred to the caller of the extern fn; the contract of
    // every entry point requires valid pointers or null.
    unsafe { ptr.as_ref() }.ok_or_else(|| (LdStatus::NullArgument, format!("{name} is null")))
}

fn require_mut<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, (LdStatus, String)> {
    // SAFETY: as in `require`.
    unsafe { ptr.as_mut() }.ok_or_else(|| (LdStatus::NullArgument, format!("{name} is null")))
}

/// Parses a model specification (for example `bernoulli:p=0.5` or
/// `pmf:support=0,1;probs=0.5,0.5`) into a fresh handle.
///
/// On success writes an owned handle to `*out`; release it with
/// [`ld_model_free`].
///
/// # Safety
///
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_model_parse(spec: *const c_char, out: *mut *mut LdModel) -> LdStatus {
    ffi_call(|| {
        let out = require_mut(out, "out")?;
        if spec.is_null() {
            return Err((LdStatus::NullArgument, "spec is null".to_string()));
        }
        // SAFETY: spec is non-null and NUL-terminated per the contract.
        let spec = unsafe { CStr::from_ptr(spec) }
            .to_str()
            .map_err(|_| (LdStatus::InvalidUtf8, "spec is not valid UTF-8".to_string()))?;
        let model = parse_model(spec).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(LdModel(model)));
        Ok(())
    })
}

/// Releases a handle from [`ld_model_parse`]. Null is a no-op.
///
/// # Safety
///
/// `model` must be null or a handle not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_model_free(model: *mut LdModel) {
    if !model.is_null() {
        // SAFETY: the handle came from Box::into_raw in ld_model_parse
        // and is freed at most once per the contract.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Solves the tilt equation E_beta[X] = mu.
///
/// # Safety
///
/// `model` must be a live handle and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_solve_tilt(
    model: *const LdModel,
    mu: f64,
    out: *mut LdTiltedSummary,
) -> LdStatus {
    ffi_call(|| {
        let model = require(model, "model")?;
        let out = require_mut(out, "out")?;
        let s = tilting::solve_tilt(&model.0, mu).map_err(lib_err)?;
        *out = LdTiltedSummary {
            beta_hat: s.beta_hat,
            divergence: s.divergence,
            variance: s.variance,
            log_partition_at_tilt: s.log_partition_at_tilt,
            target_mean: s.target_mean,
            near_base_mean: s.near_base_mean,
        };
        Ok(())
    })
}

/// Computes the mean-shift constant c_mu at the given target mean.
///
/// # Safety
///
/// `model` must be a live handle and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_c_mu(model: *const LdModel, mu: f64, out: *mut f64) -> LdStatus {
    ffi_call(|| {
        let model = require(model, "model")?;
        let out = require_mut(out, "out")?;
        let summary = tilting::solve_tilt(&model.0, mu).map_err(lib_err)?;
        *out = approximations::c_mu(&model.0, &summary).map_err(lib_err)?;
        Ok(())
    })
}

/// Computes one tail estimate for P{S_n >= n mu}.
///
/// # Safety
///
/// `model` must be a live handle, `method` a declared enum value, and
/// `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_tail_estimate(
    model: *const LdModel,
    mu: f64,
    n: u64,
    method: LdMethod,
    out: *mut LdTailEstimate,
) -> LdStatus {
    ffi_call(|| {
        let model = require(model, "model")?;
        let out = require_mut(out, "out")?;
        let est = approximations::estimate(&model.0, mu, n, method.into()).map_err(lib_err)?;
        *out = LdTailEstimate {
            method: est.method.into(),
            log_prob: est.log_prob,
            prob: est.prob,
            c_mu: est.c_mu.unwrap_or(f64::NAN),
            has_c_mu: est.c_mu.is_some(),
        };
        Ok(())
    })
}

/// Computes the exact log tail probability ln P{S_n >= n mu} via the
/// model's closed-form oracle (or the convolution oracle for finite
/// pmfs).
///
/// # Safety
///
/// `model` must be a live handle and `out_log_prob` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_exact_tail(
    model: *const LdModel,
    n: u64,
    mu: f64,
    out_log_prob: *mut f64,
) -> LdStatus {
    ffi_call(|| {
        let model = require(model, "model")?;
        let out = require_mut(out_log_prob, "out_log_prob")?;
        *out = oracles::exact_tail(&model.0, n, mu).map_err(lib_err)?;
        Ok(())
    })
}

/// Estimates the tail probability by Monte Carlo with a Wilson 95%
/// interval. Identical (model, n, mu, samples, seed) inputs give
/// bit-identical results regardless of thread count.
///
/// # Safety
///
/// `model` must be a live handle and `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn ld_mc_tail(
    model: *const LdModel,
    n: u64,
    mu: f64,
    samples: u64,
    seed: u64,
    out: *mut LdMcEstimate,
) -> LdStatus {
    ffi_call(|| {
        let model = require(model, "model")?;
        let out = require_mut(out, "out")?;
        let est = oracles::mc_tail(&model.0, n, mu, samples, seed).map_err(lib_err)?;
        *out = LdMcEstimate {
            point: est.point,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            samples: est.samples,
            seed: est.seed,
        };
        Ok(())
    })
}

/// Message of the most recent failure on this thread, or an empty
/// string. Valid until the next failing call on the same thread.
#[unsafe(no_mangle)]
pub extern "C" fn ld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Stable, NUL-terminated name of a status code.
#[unsafe(no_mangle)]
pub extern "C" fn ld_status_name(status: LdStatus) -> *const c_char {
    let name: &'static CStr = match status {
        LdStatus::Ok => c"ok",
        LdStatus::Parse => c"parse",
        LdStatus::InvalidParameter => c"invalid_parameter",
        LdStatus::BetaOutOfDomain => c"beta_out_of_domain",
        LdStatus::MuOutOfRange => c"mu_out_of_range",
        LdStatus::BelowBaseMean => c"below_base_mean",
        LdStatus::NoConvergence => c"no_convergence",
        LdStatus::DegenerateTilt => c"degenerate_tilt",
        LdStatus::LatticeMisaligned => c"lattice_misaligned",
        LdStatus::NotLattice => c"not_lattice",
        LdStatus::ShiftedMeanBelowBase => c"shifted_mean_below_base",
        LdStatus::Unsupported => c"unsupported",
        LdStatus::EmptyInput => c"empty_input",
        LdStatus::InsufficientData => c"insufficient_data",
        LdStatus::Internal => c"internal",
        LdStatus::Io => c"io",
        LdStatus::NullArgument => c"null_argument",
        LdStatus::InvalidUtf8 => c"invalid_utf8",
        LdStatus::Panic => c"panic",
    };
    name.as_ptr()
}
