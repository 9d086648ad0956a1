//! Assertion helpers shared by the integration tests.
#![allow(dead_code)]

/// |actual - expected| / |expected|, or |actual| when expected is zero.
pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        ((actual - expected) / expected).abs()
    }
}

#[track_caller]
pub fn assert_rel(actual: f64, expected: f64, tol: f64) {
    let err = rel_err(actual, expected);
    assert!(
        err <= tol,
        "expected {expected:e}, got {actual:e} (rel err {err:e} > {tol:e})"
    );
}

#[track_caller]
pub fn assert_abs(actual: f64, expected: f64, tol: f64) {
    let err = (actual - expected).abs();
    assert!(
        err <= tol,
        "expected {expected:e}, got {actual:e} (abs err {err:e} > {tol:e})"
    );
}

/// Evenly spaced grid of `count` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}
