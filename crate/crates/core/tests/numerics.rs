//! Special-function checks against high-precision reference values.

mod common;

use common::{assert_abs, assert_rel};
use ldtail::Error;
use ldtail::numerics::{
    erfc, feller_bounds, ln_gamma, log_binomial_coefficient, log_reg_gamma_lower,
    log_reg_gamma_upper, log_std_normal_cdf, log_sum,
};

// Reference values carry 17 significant digits from a 40-digit
// evaluation.
const LOG_PHI: [(f64, f64); 11] = [
    (-1.0, -1.8410216450092635),
    (-2.0, -3.7831843336820319),
    (-5.0, -15.064998393988726),
    (-8.0, -35.013437159914550),
    (-20.0, -203.91715537109726),
    (-38.0, -726.55721601882013),
    (-40.0, -804.60844201375379),
    (-50.0, -1254.8313611394199),
    (1.0, -0.17275377902344989),
    (3.0, -0.0013508099647481938),
    (8.0, -6.2209605742717861e-16),
];

#[test]
fn log_std_normal_cdf_matches_references() {
    for &(z, expected) in &LOG_PHI {
        assert_rel(log_std_normal_cdf(z), expected, 1e-13);
    }
}

#[test]
fn log_std_normal_cdf_at_zero_is_log_half() {
    assert_rel(log_std_normal_cdf(0.0), 0.5f64.ln(), 1e-15);
}

#[test]
fn normal_cdf_halves_sum_to_one() {
    for z in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0] {
        let total = log_std_normal_cdf(z).exp() + log_std_normal_cdf(-z).exp();
        assert_rel(total, 1.0, 1e-14);
    }
}

#[test]
fn log_std_normal_cdf_is_increasing() {
    let mut prev = f64::NEG_INFINITY;
    let mut z = -60.0;
    while z <= 10.0 {
        let value = log_std_normal_cdf(z);
        assert!(
            value > prev,
            "ln Phi not increasing at z = {z}: {value} <= {prev}"
        );
        assert!(value <= 0.0);
        prev = value;
        z += 0.25;
    }
}

#[test]
fn feller_bounds_match_reference_at_two() {
    let bounds = feller_bounds(2.0);
    assert_rel(bounds.lower, 0.020246612442445519, 1e-13);
    assert_rel(bounds.upper, 0.026995483256594026, 1e-13);
}

#[test]
fn feller_bounds_sandwich_the_tail() {
    for i in 11..=100 {
        let z = i as f64 / 10.0;
        let tail = log_std_normal_cdf(-z).exp();
        let bounds = feller_bounds(z);
        assert!(
            bounds.lower < tail && tail < bounds.upper,
            "sandwich fails at z = {z}: {} / {tail} / {}",
            bounds.lower,
            bounds.upper
        );
    }
}

#[test]
fn erfc_matches_references() {
    assert_rel(erfc(0.0), 1.0, 1e-15);
    assert_rel(erfc(1.0), 0.15729920705028513, 1e-14);
    assert_rel(erfc(-1.0), 1.8427007929497149, 1e-14);
    assert_rel(erfc(2.5), 0.00040695201744495893, 1e-13);
    assert_eq!(erfc(30.0), 0.0);
    assert_rel(erfc(f64::NEG_INFINITY), 2.0, 0.0);
}

#[test]
fn erfc_agrees_with_normal_cdf() {
    // Phi(-z) = erfc(z / sqrt(2)) / 2.
    for z in [0.2, 0.9, 1.7, 3.1, 6.0] {
        let via_erfc = 0.5 * erfc(z / std::f64::consts::SQRT_2);
        assert_rel(log_std_normal_cdf(-z).exp(), via_erfc, 1e-13);
    }
}

#[test]
fn ln_gamma_matches_references() {
    assert_rel(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), 1e-14);
    assert_abs(ln_gamma(1.0), 0.0, 1e-14);
    assert_abs(ln_gamma(2.0), 0.0, 1e-14);
    assert_rel(ln_gamma(10.0), 362880f64.ln(), 1e-14);
    assert_rel(ln_gamma(100.0), 359.13420536957540, 1e-14);
    assert_rel(ln_gamma(1e6), 12815504.569147612, 1e-14);
}

#[test]
fn ln_gamma_satisfies_recurrence() {
    // ln Gamma(x + 1) = ln Gamma(x) + ln x across branch boundaries.
    for x in [0.3, 0.9, 1.5, 4.7, 9.5, 10.5, 25.0] {
        assert_rel(ln_gamma(x + 1.0), ln_gamma(x) + x.ln(), 1e-13);
    }
}

#[test]
fn log_binomial_coefficient_matches_references() {
    assert_rel(
        log_binomial_coefficient(10, 7).unwrap(),
        4.7874917427820460,
        1e-13,
    );
    assert_rel(
        log_binomial_coefficient(100, 70).unwrap(),
        58.642095640956373,
        1e-13,
    );
    assert_eq!(log_binomial_coefficient(10, 0), Some(0.0));
    assert_eq!(log_binomial_coefficient(10, 10), Some(0.0));
    assert_rel(log_binomial_coefficient(4, 2).unwrap(), 6f64.ln(), 1e-14);
}

#[test]
fn log_binomial_coefficient_rejects_out_of_range() {
    assert_eq!(log_binomial_coefficient(10, -1), None);
    assert_eq!(log_binomial_coefficient(10, 11), None);
}

#[test]
fn regularized_gamma_matches_references() {
    // P{Poisson(10) >= 20} as a lower incomplete gamma value.
    assert_rel(log_reg_gamma_lower(20.0, 10.0), -5.6681232955145575, 1e-13);
    // Q(10, 20): the Erlang tail used by the exponential oracle.
    assert_rel(log_reg_gamma_upper(10.0, 20.0), -5.2992353260824825, 1e-13);
}

#[test]
fn regularized_gamma_pair_is_complementary() {
    for &(a, x) in &[
        (0.5, 0.2),
        (1.0, 1.0),
        (3.0, 2.0),
        (10.0, 14.0),
        (50.0, 40.0),
        (200.0, 230.0),
    ] {
        let total = log_reg_gamma_lower(a, x).exp() + log_reg_gamma_upper(a, x).exp();
        assert_rel(total, 1.0, 1e-12);
    }
}

#[test]
fn regularized_gamma_handles_exponential_special_case() {
    // a = 1 reduces to 1 - exp(-x).
    for x in [0.1, 1.0, 5.0] {
        assert_rel(log_reg_gamma_lower(1.0, x), (-(-x).exp_m1()).ln(), 1e-13);
        assert_rel(log_reg_gamma_upper(1.0, x), -x, 1e-13);
    }
}

#[test]
fn log_sum_matches_direct_summation() {
    let terms = [1f64.ln(), 2f64.ln(), 3f64.ln()];
    assert_rel(log_sum(&terms).unwrap(), 6f64.ln(), 1e-14);
}

#[test]
fn log_sum_survives_deep_underflow() {
    let terms = [-1000.0, -1000.0];
    assert_rel(log_sum(&terms).unwrap(), -1000.0 + 2f64.ln(), 1e-14);
}

#[test]
fn log_sum_ignores_neg_infinite_terms() {
    let terms = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
    assert_rel(log_sum(&terms).unwrap(), 0.0, 1e-15);
    assert_eq!(
        log_sum(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
        f64::NEG_INFINITY
    );
}

#[test]
fn log_sum_rejects_empty_input() {
    assert!(matches!(log_sum(&[]), Err(Error::EmptyInput(_))));
}
