//! Exact oracles against independent references, the pmf convolution
//! against brute-force enumeration, and the Monte Carlo estimator's
//! determinism and interval behavior.

mod common;

use common::{assert_abs, assert_rel};
use ldtail::oracles::{
    binomial_tail, exact_tail, gamma_tail, gaussian_tail, mc_tail, pmf_sum_tail, poisson_sum_tail,
};
use ldtail::{DistributionModel, Error};

#[test]
fn binomial_tail_matches_references() {
    assert_rel(binomial_tail(10, 0.5, 0.7).unwrap().exp(), 0.171875, 1e-13);
    assert_rel(
        binomial_tail(100, 0.5, 0.7).unwrap().exp(),
        3.9250698227968348e-5,
        1e-12,
    );
    assert_rel(
        binomial_tail(2000, 0.5, 0.7).unwrap(),
        -167.94722326975908,
        1e-13,
    );
}

#[test]
fn binomial_tail_handles_boundary_thresholds() {
    // At or below the support minimum the tail is certain.
    assert_eq!(binomial_tail(10, 0.5, 0.0).unwrap(), 0.0);
    assert_eq!(binomial_tail(10, 0.5, -3.0).unwrap(), 0.0);
    // Above the maximum it is empty.
    assert_eq!(binomial_tail(10, 0.5, 1.01).unwrap(), f64::NEG_INFINITY);
    // Exactly the maximum leaves the single all-ones outcome.
    assert_rel(
        binomial_tail(10, 0.3, 1.0).unwrap(),
        10.0 * 0.3f64.ln(),
        1e-13,
    );
    // Just above zero keeps everything but the all-zeros outcome.
    assert_rel(
        binomial_tail(10, 0.3, 0.01).unwrap().exp(),
        1.0 - 0.7f64.powi(10),
        1e-13,
    );
}

#[test]
fn binomial_tail_validates_p() {
    for p in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(binomial_tail(10, p, 0.5).is_err());
    }
    assert!(binomial_tail(0, 0.5, 0.5).is_err());
}

#[test]
fn gamma_tail_matches_references() {
    assert_rel(
        gamma_tail(10, 1.0, 2.0).unwrap(),
        -5.2992353260824825,
        1e-13,
    );
    // n = 1 is the plain exponential: ln P{X >= mu} = -rate mu.
    for mu in [0.5, 1.0, 4.0] {
        assert_rel(gamma_tail(1, 2.0, mu).unwrap(), -2.0 * mu, 1e-13);
    }
    assert_eq!(gamma_tail(10, 1.0, 0.0).unwrap(), 0.0);
    assert!(gamma_tail(10, 0.0, 2.0).is_err());
}

#[test]
fn gaussian_tail_matches_references() {
    // sqrt(4) * (1 - 0) / 1 = 2 standard errors.
    assert_rel(
        gaussian_tail(4, 0.0, 1.0, 1.0).unwrap(),
        -3.7831843336820319,
        1e-13,
    );
    assert_rel(gaussian_tail(7, 2.0, 3.0, 2.0).unwrap(), 0.5f64.ln(), 1e-14);
    assert!(gaussian_tail(7, 2.0, 0.0, 2.5).is_err());
}

#[test]
fn poisson_sum_tail_matches_references() {
    assert_rel(
        poisson_sum_tail(10, 1.0, 2.0).unwrap(),
        -5.6681232955145575,
        1e-13,
    );
    // P{Poisson(1) >= 1} = 1 - 1/e.
    assert_rel(
        poisson_sum_tail(1, 1.0, 1.0).unwrap().exp(),
        1.0 - (-1f64).exp(),
        1e-13,
    );
    // Fractional thresholds round up to the next atom: P{Poisson(1) >= 2}.
    assert_rel(
        poisson_sum_tail(1, 1.0, 1.5).unwrap().exp(),
        1.0 - 2.0 / std::f64::consts::E,
        1e-13,
    );
    assert_eq!(poisson_sum_tail(10, 1.0, 0.0).unwrap(), 0.0);
}

#[test]
fn pmf_sum_tail_matches_hand_convolution() {
    let model = DistributionModel::finite_pmf(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    // P{S_2 >= 1.5} = 2(0.5)(0.25) + 0.25^2 = 0.3125.
    assert_rel(pmf_sum_tail(&model, 2, 0.75).unwrap().exp(), 0.3125, 1e-13);
}

#[test]
fn pmf_sum_tail_matches_binomial_oracle() {
    let model = DistributionModel::finite_pmf(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap();
    for (n, mu) in [(12, 0.6), (12, 0.75), (40, 0.5), (40, 0.31)] {
        assert_rel(
            pmf_sum_tail(&model, n, mu).unwrap(),
            binomial_tail(n, 0.3, mu).unwrap(),
            1e-12,
        );
    }
}

#[test]
fn pmf_sum_tail_matches_brute_force_enumeration() {
    let support = [0.0, 1.0, 3.0];
    let probs = [0.5, 0.3, 0.2];
    let model = DistributionModel::finite_pmf(support.to_vec(), probs.to_vec()).unwrap();
    let n = 3;
    for mu in [0.2, 0.5, 1.0, 5.0 / 3.0, 2.0, 7.0 / 3.0, 3.0] {
        let threshold = 3.0 * mu - 1e-9;
        let mut exact = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    if support[i] + support[j] + support[k] >= threshold {
                        exact += probs[i] * probs[j] * probs[k];
                    }
                }
            }
        }
        assert_rel(pmf_sum_tail(&model, n, mu).unwrap().exp(), exact, 1e-12);
    }
}

#[test]
fn pmf_sum_tail_handles_boundary_thresholds() {
    let model = DistributionModel::finite_pmf(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    assert_eq!(pmf_sum_tail(&model, 4, 0.0).unwrap(), 0.0);
    assert_eq!(pmf_sum_tail(&model, 4, -1.0).unwrap(), 0.0);
    assert_eq!(pmf_sum_tail(&model, 4, 1.25).unwrap(), f64::NEG_INFINITY);
    // The top atom itself: P = 0.25^4.
    assert_rel(
        pmf_sum_tail(&model, 4, 1.0).unwrap(),
        4.0 * 0.25f64.ln(),
        1e-13,
    );
}

#[test]
fn pmf_sum_tail_rejects_what_it_cannot_do() {
    // Wrong model family.
    let bernoulli = DistributionModel::bernoulli(0.5).unwrap();
    assert!(matches!(
        pmf_sum_tail(&bernoulli, 10, 0.7),
        Err(Error::Unsupported(_))
    ));
    // Incommensurable support.
    let irrational = DistributionModel::finite_pmf(
        vec![0.0, 1.0, 1.0 + std::f64::consts::SQRT_2],
        vec![0.4, 0.3, 0.3],
    )
    .unwrap();
    assert!(matches!(
        pmf_sum_tail(&irrational, 10, 1.0),
        Err(Error::Unsupported(_))
    ));
    // Array budget: the sum would take n + 1 > 1e6 lattice values.
    let coin = DistributionModel::finite_pmf(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert!(matches!(
        pmf_sum_tail(&coin, 1_500_000, 0.6),
        Err(Error::Unsupported(_))
    ));
    // Work budget: n * len * support size overflows the step cap long
    // before the array cap.
    let wide =
        DistributionModel::finite_pmf(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.2, 0.2, 0.2, 0.2, 0.2])
            .unwrap();
    assert!(matches!(
        pmf_sum_tail(&wide, 20_000, 2.5),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn exact_tail_routes_to_the_matching_oracle() {
    let cases: Vec<(DistributionModel, u64, f64, f64)> = vec![
        (
            DistributionModel::bernoulli(0.5).unwrap(),
            10,
            0.7,
            binomial_tail(10, 0.5, 0.7).unwrap(),
        ),
        (
            DistributionModel::poisson(1.0).unwrap(),
            10,
            2.0,
            poisson_sum_tail(10, 1.0, 2.0).unwrap(),
        ),
        (
            DistributionModel::exponential(1.0).unwrap(),
            10,
            2.0,
            gamma_tail(10, 1.0, 2.0).unwrap(),
        ),
        (
            DistributionModel::gaussian(0.0, 1.0).unwrap(),
            4,
            1.0,
            gaussian_tail(4, 0.0, 1.0, 1.0).unwrap(),
        ),
    ];
    for (model, n, mu, expected) in &cases {
        assert_eq!(exact_tail(model, *n, *mu).unwrap(), *expected);
    }
    let pmf = DistributionModel::finite_pmf(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    assert_eq!(
        exact_tail(&pmf, 2, 0.75).unwrap(),
        pmf_sum_tail(&pmf, 2, 0.75).unwrap()
    );
}

#[test]
fn mc_tail_is_bit_deterministic() {
    let model = DistributionModel::bernoulli(0.5).unwrap();
    let a = mc_tail(&model, 10, 0.7, 200_000, 9).unwrap();
    let b = mc_tail(&model, 10, 0.7, 200_000, 9).unwrap();
    assert_eq!(a, b);
    let c = mc_tail(&model, 10, 0.7, 200_000, 10).unwrap();
    assert_ne!(a.point, c.point, "different seeds, different draws");
}

#[test]
fn mc_tail_covers_known_binomial_probability() {
    let model = DistributionModel::bernoulli(0.5).unwrap();
    let est = mc_tail(&model, 10, 0.7, 1_000_000, 42).unwrap();
    assert!(est.ci_low <= 0.171875 && 0.171875 <= est.ci_high);
    assert!(est.ci_low <= est.point && est.point <= est.ci_high);
    assert_abs(est.point, 0.171875, 2e-3);
}

#[test]
fn mc_tail_covers_known_gamma_probability() {
    let model = DistributionModel::exponential(1.0).unwrap();
    let exact = gamma_tail(10, 1.0, 2.0).unwrap().exp();
    let est = mc_tail(&model, 10, 2.0, 1_000_000, 7).unwrap();
    assert!(est.ci_low <= exact && exact <= est.ci_high);
}

#[test]
fn mc_tail_covers_known_gaussian_probability() {
    let model = DistributionModel::gaussian(0.0, 1.0).unwrap();
    let exact = gaussian_tail(10, 0.0, 1.0, 0.5).unwrap().exp();
    let est = mc_tail(&model, 10, 0.5, 200_000, 3).unwrap();
    assert!(
        est.ci_low <= exact && exact <= est.ci_high,
        "exact {exact} outside [{}, {}]",
        est.ci_low,
        est.ci_high
    );
}

#[test]
fn mc_tail_covers_known_pmf_probability() {
    let model = DistributionModel::finite_pmf(vec![0.0, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    let est = mc_tail(&model, 2, 0.75, 200_000, 11).unwrap();
    assert!(est.ci_low <= 0.3125 && 0.3125 <= est.ci_high);
}

#[test]
fn mc_tail_handles_zero_hits() {
    // P{Bin(30, 1/2) = 30} ~ 9e-10: ten thousand samples see nothing.
    let model = DistributionModel::bernoulli(0.5).unwrap();
    let est = mc_tail(&model, 30, 1.0, 10_000, 5).unwrap();
    assert_eq!(est.point, 0.0);
    assert_eq!(est.ci_low, 0.0);
    assert!(
        est.ci_high > 0.0,
        "score interval keeps a positive upper end"
    );
}

#[test]
fn mc_tail_validates_sample_count() {
    let model = DistributionModel::bernoulli(0.5).unwrap();
    assert!(matches!(
        mc_tail(&model, 10, 0.7, 999, 1),
        Err(Error::InvalidParameter {
            name: "samples",
            ..
        })
    ));
    assert!(mc_tail(&model, 10, 0.7, 1000, 1).is_ok());
}

#[test]
fn mc_tail_counts_lattice_boundaries_correctly() {
    // The threshold test must not lose atoms to float dust: with
    // mu = 0.7 and n = 100 the sum hits 70 exactly and must count.
    let model = DistributionModel::bernoulli(0.7).unwrap();
    // P{mean >= 0.7} is sizable; a wrong strict threshold would lose
    // the atom at 70 and bias the estimate visibly low.
    let exact = binomial_tail(100, 0.7, 0.7).unwrap().exp();
    let est = mc_tail(&model, 100, 0.7, 400_000, 13).unwrap();
    assert!(
        est.ci_low <= exact && exact <= est.ci_high,
        "exact {exact} outside [{}, {}]",
        est.ci_low,
        est.ci_high
    );
}
