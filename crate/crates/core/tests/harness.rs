//! Convergence studies end to end: grid validation, lattice filtering,
//! slope fitting, the Monte Carlo fallback, the reference-table
//! reproduction, and CSV rendering.

mod common;

use common::{assert_abs, assert_rel};
use ldtail::harness::{
    C_HALF_REFERENCE, CsvTable, MIN_FIT_ROWS, NOISE_FLOOR, emit_csv, fit_error_slope,
    reproduce_table1, run_convergence, to_csv,
};
use ldtail::{ConvergenceReport, ConvergenceRow, Error, Method};

fn grid(start: u64, stop: u64, step: u64) -> Vec<u64> {
    (start..=stop).step_by(step as usize).collect()
}

fn synthetic_row(n: u64, err: f64) -> ConvergenceRow {
    ConvergenceRow {
        n,
        log_exact: -1.0,
        log_approx: -1.0 + err,
        ratio: 1.0 + err,
        abs_ratio_error: err,
    }
}

fn synthetic_report(rows: Vec<ConvergenceRow>) -> ConvergenceReport {
    ConvergenceReport {
        model_spec: "synthetic".to_string(),
        mu: 0.7,
        method: Method::RefinedGaussian,
        rows,
        dropped: 0,
        fitted_slope: None,
        fitted_intercept: None,
    }
}

#[test]
fn convergence_study_runs_on_a_density_model() {
    let report = run_convergence(
        "exponential:rate=1",
        2.0,
        Method::RefinedGaussian,
        &grid(5, 50, 5),
        0,
    )
    .unwrap();
    assert_eq!(report.rows.len(), 10);
    assert_eq!(report.dropped, 0);
    assert_eq!(report.model_spec, "exponential:rate=1");
    for pair in report.rows.windows(2) {
        assert!(pair[0].n < pair[1].n);
        assert!(
            pair[1].abs_ratio_error < pair[0].abs_ratio_error,
            "error should shrink with n on this grid"
        );
    }
    for row in &report.rows {
        assert_rel(row.ratio, (row.log_approx - row.log_exact).exp(), 1e-15);
        assert_eq!(row.abs_ratio_error, (row.ratio - 1.0).abs());
    }
    let slope = report.fitted_slope.expect("ten clean rows fit a slope");
    assert!(
        (-1.35..=-0.75).contains(&slope),
        "slope {slope} not near -1"
    );
    assert!(report.fitted_intercept.unwrap().is_finite());
}

#[test]
fn convergence_study_skips_misaligned_lattice_points() {
    let report = run_convergence(
        "bernoulli:p=0.5",
        0.7,
        Method::RefinedGaussian,
        &[10, 15, 20, 25, 30],
        0,
    )
    .unwrap();
    let kept: Vec<u64> = report.rows.iter().map(|r| r.n).collect();
    assert_eq!(kept, vec![10, 20, 30]);
    assert_eq!(report.dropped, 2);
}

#[test]
fn convergence_study_validates_its_grid() {
    let mu = 0.7;
    let m = Method::Sanov;
    assert!(matches!(
        run_convergence("bernoulli:p=0.5", mu, m, &[], 0),
        Err(Error::EmptyInput(_))
    ));
    for bad in [&[0u64, 10][..], &[10, 10], &[20, 10]] {
        assert!(matches!(
            run_convergence("bernoulli:p=0.5", mu, m, bad, 0),
            Err(Error::InvalidParameter { name: "n_grid", .. })
        ));
    }
    assert!(run_convergence("no_such_model:a=1", mu, m, &[10], 0).is_err());
}

#[test]
fn convergence_study_ignores_seed_when_oracle_is_exact() {
    let a = run_convergence(
        "bernoulli:p=0.5",
        0.7,
        Method::BahadurRao,
        &grid(10, 100, 10),
        1,
    )
    .unwrap();
    let b = run_convergence(
        "bernoulli:p=0.5",
        0.7,
        Method::BahadurRao,
        &grid(10, 100, 10),
        99,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn convergence_study_propagates_the_last_error_when_nothing_survives() {
    // The tilt is degenerate at every grid point, so every row fails the
    // same way and that error is what comes back.
    let err = run_convergence(
        "exponential:rate=1",
        1.00005,
        Method::RefinedGaussian,
        &grid(5, 25, 5),
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::DegenerateTilt { .. }), "got {err:?}");
}

#[test]
fn slope_fit_recovers_first_order_decay() {
    let rows: Vec<ConvergenceRow> = (1..=10)
        .map(|k| synthetic_row(10 * k, 3.0 / (10 * k) as f64))
        .collect();
    let slope = fit_error_slope(&synthetic_report(rows)).unwrap();
    assert_abs(slope, -1.0, 1e-12);
}

#[test]
fn slope_fit_recovers_square_root_decay() {
    let rows: Vec<ConvergenceRow> = (1..=10)
        .map(|k| synthetic_row(10 * k, 0.2 / ((10 * k) as f64).sqrt()))
        .collect();
    let slope = fit_error_slope(&synthetic_report(rows)).unwrap();
    assert_abs(slope, -0.5, 1e-12);
}

#[test]
fn slope_fit_excludes_rows_at_the_noise_floor() {
    // Three rows of pure rounding noise at huge n would wreck the fit if
    // they were included; the floor keeps them out.
    let mut rows: Vec<ConvergenceRow> = (1..=5)
        .map(|k| synthetic_row(10 * k, 3.0 / (10 * k) as f64))
        .collect();
    rows.push(synthetic_row(1_000, NOISE_FLOOR / 10.0));
    rows.push(synthetic_row(2_000, NOISE_FLOOR / 10.0));
    rows.push(synthetic_row(3_000, NOISE_FLOOR / 10.0));
    let slope = fit_error_slope(&synthetic_report(rows)).unwrap();
    assert_abs(slope, -1.0, 1e-9);
}

#[test]
fn slope_fit_reports_retained_rows_when_short() {
    let mut rows: Vec<ConvergenceRow> = (1..=4).map(|k| synthetic_row(10 * k, 1e-3)).collect();
    rows.push(synthetic_row(50, NOISE_FLOOR));
    let err = fit_error_slope(&synthetic_report(rows)).unwrap_err();
    assert!(
        matches!(err, Error::InsufficientData { retained: 4 }),
        "got {err:?}"
    );

    // Exactly the minimum fits.
    let rows: Vec<ConvergenceRow> = (1..=MIN_FIT_ROWS as u64)
        .map(|k| synthetic_row(10 * k, 1e-3))
        .collect();
    assert!(fit_error_slope(&synthetic_report(rows)).is_ok());
}

#[test]
fn convergence_study_leaves_slope_unfitted_below_noise_floor() {
    // The refined estimate is exact for Gaussian sums; every row sits at
    // rounding level, so all rows are kept but none qualify for the fit.
    let report = run_convergence(
        "gaussian:mean=0,var=1",
        0.5,
        Method::RefinedGaussian,
        &grid(10, 60, 10),
        0,
    )
    .unwrap();
    assert_eq!(report.rows.len(), 6);
    for row in &report.rows {
        assert!(
            row.abs_ratio_error <= NOISE_FLOOR,
            "error {}",
            row.abs_ratio_error
        );
    }
    assert_eq!(report.fitted_slope, None);
    assert!(matches!(
        fit_error_slope(&report),
        Err(Error::InsufficientData { retained: 0 })
    ));
}

#[test]
fn convergence_study_falls_back_to_monte_carlo() {
    // The support is incommensurable, so the convolution oracle refuses
    // and the sampler takes over. Coarse n keeps the approximation error
    // far above sampling noise, so both rows are retained.
    let spec = "pmf:support=0,1,3.141592653589793;probs=0.5,0.3,0.2";
    let report = run_convergence(spec, 2.0, Method::RefinedGaussian, &[4, 8], 42).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.dropped, 0);
    assert_eq!(report.fitted_slope, None, "two rows cannot fit a slope");
    for row in &report.rows {
        assert!(row.log_exact < 0.0 && row.log_exact.is_finite());
        assert!(row.abs_ratio_error > 0.0);
    }
    // Same seed, same report, bit for bit.
    let again = run_convergence(spec, 2.0, Method::RefinedGaussian, &[4, 8], 42).unwrap();
    assert_eq!(report, again);
}

#[test]
fn convergence_study_drops_rows_the_sampler_cannot_see() {
    // P{S_5 >= 15} on this pmf requires all five draws at the top atom:
    // probability 1e-10, invisible to the fallback sample budget. The
    // row is dropped by design and the study reports zero retained rows.
    let spec = "pmf:support=0,1,3.141592653589793;probs=0.9,0.09,0.01";
    let err = run_convergence(spec, 3.0, Method::RefinedGaussian, &[5], 7).unwrap_err();
    assert!(
        matches!(err, Error::InsufficientData { retained: 0 }),
        "got {err:?}"
    );
}

#[test]
fn table_reproduction_matches_frozen_values() {
    let report = reproduce_table1();
    let expected = [
        5.0832725882240803e-1,
        5.1247712375813326e-1,
        5.1660361431089430e-1,
        5.2068414665245955e-1,
        5.2467367760310246e-1,
        5.2847484698702274e-1,
        5.3184390084672006e-1,
    ];
    assert_eq!(report.rows.len(), 7);
    for ((row, want), (mu_ref, _)) in report.rows.iter().zip(expected).zip(C_HALF_REFERENCE) {
        assert_eq!(row.mu, mu_ref);
        assert_rel(row.c_mu, want, 1e-15);
    }
    assert_rel(
        report.max_abs_dev_from_reference,
        6.8414665245952744e-4,
        1e-12,
    );
    assert!(report.bound_holds);
    assert_rel(report.linear_rule_max_dev, 1.4894324866132624e-3, 1e-12);
}

#[test]
fn table_csv_renders_deterministically() {
    let report = reproduce_table1();
    let csv = to_csv(&report);
    assert_eq!(csv, to_csv(&report));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mu,c_mu"));
    let rest: Vec<&str> = lines.collect();
    assert_eq!(rest.len(), 7);
    for (line, row) in rest.iter().zip(&report.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 2);
        // 17 significant digits round-trip exactly.
        assert_eq!(fields[0].parse::<f64>().unwrap(), row.mu);
        assert_eq!(fields[1].parse::<f64>().unwrap(), row.c_mu);
        assert!(
            fields[1].contains('e'),
            "scientific notation expected: {line}"
        );
    }
}

#[test]
fn convergence_csv_round_trips_rows() {
    let report = run_convergence(
        "bernoulli:p=0.5",
        0.7,
        Method::RefinedGaussian,
        &grid(10, 50, 10),
        0,
    )
    .unwrap();
    let csv = to_csv(&report);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("n,log_exact,log_approx,ratio,abs_ratio_error")
    );
    for (line, row) in lines.zip(&report.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0].parse::<u64>().unwrap(), row.n);
        assert_eq!(fields[1].parse::<f64>().unwrap(), row.log_exact);
        assert_eq!(fields[2].parse::<f64>().unwrap(), row.log_approx);
        assert_eq!(fields[3].parse::<f64>().unwrap(), row.ratio);
        assert_eq!(fields[4].parse::<f64>().unwrap(), row.abs_ratio_error);
    }
}

#[test]
fn emit_csv_writes_what_to_csv_renders() {
    let report = reproduce_table1();
    let path = std::env::temp_dir().join("ldtail_harness_emit_test.csv");
    emit_csv(&report, &path).unwrap();
    let on_disk = std::fs::read_to_string(&path).unwrap();
    assert_eq!(on_disk, to_csv(&report));
    std::fs::remove_file(&path).ok();
}

#[test]
fn emit_csv_names_the_path_on_failure() {
    let report = reproduce_table1();
    let path = std::path::Path::new("/nonexistent_ldtail_dir/out.csv");
    match emit_csv(&report, path) {
        Err(Error::Io { path: p, .. }) => assert!(p.contains("nonexistent_ldtail_dir")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn csv_header_is_stable_per_report_type() {
    assert_eq!(reproduce_table1().csv_header(), "mu,c_mu");
    let report = synthetic_report(vec![synthetic_row(10, 1e-3)]);
    assert_eq!(
        report.csv_header(),
        "n,log_exact,log_approx,ratio,abs_ratio_error"
    );
}
