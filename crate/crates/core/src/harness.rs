//! Experiment engine: convergence-rate studies against the exact
//! oracles, the reference table of correction constants at p = 1/2, and
//! deterministic CSV output for both.
//!
//! A convergence study measures ratio_n = approx_n / exact_n on an
//! ascending n grid and fits an ordinary least-squares line to
//! ln|ratio_n - 1| against ln n. The refined Gaussian estimate and the
//! lattice Bahadur-Rao estimate should both show slope near -1 (error
//! order 1/n); the plain Gaussian refinement in the density case
//! likewise. Slopes are only fitted to rows whose error sits above a
//! noise floor, so special-function rounding never masquerades as an
//! asymptotic rate.

use std::path::Path;

use crate::approximations::{self, Method};
use crate::distributions::{LATTICE_TOL, parse_model};
use crate::oracles;
use crate::{Error, Result};

/// Sample count for the Monte Carlo fallback oracle (finite pmfs beyond
/// the convolution budget).
pub const MC_FALLBACK_SAMPLES: u64 = 10_000_000;

/// Errors at or below this are special-function rounding, not signal;
/// they are excluded from slope fits.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Minimum rows above the noise floor for a slope fit.
pub const MIN_FIT_ROWS: usize = 5;

/// One measured grid point of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub log_exact: f64,
    pub log_approx: f64,
    /// approx / exact, computed in log domain.
    pub ratio: f64,
    /// |ratio - 1|.
    pub abs_ratio_error: f64,
}

/// A completed convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub model_spec: String,
    pub mu: f64,
    pub method: Method,
    /// Rows in ascending n; on lattice models only aligned n appear.
    pub rows: Vec<ConvergenceRow>,
    /// Grid points that produced no row: lattice-misaligned n, per-row
    /// evaluation failures, and Monte Carlo rows drowned in sampling
    /// noise.
    pub dropped: usize,
    /// OLS slope of ln(abs_ratio_error) on ln(n) over rows above the
    /// noise floor; `None` when fewer than [`MIN_FIT_ROWS`] qualify.
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
}

/// One row of the reference-table reproduction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table1Row {
    pub mu: f64,
    pub c_mu: f64,
}

/// Reproduction of the reference table of c at p = 1/2, together with
/// two sanity statements attached to it: the (0.5, 0.534) bound on a
/// fine mu grid and the linear rule c ~ 0.5 + (mu - 0.5)/12 on
/// [0.6, 0.9].
#[derive(Clone, Debug, PartialEq)]
pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    /// Largest |c_mu - reference| over the seven tabulated points; the
    /// references carry three decimals.
    pub max_abs_dev_from_reference: f64,
    /// 0.5 < c < 0.534 everywhere on {0.505, 0.510, ..., 0.995}.
    pub bound_holds: bool,
    /// max |c - (0.5 + (mu - 0.5)/12)| over the fine grid within
    /// [0.6, 0.9].
    pub linear_rule_max_dev: f64,
}

/// Three-decimal reference values for c at p = 1/2 on the coarse grid.
pub const C_HALF_REFERENCE: [(f64, f64); 7] = [
    (0.60, 0.508),
    (0.65, 0.512),
    (0.70, 0.516),
    (0.75, 0.520),
    (0.80, 0.524),
    (0.85, 0.528),
    (0.90, 0.532),
];

/// Runs a convergence study of `method` against the exact oracle on the
/// given ascending grid. For lattice models, grid points where n mu does
/// not land on the sum lattice are skipped (and counted in `dropped`);
/// the estimates are undefined there. `seed` feeds the Monte Carlo
/// fallback only; closed-form oracles ignore it.
///
/// Per-row failures drop the row; the study fails as a whole only when
/// no row survives, in which case the last row error (if any) is
/// returned.
pub fn run_convergence(
    model_spec: &str,
    mu: f64,
    method: Method,
    n_grid: &[u64],
    seed: u64,
) -> Result<ConvergenceReport> {
    let model = parse_model(model_spec)?;
    if n_grid.is_empty() {
        return Err(Error::EmptyInput(
            "run_convergence needs a non-empty n grid",
        ));
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "n_grid",
            reason: "must be strictly ascending positive integers".into(),
        });
    }

    let lattice = model.lattice_of();
    let mut rows = Vec::with_capacity(n_grid.len());
    let mut dropped = 0usize;
    let mut last_err: Option<Error> = None;
    for &n in n_grid {
        if let Some(lat) = lattice {
            let idx = n as f64 * (mu - lat.offset) / lat.span;
            if (idx - idx.round()).abs() > LATTICE_TOL {
                dropped += 1;
                continue;
            }
        }
        match eval_row(&model, mu, n, method, seed) {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => dropped += 1,
            Err(e) => {
                dropped += 1;
                last_err = Some(e);
            }
        }
    }
    if rows.is_empty() {
        return Err(last_err.unwrap_or(Error::InsufficientData { retained: 0 }));
    }
    let fit = fit_points(&rows);
    Ok(ConvergenceReport {
        model_spec: model_spec.to_string(),
        mu,
        method,
        rows,
        dropped,
        fitted_slope: fit.map(|(slope, _)| slope),
        fitted_intercept: fit.map(|(_, intercept)| intercept),
    })
}

/// Evaluates one grid point. `Ok(None)` marks a row dropped by design:
/// the Monte Carlo fallback saw no hits, or its interval is too wide
/// relative to the measured error to be a measurement of it.
fn eval_row(
    model: &crate::DistributionModel,
    mu: f64,
    n: u64,
    method: Method,
    seed: u64,
) -> Result<Option<ConvergenceRow>> {
    let approx = approximations::estimate(model, mu, n, method)?;
    let log_exact = match oracles::exact_tail(model, n, mu) {
        Ok(log_exact) => log_exact,
        Err(Error::Unsupported(_)) => {
            let mc = oracles::mc_tail(model, n, mu, MC_FALLBACK_SAMPLES, seed)?;
            if mc.point <= 0.0 {
                return Ok(None);
            }
            let ratio = (approx.log_prob - mc.point.ln()).exp();
            // Never fit (or report) sampling noise as an error
            // measurement: require the relative interval width to be at
            // most half the error it is supposed to resolve.
            if (mc.ci_high - mc.ci_low) / mc.point > 0.5 * (ratio - 1.0).abs() {
                return Ok(None);
            }
            mc.point.ln()
        }
        Err(e) => return Err(e),
    };
    let ratio = (approx.log_prob - log_exact).exp();
    Ok(Some(ConvergenceRow {
        n,
        log_exact,
        log_approx: approx.log_prob,
        ratio,
        abs_ratio_error: (ratio - 1.0).abs(),
    }))
}

fn fit_points(rows: &[ConvergenceRow]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_ratio_error > NOISE_FLOOR)
        .map(|r| ((r.n as f64).ln(), r.abs_ratio_error.ln()))
        .collect();
    if pts.len() < MIN_FIT_ROWS {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    Some((slope, intercept))
}

/// The OLS slope of a finished report, recomputed from its rows. Errors
/// with the retained-row count when fewer than [`MIN_FIT_ROWS`] rows sit
/// above the noise floor.
pub fn fit_error_slope(report: &ConvergenceReport) -> Result<f64> {
    fit_points(&report.rows)
        .map(|(slope, _)| slope)
        .ok_or_else(|| Error::InsufficientData {
            retained: report
                .rows
                .iter()
                .filter(|r| r.abs_ratio_error > NOISE_FLOOR)
                .count(),
        })
}

/// Recomputes the c table at p = 1/2 and the two statements attached to
/// it. The fine grid is built from integer arithmetic ((505 + 5j)/1000)
/// so the grid points are reproducible to the bit.
pub fn reproduce_table1() -> Table1Report {
    let c_at = |mu: f64| {
        approximations::binomial_c_mu(0.5, mu).expect("table grid points are interior to (0.5, 1)")
    };

    let mut rows = Vec::with_capacity(C_HALF_REFERENCE.len());
    let mut max_dev = 0.0f64;
    for &(mu, reference) in &C_HALF_REFERENCE {
        let c = c_at(mu);
        max_dev = max_dev.max((c - reference).abs());
        rows.push(Table1Row { mu, c_mu: c });
    }

    let mut bound_holds = true;
    let mut linear_max = 0.0f64;
    for j in 0..=98u32 {
        let mu = (505 + 5 * j) as f64 / 1000.0;
        let c = c_at(mu);
        if !(c > 0.5 && c < 0.534) {
            bound_holds = false;
        }
        if (0.6..=0.9).contains(&mu) {
            let rule = 0.5 + (mu - 0.5) / 12.0;
            linear_max = linear_max.max((c - rule).abs());
        }
    }

    Table1Report {
        rows,
        max_abs_dev_from_reference: max_dev,
        bound_holds,
        linear_rule_max_dev: linear_max,
    }
}

/// A report that can render itself as CSV. All floats use 17
/// significant digits (round-trip exact), `,` delimiters and `\n` line
/// endings; output is byte-deterministic for equal reports.
pub trait CsvTable {
    fn csv_header(&self) -> &'static str;
    fn append_csv_rows(&self, out: &mut String);
}

/// 17 significant digits, scientific; round-trips through f64 parsing.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable for Table1Report {
    fn csv_header(&self) -> &'static str {
        "mu,c_mu"
    }

    fn append_csv_rows(&self, out: &mut String) {
        for row in &self.rows {
            out.push_str(&fmt_f64(row.mu));
            out.push(',');
            out.push_str(&fmt_f64(row.c_mu));
            out.push('\n');
        }
    }
}

impl CsvTable for ConvergenceReport {
    fn csv_header(&self) -> &'static str {
        "n,log_exact,log_approx,ratio,abs_ratio_error"
    }

    fn append_csv_rows(&self, out: &mut String) {
        for row in &self.rows {
            out.push_str(&row.n.to_string());
            for value in [
                row.log_exact,
                row.log_approx,
                row.ratio,
                row.abs_ratio_error,
            ] {
                out.push(',');
                out.push_str(&fmt_f64(value));
            }
            out.push('\n');
        }
    }
}

/// Renders a report to a CSV string (header, then rows).
pub fn to_csv<T: CsvTable + ?Sized>(report: &T) -> String {
    let mut text = String::new();
    text.push_str(report.csv_header());
    text.push('\n');
    report.append_csv_rows(&mut text);
    text
}

/// Writes a report to `path` as CSV. I/O failures name the path.
pub fn emit_csv<T: CsvTable + ?Sized>(report: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(report)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
