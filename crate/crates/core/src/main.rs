//! `ldtail`: command-line front end for the tail-probability library.
//!
//! Exit codes: 0 on success, 2 on domain or usage errors, 3 on I/O
//! errors. All numeric output uses `.` as the decimal separator and 17
//! significant digits, so values round-trip exactly through parsing.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use ldtail::approximations::{self, Method};
use ldtail::distributions::parse_model;
use ldtail::{Error, harness, oracles, tilting};

#[derive(Parser)]
#[command(
    name = "ldtail",
    version,
    about = "Tail probabilities P{S_n >= n mu} for sums of i.i.d. random variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the exponential tilt E_beta[X] = mu and print its summary.
    Tilt {
        /// Model spec, e.g. bernoulli:p=0.5 or pmf:support=0,1;probs=0.5,0.5
        #[arg(long)]
        model: String,
        /// Target mean, strictly inside the attainable range.
        #[arg(long)]
        mu: f64,
    },
    /// Print tail estimates, one `method,log_prob,prob,c_mu` line each.
    Tail {
        #[arg(long)]
        model: String,
        #[arg(long)]
        mu: f64,
        /// Number of summands.
        #[arg(long)]
        n: u64,
        /// sanov | br | refined | all
        #[arg(long, value_parser = parse_method_arg)]
        method: MethodArg,
    },
    /// Print the exact tail, or a Monte Carlo estimate with its 95% CI.
    Oracle {
        #[arg(long)]
        model: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: u64,
        /// Use Monte Carlo with this many samples instead of the exact
        /// oracle.
        #[arg(long)]
        mc_samples: Option<u64>,
        /// RNG seed for Monte Carlo (ignored otherwise).
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reproduce the c table at p = 1/2 and its attached sanity checks.
    Table1 {
        /// Also write the table to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Measure approximation error against the exact oracle on an
    /// arithmetic n grid and fit its decay rate.
    Convergence {
        #[arg(long)]
        model: String,
        #[arg(long)]
        mu: f64,
        /// sanov | br | refined
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        n_start: u64,
        #[arg(long)]
        n_stop: u64,
        #[arg(long)]
        n_step: u64,
        /// Also write the rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// RNG seed for the Monte Carlo fallback oracle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug)]
enum MethodArg {
    All,
    One(Method),
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_str(s).map_err(|e| e.to_string())
}

fn parse_method_arg(s: &str) -> Result<MethodArg, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(MethodArg::All)
    } else {
        parse_method(s).map(MethodArg::One)
    }
}

/// 17 significant digits; round-trips through f64 parsing.
fn sig(x: f64) -> String {
    format!("{x:.16e}")
}

fn print_estimate(
    model: &ldtail::DistributionModel,
    mu: f64,
    n: u64,
    method: Method,
) -> ldtail::Result<()> {
    let est = approximations::estimate(model, mu, n, method)?;
    let c_mu = est.c_mu.map(sig).unwrap_or_default();
    println!(
        "{},{},{},{}",
        est.method.label(),
        sig(est.log_prob),
        sig(est.prob),
        c_mu
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e {
            Error::Io { .. } => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> ldtail::Result<()> {
    match cli.command {
        Command::Tilt { model, mu } => {
            let model = parse_model(&model)?;
            let summary = tilting::solve_tilt(&model, mu)?;
            println!("beta_hat={}", sig(summary.beta_hat));
            println!("divergence={}", sig(summary.divergence));
            println!("variance={}", sig(summary.variance));
            println!(
                "log_partition_at_tilt={}",
                sig(summary.log_partition_at_tilt)
            );
        }
        Command::Tail {
            model,
            mu,
            n,
            method,
        } => {
            let model = parse_model(&model)?;
            match method {
                MethodArg::One(m) => print_estimate(&model, mu, n, m)?,
                // Survey mode: print every estimate that can be formed,
                // report the rest on stderr, and fail only when nothing
                // succeeds.
                MethodArg::All => {
                    let mut last_err = None;
                    let mut succeeded = false;
                    for m in [Method::Sanov, Method::BahadurRao, Method::RefinedGaussian] {
                        match print_estimate(&model, mu, n, m) {
                            Ok(()) => succeeded = true,
                            Err(e) => {
                                eprintln!("{}: {e}", m.label());
                                last_err = Some(e);
                            }
                        }
                    }
                    if !succeeded {
                        return Err(last_err.expect("no success implies an error"));
                    }
                }
            }
        }
        Command::Oracle {
            model,
            mu,
            n,
            mc_samples,
            seed,
        } => {
            let model = parse_model(&model)?;
            match mc_samples {
                None => {
                    let log_prob = oracles::exact_tail(&model, n, mu)?;
                    println!("{},{}", sig(log_prob), sig(log_prob.exp()));
                }
                Some(samples) => {
                    let est = oracles::mc_tail(&model, n, mu, samples, seed)?;
                    println!(
                        "{},{},{},{}",
                        sig(est.point.ln()),
                        sig(est.point),
                        sig(est.ci_low),
                        sig(est.ci_high)
                    );
                }
            }
        }
        Command::Table1 { csv } => {
            let report = harness::reproduce_table1();
            print!("{}", harness::to_csv(&report));
            println!(
                "max_abs_dev_from_reference={}",
                sig(report.max_abs_dev_from_reference)
            );
            println!("bound_holds={}", report.bound_holds);
            println!("linear_rule_max_dev={}", sig(report.linear_rule_max_dev));
            if let Some(path) = csv {
                harness::emit_csv(&report, &path)?;
            }
        }
        Command::Convergence {
            model,
            mu,
            method,
            n_start,
            n_stop,
            n_step,
            csv,
            seed,
        } => {
            if n_step == 0 {
                return Err(Error::InvalidParameter {
                    name: "n_step",
                    reason: "must be positive".into(),
                });
            }
            if n_stop < n_start {
                return Err(Error::InvalidParameter {
                    name: "n_stop",
                    reason: format!("must be at least n_start ({n_start})"),
                });
            }
            let grid: Vec<u64> = (n_start..=n_stop).step_by(n_step as usize).collect();
            let report = harness::run_convergence(&model, mu, method, &grid, seed)?;
            print!("{}", harness::to_csv(&report));
            println!("dropped={}", report.dropped);
            match (report.fitted_slope, report.fitted_intercept) {
                (Some(slope), Some(intercept)) => {
                    println!("fitted_slope={}", sig(slope));
                    println!("fitted_intercept={}", sig(intercept));
                }
                _ => println!("fitted_slope=insufficient_data"),
            }
            if let Some(path) = csv {
                harness::emit_csv(&report, &path)?;
            }
        }
    }
    Ok(())
}
