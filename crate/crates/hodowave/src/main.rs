//! Command-line front end: config-driven batch runs with CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 verification deviation, 2 usage, 3 validation
//! failure, 4 contraction failure, 5 reconstruction failure.

use clap::{Args, Parser, Subcommand};
use hodowave::config::{Overrides, RunConfig};
use hodowave::pipeline::{self, PipelineError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hodowave",
    version,
    about = "Characteristic fixed-point solver for a degenerate variational wave system"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts
    #[arg(long)]
    out: PathBuf,
    /// Override: number of tau intervals
    #[arg(long)]
    n_tau: Option<usize>,
    /// Override: number of y intervals
    #[arg(long)]
    n_y: Option<usize>,
    /// Override: delta cap
    #[arg(long)]
    delta: Option<f64>,
    /// Override: weighted-distance tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Override: iteration budget
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override: chirality constant
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate, solve, reconstruct, verify, and emit all artifacts
    Solve(CommonArgs),
    /// Check every transcribed coefficient family against the raw route
    Crosscheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump the coefficient tables at a probe point: tau y
        #[arg(long, num_args = 2, value_names = ["TAU", "Y"])]
        dump: Option<Vec<f64>>,
    },
    /// Grid-refinement study of the fixed point and the residuals
    Converge(CommonArgs),
    /// Measure the contraction rate across a chirality grid
    SweepLambda(CommonArgs),
}

fn load(common: &CommonArgs) -> Result<(RunConfig, String), PipelineError> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        PipelineError::Usage(hodowave::Error::Config {
            field: "config".into(),
            message: format!("{}: {e}", common.config.display()),
        })
    })?;
    let mut cfg = RunConfig::from_str(&text).map_err(PipelineError::Usage)?;
    cfg.apply(&Overrides {
        n_tau: common.n_tau,
        n_y: common.n_y,
        delta: common.delta,
        tol: common.tol,
        max_iters: common.max_iters,
        lambda: common.lambda,
    });
    cfg.validate().map_err(PipelineError::Usage)?;
    Ok((cfg, text))
}

fn run() -> Result<(), PipelineError> {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Solve(common) => {
            let (cfg, text) = load(common)?;
            let report = pipeline::run_solve(&cfg, &text, &common.out)?;
            println!(
                "solve: converged in {} iterations, kappa = {:.4}, delta = {:.6e} ({} halvings)",
                report.solver.iterations,
                report.solver.kappa_measured,
                report.delta_final,
                report.halvings
            );
            if let Some(dev) = report.oracle_max_abs_dev {
                println!("solve: reference-integration deviation {dev:.3e}");
            }
            if let Some(res) = &report.residuals {
                println!(
                    "solve: |H1| = {:.3e}, |H2| = {:.3e}, pde residuals {:.3e} / {:.3e}",
                    res.h1_sup, res.h2_sup, res.pde1_sup, res.pde2_sup
                );
            }
            Ok(())
        }
        Cmd::Crosscheck { common, dump } => {
            let (cfg, _) = load(common)?;
            let dump_at = dump.as_ref().map(|v| (v[0], v[1]));
            let art = pipeline::run_crosscheck(&cfg, &common.out, dump_at, None)?;
            let w = art.outcome.worst();
            println!(
                "crosscheck: {} families agree; worst {} at {:.3e}",
                art.outcome.families.len(),
                w.family,
                w.max_rel_dev
            );
            Ok(())
        }
        Cmd::Converge(common) => {
            let (cfg, _) = load(common)?;
            let art = pipeline::run_converge(&cfg, &common.out)?;
            for row in &art.rows {
                if let Some(o) = row.order {
                    println!(
                        "converge: {} n_tau={} norm={:.3e} order={:.2}",
                        row.quantity, row.n_tau, row.norm, o
                    );
                } else {
                    println!(
                        "converge: {} n_tau={} norm={:.3e}{}",
                        row.quantity,
                        row.n_tau,
                        row.norm,
                        if row.exact { " (exact)" } else { "" }
                    );
                }
            }
            Ok(())
        }
        Cmd::SweepLambda(common) => {
            let (cfg, _) = load(common)?;
            let art = pipeline::run_sweep_lambda(&cfg, &common.out)?;
            for r in &art.rows {
                println!(
                    "sweep: lambda={:.6e} kappa={:.4} converged={} iterations={}",
                    r.lambda, r.kappa, r.converged, r.iterations
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
