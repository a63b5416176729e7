//! svikit command line: run benchmark experiments from a config file, solve a
//! single instance, or run the property check suites.
//!
//! Exit codes: 0 success, 1 failed check/assertion, 2 configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use svikit::bench::{self, DimSpec, ExperimentConfig, TableStyle};
use svikit::problems::Family;
use svikit::solvers::Algorithm;

#[derive(Parser)]
#[command(name = "svikit", about = "Stochastic variational inequality solver benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark experiment described by a config file.
    Bench {
        /// Path to the key = value config file.
        config: PathBuf,
        /// Worker threads for replications (default: rayon's choice).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one generated instance and print the run report.
    Solve {
        #[arg(long)]
        family: String,
        /// Problem size: d, or nIxnII for games.
        #[arg(long)]
        dim: String,
        #[arg(long, default_value = "sfbf")]
        algorithm: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: u64,
        /// Write the recorded trajectory CSV here.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Run the property suites (projections, oracle, validation, dynamics).
    Check {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Bench {
            config,
            parallelism,
            output_dir,
            seed,
        } => cmd_bench(config, parallelism, output_dir, seed),
        Command::Solve {
            family,
            dim,
            algorithm,
            seed,
            tol,
            max_iter,
            trajectory_out,
        } => cmd_solve(family, dim, algorithm, seed, tol, max_iter, trajectory_out),
        Command::Check { seed } => cmd_check(seed),
    }
}

fn config_error(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {err}");
    ExitCode::from(2)
}

fn cmd_bench(
    path: PathBuf,
    parallelism: Option<usize>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> ExitCode {
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", path.display())),
    };
    let mut config = match bench::parse_config(&text) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(dir) = output_dir {
        config.output_dir = Some(dir);
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    let result = match parallelism {
        Some(p) => bench::run_experiment_with_parallelism(&config, p),
        None => bench::run_experiment(&config),
    };
    match result {
        Ok(output) => {
            match bench::emit_table(&output.summary, TableStyle::AlignedText) {
                Ok(table) => print!("{table}"),
                Err(e) => return config_error(e),
            }
            if let Some(dir) = &config.output_dir {
                println!("\nartifacts written to {}", dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("benchmark failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_solve(
    family: String,
    dim: String,
    algorithm: String,
    seed: u64,
    tol: f64,
    max_iter: u64,
    trajectory_out: Option<PathBuf>,
) -> ExitCode {
    let family: Family = match family.parse() {
        Ok(f) => f,
        Err(e) => return config_error(e),
    };
    let dim: DimSpec = match dim.parse() {
        Ok(d) => d,
        Err(e) => return config_error(e),
    };
    let algorithm: Algorithm = match algorithm.parse() {
        Ok(a) => a,
        Err(e) => return config_error(e),
    };
    let mut config = ExperimentConfig::for_family(family);
    config.dims = vec![dim];
    config.algorithms = vec![algorithm];
    config.replications = 1;
    config.base_seed = seed;
    config.stop.residual_tol = tol;
    config.stop.max_iterations = max_iter;
    config.record_trajectory = trajectory_out.is_some();
    if let Err(e) = config.validate() {
        return config_error(e);
    }
    // Match the benchmark's single-replication path exactly so `solve` output
    // is reproducible against `bench` rows.
    let output = match bench::run_experiment(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("solve failed: {e}");
            return ExitCode::from(1);
        }
    };
    let run = &output.runs[0];
    let report = &run.report;
    println!("family          {family}");
    println!("dim             {}", dim.label());
    println!("algorithm       {algorithm}");
    println!("seed            {seed}");
    println!("step rule       {:?}", config.step_rule);
    println!("iterations      {}", report.iterations);
    println!("final residual  {:.6e}", report.final_residual);
    println!("oracle calls    {}", report.oracle_calls);
    println!("wall time       {:.4} s", report.wall_time_s);
    println!("converged       {}", report.converged);
    println!("diverged        {}", report.diverged);
    if report.residuals_estimated {
        println!("note            residuals estimated from surrogate batches");
    }
    if let Some(path) = trajectory_out {
        match svikit::solvers::trajectory_csv(report) {
            Ok(csv) => {
                if let Err(e) = std::fs::write(&path, csv) {
                    eprintln!("could not write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                println!("trajectory      {}", path.display());
            }
            Err(e) => {
                eprintln!("trajectory export failed: {e}");
                return ExitCode::from(1);
            }
        }
    }
    if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_check(seed: u64) -> ExitCode {
    let outcomes = bench::checks::run_all(seed);
    let mut failures = 0usize;
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{verdict}  {:<40} {}", o.name, o.detail);
        if !o.passed {
            failures += 1;
        }
    }
    println!(
        "\n{} checks, {} failed",
        outcomes.len(),
        failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
