//! Benchmark harness: seeded replications over problem families, aggregation
//! into paper-style tables, and CSV artifacts.

pub mod checks;
mod config;
mod summary;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkit::{mix, sample_uniform, RngStream, Vector};
use crate::problems::{
    generate_fractional, generate_game, Family, GameKind, ProblemInstance,
};
use crate::solvers::{self, Algorithm, RunReport, SolverConfig};

pub use config::{parse_config, BatchRuleSpec, DimSpec, ExperimentConfig, StepRule};
pub use summary::{
    emit_table, mean_and_sd, parse_summary_csv, BenchmarkSummary, RatioRow, SummaryRow,
    TableStyle,
};

/// One completed run with its provenance.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub family: Family,
    pub dim: DimSpec,
    pub algorithm: Algorithm,
    pub replication: u64,
    pub seed: u64,
    pub report: RunReport,
}

impl RunRecord {
    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-{}-r{}",
            self.family,
            self.dim.label(),
            self.algorithm,
            self.replication
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub summary: BenchmarkSummary,
    pub runs: Vec<RunRecord>,
}

/// Stable per-run seed: base_seed XOR a mix of (family, dim, algorithm, r).
/// Deliberately hand-rolled so the derivation never changes under the feet of
/// recorded experiments.
pub fn run_seed(
    base_seed: u64,
    family: Family,
    dim: DimSpec,
    algorithm: Algorithm,
    replication: u64,
) -> u64 {
    let family_tag = match family {
        Family::Fractional => 1u64,
        Family::ZeroSum => 2,
        Family::Symmetric => 3,
        Family::Asymmetric => 4,
        Family::Affine => 5,
    };
    let alg_tag = match algorithm {
        Algorithm::Sfbf => 1u64,
        Algorithm::Seg => 2,
    };
    let mut h = mix(family_tag, dim.primary as u64);
    h = mix(h, dim.secondary.map(|s| s as u64 + 1).unwrap_or(0));
    h = mix(h, alg_tag);
    h = mix(h, replication);
    base_seed ^ h
}

fn build_problem(family: Family, dim: DimSpec, seed: u64) -> Result<ProblemInstance> {
    match family {
        Family::Fractional => generate_fractional(dim.primary, seed),
        Family::ZeroSum => generate_game(
            dim.primary,
            dim.secondary.unwrap_or(dim.primary),
            GameKind::ZeroSum,
            seed,
        ),
        Family::Symmetric => generate_game(
            dim.primary,
            dim.secondary.unwrap_or(dim.primary),
            GameKind::Symmetric,
            seed,
        ),
        Family::Asymmetric => generate_game(
            dim.primary,
            dim.secondary.unwrap_or(dim.primary),
            GameKind::Asymmetric,
            seed,
        ),
        Family::Affine => Ok(crate::problems::affine_test_problem(
            dim.primary,
            true,
            seed,
        )),
    }
}

/// Starting points: fractional runs start uniformly in (1,10)^d, which may be
/// infeasible (the FBF iterates tolerate that; the extragradient baseline
/// projects on its first step); games and affine problems start uniformly in
/// (0,1)^d.
fn make_x0(family: Family, dim_ambient: usize, seed: u64) -> Result<Vector> {
    let mut rng = RngStream::new(seed, 0);
    match family {
        Family::Fractional => sample_uniform(&mut rng, dim_ambient, 1.0, 10.0),
        _ => sample_uniform(&mut rng, dim_ambient, 0.0, 1.0),
    }
}

/// Rebuild the exact problem instance a recorded run solved; generation is
/// pure in the derived seed.
pub fn regenerate_problem(run: &RunRecord) -> Result<ProblemInstance> {
    build_problem(run.family, run.dim, mix(run.seed, 0xA))
}

fn execute_run(
    config: &ExperimentConfig,
    dim: DimSpec,
    algorithm: Algorithm,
    replication: u64,
) -> Result<RunRecord> {
    let seed = run_seed(config.base_seed, config.family, dim, algorithm, replication);
    let problem = build_problem(config.family, dim, mix(seed, 0xA))?;
    let x0 = make_x0(config.family, problem.dim, mix(seed, 0xB))?;
    let (step_policy, unvalidated) =
        config
            .step_rule
            .policy_for(algorithm, &problem, dim, config.family)?;
    let batch = config.batch_rule.schedule_for(problem.dim)?;
    let mut solver_config = SolverConfig::new(algorithm, step_policy, batch)
        .with_stop(config.stop.clone())
        .with_seed(mix(seed, 0xC));
    solver_config.skip_step_validation = unvalidated;
    solver_config.record_trajectory = config.record_trajectory;
    // Wall time covers the solve only, not problem generation.
    let report = solvers::run(&problem, &solver_config, &x0)?;
    Ok(RunRecord {
        family: config.family,
        dim,
        algorithm,
        replication,
        seed,
        report,
    })
}

/// Run every (dim, algorithm, replication) cell of the experiment.
/// Replications run on the ambient rayon pool; results are deterministic
/// regardless of scheduling because every run derives its own streams. Writes
/// artifacts when the config names an output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut runs: Vec<RunRecord> = Vec::new();
    for &dim in &config.dims {
        for &algorithm in &config.algorithms {
            let mut cell: Vec<RunRecord> = (0..config.replications)
                .into_par_iter()
                .map(|r| execute_run(config, dim, algorithm, r))
                .collect::<Result<Vec<_>>>()?;
            cell.sort_by_key(|r| r.replication);
            runs.extend(cell);
        }
    }
    let summary = summarize(config, &runs);
    let output = ExperimentOutput {
        config: config.clone(),
        summary,
        runs,
    };
    if let Some(dir) = &config.output_dir {
        write_artifacts(&output, dir)?;
    }
    Ok(output)
}

/// `run_experiment` on a dedicated rayon pool of the given width; width 1
/// reproduces fully serial execution.
pub fn run_experiment_with_parallelism(
    config: &ExperimentConfig,
    parallelism: usize,
) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}

fn summarize(config: &ExperimentConfig, runs: &[RunRecord]) -> BenchmarkSummary {
    let mut rows = Vec::new();
    for &dim in &config.dims {
        for &algorithm in &config.algorithms {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.dim == dim && r.algorithm == algorithm)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let iterations: Vec<f64> = cell.iter().map(|r| r.report.iterations as f64).collect();
            let times: Vec<f64> = cell.iter().map(|r| r.report.wall_time_s).collect();
            let calls: Vec<f64> = cell.iter().map(|r| r.report.oracle_calls as f64).collect();
            let converged = cell.iter().filter(|r| r.report.converged).count();
            let (mean_iterations, sd_iterations) = mean_and_sd(&iterations);
            let (mean_time_s, sd_time_s) = mean_and_sd(&times);
            let (mean_oracle_calls, _) = mean_and_sd(&calls);
            rows.push(SummaryRow {
                family: config.family,
                dim: dim.label(),
                algorithm,
                replications: cell.len() as u64,
                mean_iterations,
                sd_iterations,
                mean_time_s,
                sd_time_s,
                mean_oracle_calls,
                convergence_rate: converged as f64 / cell.len() as f64,
            });
        }
    }
    let mut ratios = Vec::new();
    for &dim in &config.dims {
        let label = dim.label();
        let sfbf = rows
            .iter()
            .find(|r| r.dim == label && r.algorithm == Algorithm::Sfbf);
        let seg = rows
            .iter()
            .find(|r| r.dim == label && r.algorithm == Algorithm::Seg);
        if let (Some(f), Some(e)) = (sfbf, seg) {
            ratios.push(RatioRow {
                family: config.family,
                dim: label,
                iteration_ratio: e.mean_iterations / f.mean_iterations,
                time_ratio: e.mean_time_s / f.mean_time_s,
            });
        }
    }
    BenchmarkSummary { rows, ratios }
}

/// Per-run CSV; every field except wall_time_s is deterministic for a fixed
/// config.
pub fn per_run_csv(runs: &[RunRecord]) -> String {
    let mut out = String::from(
        "family,dim,algorithm,replication,seed,iterations,final_residual,oracle_calls,converged,diverged,wall_time_s\n",
    );
    for r in runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.dim.label(),
            r.algorithm,
            r.replication,
            r.seed,
            r.report.iterations,
            r.report.final_residual,
            r.report.oracle_calls,
            r.report.converged,
            r.report.diverged,
            r.report.wall_time_s
        ));
    }
    out
}

/// Long-format residual curves (run_id, algorithm, n, wall_time_s, residual)
/// for external plotting. Every run must have recorded its trajectory.
pub fn emit_trajectory_curves(runs: &[RunRecord]) -> Result<String> {
    let missing: Vec<String> = runs
        .iter()
        .filter(|r| r.report.trajectory.is_none())
        .map(RunRecord::run_id)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Unsupported(format!(
            "runs without recorded trajectories: {}",
            missing.join(", ")
        )));
    }
    let mut out = String::from("run_id,algorithm,n,wall_time_s,residual\n");
    for r in runs {
        let id = r.run_id();
        for p in r.report.trajectory.as_ref().expect("checked above") {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                id, r.algorithm, p.n, p.elapsed_s, p.residual
            ));
        }
    }
    Ok(out)
}

/// Write summary.csv, summary.txt, per_run.csv and, when trajectories were
/// recorded, trajectories.csv. Returns the created paths.
pub fn write_artifacts(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    emit("summary.csv", emit_table(&output.summary, TableStyle::Csv)?)?;
    emit(
        "summary.txt",
        emit_table(&output.summary, TableStyle::AlignedText)?,
    )?;
    emit("per_run.csv", per_run_csv(&output.runs))?;
    if output.runs.iter().all(|r| r.report.trajectory.is_some()) && !output.runs.is_empty() {
        emit("trajectories.csv", emit_trajectory_curves(&output.runs)?)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_affine_config() -> ExperimentConfig {
        let mut config = ExperimentConfig::for_family(Family::Affine);
        config.dims = vec![DimSpec::square(6)];
        config.replications = 3;
        config.base_seed = 5;
        config.step_rule = StepRule::PaperGame; // 0.99/(sqrt(f) L) is fine here
        config.stop.residual_tol = 1e-4;
        config.stop.max_iterations = 20_000;
        config
    }

    #[test]
    fn affine_experiment_converges_and_summarises() {
        let output = run_experiment(&tiny_affine_config()).unwrap();
        assert_eq!(output.runs.len(), 6);
        let row = output.summary.row("6", Algorithm::Sfbf).unwrap();
        assert_eq!(row.replications, 3);
        assert_eq!(row.convergence_rate, 1.0);
        let ratio = output.summary.ratio("6").unwrap();
        assert!(ratio.iteration_ratio > 0.0);
    }

    #[test]
    fn reruns_are_deterministic_and_parallelism_invariant() {
        let config = tiny_affine_config();
        let a = run_experiment_with_parallelism(&config, 1).unwrap();
        let b = run_experiment_with_parallelism(&config, 4).unwrap();
        assert_eq!(per_run_strip_time(&a), per_run_strip_time(&b));
        let c = run_experiment(&config).unwrap();
        assert_eq!(per_run_strip_time(&a), per_run_strip_time(&c));
    }

    fn per_run_strip_time(output: &ExperimentOutput) -> String {
        per_run_csv(&output.runs)
            .lines()
            .map(|line| {
                let mut fields: Vec<&str> = line.split(',').collect();
                fields.pop(); // wall_time_s
                fields.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn trajectory_curves_have_one_row_per_iteration() {
        let mut config = tiny_affine_config();
        config.record_trajectory = true;
        config.replications = 2;
        let output = run_experiment(&config).unwrap();
        let curves = emit_trajectory_curves(&output.runs).unwrap();
        let expected_rows: u64 = output.runs.iter().map(|r| r.report.iterations).sum();
        assert_eq!(curves.lines().count() as u64, 1 + expected_rows);
        // rows are grouped by run id in stable order
        let ids: Vec<&str> = curves
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        let mut deduped = ids.clone();
        deduped.dedup();
        let unique: std::collections::BTreeSet<&str> = ids.iter().copied().collect();
        assert_eq!(deduped.len(), unique.len());
        // without recording the export is refused and names offenders
        let bare = run_experiment(&tiny_affine_config()).unwrap();
        let err = emit_trajectory_curves(&bare.runs).unwrap_err();
        assert!(err.to_string().contains("affine-6-sfbf-r0"));
    }

    #[test]
    fn asymmetric_games_converge_at_desk_scale() {
        let mut config = ExperimentConfig::for_family(Family::Asymmetric);
        config.dims = vec![DimSpec::pair(25, 50)];
        config.replications = 3;
        config.base_seed = 7;
        let output = run_experiment(&config).unwrap();
        for algorithm in [Algorithm::Sfbf, Algorithm::Seg] {
            let row = output.summary.row("25x50", algorithm).unwrap();
            assert_eq!(row.convergence_rate, 1.0, "{algorithm} runs failed");
        }
        let ratio = output.summary.ratio("25x50").unwrap();
        assert!(ratio.iteration_ratio > 1.0, "seg should need more iterations");
        // Converged solutions satisfy approximate complementarity.
        for run in &output.runs {
            let problem = regenerate_problem(run).unwrap();
            let game = problem.game_data().unwrap();
            assert!(crate::problems::verify_complementarity(
                game,
                &run.report.final_y,
                1e-2
            ));
        }
    }

    #[test]
    fn artifacts_land_in_the_output_dir() {
        let dir = std::env::temp_dir().join(format!("svikit-bench-{}", std::process::id()));
        let mut config = tiny_affine_config();
        config.output_dir = Some(dir.clone());
        let output = run_experiment(&config).unwrap();
        drop(output);
        for name in ["summary.csv", "summary.txt", "per_run.csv"] {
            assert!(dir.join(name).exists(), "{name} missing");
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
