//! Property suites behind the `check` subcommand. Each suite returns one
//! outcome per named property; the acceptance tests assert on the same
//! functions, so the CLI and the test suite cannot drift apart.

use crate::numkit::{sample_gaussian, RngStream, Vector};
use crate::oracle::MiniBatchEstimator;
use crate::problems::{
    affine_problem, affine_test_problem, generate_fractional, generate_game, unit_scalar_problem,
    AffineSetKind, GameKind, ProblemInstance,
};
use crate::schedules::{
    validate_step_size_with_factor, BatchSchedule, StepSizePolicy, SEG_STEP_FACTOR,
    SFBF_STEP_FACTOR,
};
use crate::sets::FeasibleSet;
use crate::solvers::{
    deterministic_fejer_check, residual, run, sfbf_step, Algorithm, SolverState, SolverConfig,
    StoppingRule,
};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn set_variants(dim: usize) -> Vec<(&'static str, FeasibleSet)> {
    vec![
        (
            "box",
            FeasibleSet::box_set(Vector::from_elem(dim, -1.0), Vector::from_elem(dim, 2.0))
                .expect("static bounds"),
        ),
        (
            "orthant",
            FeasibleSet::nonnegative_orthant(dim).expect("dim >= 1"),
        ),
        ("whole", FeasibleSet::whole_space(dim).expect("dim >= 1")),
    ]
}

/// Projection properties over 1000 random cases per set variant: idempotence,
/// nonexpansiveness, the variational characterisation, and the Pythagorean
/// bound.
pub fn projection_suite(seed: u64) -> Vec<CheckOutcome> {
    const CASES: usize = 1000;
    const DIM: usize = 8;
    let mut outcomes = Vec::new();
    for (label, set) in set_variants(DIM) {
        let mut rng = RngStream::new(seed, 100);
        let mut idempotent_failures = 0usize;
        let mut expansive_failures = 0usize;
        let mut variational_failures = 0usize;
        let mut pythagoras_failures = 0usize;
        for _ in 0..CASES {
            let x = sample_gaussian(&mut rng, DIM, 0.0, 2.0).expect("dim >= 1");
            let z = sample_gaussian(&mut rng, DIM, 0.0, 2.0).expect("dim >= 1");
            let px = set.project(&x).expect("dims match");
            let pz = set.project(&z).expect("dims match");
            if set.project(&px).expect("dims match") != px {
                idempotent_failures += 1;
            }
            if px.dist(&pz) > x.dist(&z) + 1e-12 {
                expansive_failures += 1;
            }
            // Feasible probes come from projecting fresh Gaussians.
            for _ in 0..10 {
                let y = set
                    .project(&sample_gaussian(&mut rng, DIM, 0.0, 2.0).expect("dim >= 1"))
                    .expect("dims match");
                if (&x - &px).dot(&(&y - &px)) > 1e-10 {
                    variational_failures += 1;
                }
                if px.dist(&y).powi(2) + px.dist(&x).powi(2) > x.dist(&y).powi(2) + 1e-10 {
                    pythagoras_failures += 1;
                }
            }
        }
        let fails = [
            ("idempotence", idempotent_failures),
            ("nonexpansiveness", expansive_failures),
            ("variational", variational_failures),
            ("pythagorean", pythagoras_failures),
        ];
        for (prop, count) in fails {
            outcomes.push(CheckOutcome::new(
                &format!("projection/{label}/{prop}"),
                count == 0,
                format!("{count} failures over {CASES} cases"),
            ));
        }
    }
    outcomes
}

fn unbiasedness_check(
    name: &str,
    problem: &ProblemInstance,
    x: &Vector,
    seed: u64,
) -> CheckOutcome {
    const SAMPLES: usize = 100_000;
    let target = problem
        .oracle
        .mean_operator_eval(x)
        .expect("families ship closed-form means");
    let mut rng = RngStream::new(seed, 7);
    let mut draws: Vec<Vector> = Vec::with_capacity(SAMPLES);
    let mut acc = Vector::zeros(problem.dim);
    for _ in 0..SAMPLES {
        let s = problem.oracle.sample(x, &mut rng);
        acc.axpy(1.0, &s);
        draws.push(s);
    }
    let mean = acc.scale(1.0 / SAMPLES as f64);
    let spread = (draws
        .iter()
        .map(|s| s.dist(&mean).powi(2))
        .sum::<f64>()
        / SAMPLES as f64)
        .sqrt();
    let error = mean.dist(&target);
    let budget = 5.0 * spread / (SAMPLES as f64).sqrt();
    CheckOutcome::new(
        &format!("oracle/unbiased/{name}"),
        error <= budget,
        format!("|mean - T(x)| = {error:.3e}, five-sigma budget {budget:.3e}"),
    )
}

fn mse_scaling_check(name: &str, problem: &ProblemInstance, x: &Vector, seed: u64) -> CheckOutcome {
    const REPS: u64 = 2000;
    let mut est = MiniBatchEstimator::new(&problem.oracle);
    let mut rng = RngStream::new(seed, 11);
    let mut scaled = Vec::new();
    for m in [1u64, 4, 16, 64] {
        let mse = est
            .empirical_mse(x, m, REPS, &mut rng)
            .expect("mean operator present");
        scaled.push(mse * m as f64);
    }
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / min;
    CheckOutcome::new(
        &format!("oracle/mse-scaling/{name}"),
        spread <= 0.25,
        format!("mse*m over m in {{1,4,16,64}}: spread {spread:.3} (values {scaled:.3?})"),
    )
}

/// Oracle properties: unbiasedness at 1e5 samples per family, MSE * m constant
/// over m in {1, 4, 16, 64}, and exact call accounting through a solver run.
pub fn oracle_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();

    let fractional = generate_fractional(6, seed ^ 0xF).expect("valid dims");
    let mut rng = RngStream::new(seed, 1);
    let x_frac = fractional
        .set
        .project(&sample_gaussian(&mut rng, 6, 2.0, 2.0).expect("d >= 1"))
        .expect("dims match");
    outcomes.push(unbiasedness_check("fractional", &fractional, &x_frac, seed));

    let game = generate_game(4, 4, GameKind::ZeroSum, seed ^ 0x9).expect("valid dims");
    let x_game = sample_gaussian(&mut rng, 8, 0.5, 0.25)
        .expect("d >= 1")
        .map(|v| v.abs());
    outcomes.push(unbiasedness_check("zero_sum", &game, &x_game, seed));

    let affine = affine_problem(5, true, AffineSetKind::Box, 0.7, seed ^ 0x3);
    let x_aff = Vector::from_elem(5, 2.0);
    outcomes.push(unbiasedness_check("affine", &affine, &x_aff, seed));

    outcomes.push(mse_scaling_check("affine", &affine, &x_aff, seed));
    outcomes.push(mse_scaling_check("zero_sum", &game, &x_game, seed));

    // Call accounting through a real run: exactly 2 sum(m_{n+1}).
    let batch = BatchSchedule::experiment_rule(3).expect("d >= 1");
    let config = SolverConfig::new(
        Algorithm::Sfbf,
        StepSizePolicy::constant(0.5 / (SFBF_STEP_FACTOR * affine.lipschitz_l))
            .expect("positive step"),
        batch.clone(),
    )
    .with_stop(StoppingRule {
        residual_tol: 1e-5,
        residual_alpha: 1.0,
        max_iterations: 400,
    })
    .with_seed(seed ^ 0x77);
    let report = run(&affine, &config, &Vector::from_elem(5, 8.0)).expect("run completes");
    let expected: u64 = (0..report.iterations).map(|n| 2 * batch.batch_size_at(n)).sum();
    outcomes.push(CheckOutcome::new(
        "oracle/call-accounting",
        report.oracle_calls == expected,
        format!(
            "{} oracle calls over {} iterations, ledger expects {expected}",
            report.oracle_calls, report.iterations
        ),
    ));
    outcomes
}

/// Step-size and batch-schedule validation logic.
pub fn validation_suite() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    let l = 2.5;

    let sfbf_bound = 1.0 / (SFBF_STEP_FACTOR * l);
    let at = StepSizePolicy::constant(sfbf_bound).expect("positive");
    let below = StepSizePolicy::constant(sfbf_bound * 0.999).expect("positive");
    let sfbf_rejects = validate_step_size_with_factor(&at, l, SFBF_STEP_FACTOR).is_err();
    let sfbf_accepts = validate_step_size_with_factor(&below, l, SFBF_STEP_FACTOR)
        .map(|v| v.rho_lower > 0.0)
        .unwrap_or(false);
    outcomes.push(CheckOutcome::new(
        "validation/sfbf-bound",
        sfbf_rejects && sfbf_accepts,
        format!("bound 1/(sqrt(2) L) = {sfbf_bound:.4} enforced"),
    ));

    let seg_bound = 1.0 / (SEG_STEP_FACTOR * l);
    let at = StepSizePolicy::constant(seg_bound).expect("positive");
    let below = StepSizePolicy::constant(seg_bound * 0.999).expect("positive");
    let seg_rejects = validate_step_size_with_factor(&at, l, SEG_STEP_FACTOR).is_err();
    let seg_accepts = validate_step_size_with_factor(&below, l, SEG_STEP_FACTOR).is_ok();
    outcomes.push(CheckOutcome::new(
        "validation/seg-bound",
        seg_rejects && seg_accepts,
        format!("bound 1/(sqrt(6) L) = {seg_bound:.4} enforced"),
    ));

    // The override flag admits an out-of-bound policy.
    let p = unit_scalar_problem();
    let mut config = SolverConfig::new(
        Algorithm::Sfbf,
        StepSizePolicy::constant(0.9).expect("positive"),
        BatchSchedule::constant(1).expect("m >= 1"),
    );
    config.stop.max_iterations = 3;
    let gated = run(&p, &config, &Vector::new(vec![0.0])).is_err();
    config.skip_step_validation = true;
    let overridden = run(&p, &config, &Vector::new(vec![0.0])).is_ok();
    outcomes.push(CheckOutcome::new(
        "validation/override-flag",
        gated && overridden,
        "out-of-bound policy is rejected unless overridden".into(),
    ));

    let constant = BatchSchedule::constant(5).expect("m >= 1");
    let divergent = constant.summability_report(100).divergent;
    outcomes.push(CheckOutcome::new(
        "validation/constant-batch-divergent",
        divergent,
        "sum 1/m flagged divergent for constant schedules".into(),
    ));

    let rule = BatchSchedule::experiment_rule(1).expect("d >= 1");
    let partial = rule.summability_report(1_000_000).partial_sum;
    outcomes.push(CheckOutcome::new(
        "validation/experiment-rule-summable",
        partial <= 2.613,
        format!("partial sum over 1e6 terms = {partial:.6} <= 2.613"),
    ));
    outcomes
}

/// Deterministic dynamics: the hand-traced scalar step, the monotone affine
/// benchmark, and the per-iteration contraction audit on zero-noise runs.
pub fn dynamics_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();

    // Hand-traced values: alpha = 1/2 from X0 = 0 gives Y = 1/2, X1 = 1/4.
    let scalar = unit_scalar_problem();
    let mut est = MiniBatchEstimator::new(&scalar.oracle);
    let state = SolverState {
        n: 0,
        x: Vector::new(vec![0.0]),
        y: Vector::new(vec![0.0]),
    };
    let stepped = sfbf_step(
        &state,
        &scalar,
        &mut est,
        0.5,
        1,
        &RngStream::new(seed, 0),
    )
    .expect("finite step");
    outcomes.push(CheckOutcome::new(
        "dynamics/hand-trace",
        stepped.y.as_slice() == [0.5] && stepped.x.as_slice() == [0.25],
        format!("Y = {:?}, X1 = {:?}", stepped.y.as_slice(), stepped.x.as_slice()),
    ));

    // Strongly monotone affine benchmark at d = 50: residual below 1e-8
    // within 1e4 iterations at alpha = 0.5/(sqrt(2) L).
    let affine = affine_test_problem(50, true, seed ^ 0x51);
    let alpha = 0.5 / (SFBF_STEP_FACTOR * affine.lipschitz_l);
    let config = SolverConfig::new(
        Algorithm::Sfbf,
        StepSizePolicy::constant(alpha).expect("positive"),
        BatchSchedule::constant(1).expect("m >= 1"),
    )
    .with_stop(StoppingRule {
        residual_tol: 1e-8,
        residual_alpha: 1.0,
        max_iterations: 10_000,
    })
    .recording();
    let report = run(&affine, &config, &Vector::from_elem(50, 9.5)).expect("run completes");
    outcomes.push(CheckOutcome::new(
        "dynamics/monotone-affine-residual",
        report.converged && report.final_residual <= 1e-8,
        format!(
            "residual {:.3e} after {} iterations",
            report.final_residual, report.iterations
        ),
    ));

    // Fejer audit on every zero-noise trajectory we just produced plus the
    // scalar problem.
    let affine_ok = deterministic_fejer_check(
        &affine,
        report.trajectory.as_deref().unwrap_or(&[]),
    )
    .unwrap_or(false);
    let scalar_config = SolverConfig::new(
        Algorithm::Sfbf,
        StepSizePolicy::constant(0.5).expect("positive"),
        BatchSchedule::constant(1).expect("m >= 1"),
    )
    .with_stop(StoppingRule {
        residual_tol: 1e-9,
        residual_alpha: 1.0,
        max_iterations: 100,
    })
    .recording();
    let scalar_report =
        run(&scalar, &scalar_config, &Vector::new(vec![0.0])).expect("run completes");
    let scalar_ok = deterministic_fejer_check(
        &scalar,
        scalar_report.trajectory.as_deref().unwrap_or(&[]),
    )
    .unwrap_or(false);
    outcomes.push(CheckOutcome::new(
        "dynamics/fejer-audit",
        affine_ok && scalar_ok,
        format!("affine d=50: {affine_ok}, scalar: {scalar_ok}"),
    ));

    // Residual merit function sanity on the scalar instance.
    let r0 = residual(&scalar, &Vector::new(vec![0.0]), 1.0).expect("closed form");
    let r1 = residual(&scalar, &Vector::new(vec![1.0]), 1.0).expect("closed form");
    outcomes.push(CheckOutcome::new(
        "dynamics/residual-merit",
        r0 == 1.0 && r1 == 0.0,
        format!("r_1(0) = {r0}, r_1(x*) = {r1}"),
    ));
    outcomes
}

/// All suites in order.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let mut outcomes = projection_suite(seed);
    outcomes.extend(oracle_suite(seed));
    outcomes.extend(validation_suite());
    outcomes.extend(dynamics_suite(seed));
    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_suite_passes() {
        for outcome in validation_suite() {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    #[test]
    fn dynamics_suite_passes() {
        for outcome in dynamics_suite(3) {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }
}
