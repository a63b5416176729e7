//! Solver iterations for stochastic variational inequalities.
//!
//! Two methods share the infrastructure here. The forward-backward-forward
//! iteration queries the oracle at X, projects once to get the feasible point
//! Y, queries again at Y, and extrapolates X' = Y + alpha (A - B); the X
//! iterates may leave the feasible set, the Y iterates never do. The
//! extragradient baseline replaces the extrapolation with a second projection,
//! which shrinks the admissible step-size range by a factor sqrt(3) and
//! doubles the projection cost per iteration. Both consume exactly 2 m_{n+1}
//! oracle samples at iteration n.
//!
//! Progress is measured by the natural residual r_a(x) = ||x - P(x - a T(x))||,
//! which vanishes exactly at solutions; a run stops once the residual falls
//! below the configured tolerance or the iteration budget runs out.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::numkit::{RngStream, Vector};
use crate::oracle::MiniBatchEstimator;
use crate::problems::ProblemInstance;
use crate::schedules::{
    validate_step_size_with_factor, BatchSchedule, StepSizePolicy, StepSizeValidation,
    SEG_STEP_FACTOR, SFBF_STEP_FACTOR,
};

/// Iterates whose norm exceeds this abort the run as diverged; the
/// forward-backward-forward X iterates are unconstrained in principle.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Sfbf,
    Seg,
}

impl Algorithm {
    /// Factor f in the admissible step-size bound sup alpha_n < 1/(f L).
    pub fn step_factor(self) -> f64 {
        match self {
            Algorithm::Sfbf => SFBF_STEP_FACTOR,
            Algorithm::Seg => SEG_STEP_FACTOR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sfbf => "sfbf",
            Algorithm::Seg => "seg",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sfbf" | "fbf" => Ok(Algorithm::Sfbf),
            "seg" | "eg" => Ok(Algorithm::Seg),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Residual-threshold stopping with an iteration cap.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    /// Stop once r_alpha(X_n) <= residual_tol.
    pub residual_tol: f64,
    /// The a in the natural residual r_a; the experiments use a = 1.
    pub residual_alpha: f64,
    pub max_iterations: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            residual_tol: 1e-3,
            residual_alpha: 1.0,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub step_policy: StepSizePolicy,
    pub batch_schedule: BatchSchedule,
    pub stop: StoppingRule,
    pub seed: u64,
    pub record_trajectory: bool,
    /// Skip the step-size bound check. The bound is the method's stability
    /// guarantee, so this is opt-in; it is needed for the fractional
    /// experiments where no usable Lipschitz modulus is known.
    pub skip_step_validation: bool,
    /// Evaluate the stopping residual every k-th iteration (>= 1). Recording a
    /// trajectory forces per-iteration evaluation.
    pub residual_check_every: u64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, step_policy: StepSizePolicy, batch: BatchSchedule) -> Self {
        SolverConfig {
            algorithm,
            step_policy,
            batch_schedule: batch,
            stop: StoppingRule::default(),
            seed: 0,
            record_trajectory: false,
            skip_step_validation: false,
            residual_check_every: 1,
        }
    }

    pub fn with_stop(mut self, stop: StoppingRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn unvalidated(mut self) -> Self {
        self.skip_step_validation = true;
        self
    }

    /// Validate the step policy against the problem's Lipschitz modulus using
    /// the bound of the configured algorithm.
    pub fn validate_against(&self, problem: &ProblemInstance) -> Result<StepSizeValidation> {
        validate_step_size_with_factor(
            &self.step_policy,
            problem.lipschitz_l,
            self.algorithm.step_factor(),
        )
    }
}

/// Solver position after n iterations: the (possibly infeasible) iterate X and
/// the last feasible forward-backward point Y.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub n: u64,
    pub x: Vector,
    pub y: Vector,
}

/// One recorded iteration. `residual` is the stopping residual
/// r_{stop.alpha}(X_n); `step_residual` is r_{alpha_n}(X_n), the quantity that
/// enters the per-iteration contraction estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub residual: f64,
    pub step_residual: f64,
    pub distance: Option<f64>,
    pub alpha: f64,
    pub batch: u64,
    pub oracle_calls: u64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub iterations: u64,
    pub final_residual: f64,
    pub oracle_calls: u64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub diverged: bool,
    /// True when stopping residuals had to be estimated from a large surrogate
    /// batch because no closed-form mean operator was available.
    pub residuals_estimated: bool,
    pub trajectory: Option<Vec<TrajectoryPoint>>,
    pub final_x: Vector,
    pub final_y: Vector,
}

fn bits_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

impl RunReport {
    /// Equality of everything except wall-clock measurements.
    pub fn deterministic_eq(&self, other: &RunReport) -> bool {
        if self.algorithm != other.algorithm
            || self.iterations != other.iterations
            || !bits_eq(self.final_residual, other.final_residual)
            || self.oracle_calls != other.oracle_calls
            || self.converged != other.converged
            || self.diverged != other.diverged
            || self.residuals_estimated != other.residuals_estimated
            || self.final_x != other.final_x
            || self.final_y != other.final_y
        {
            return false;
        }
        match (&self.trajectory, &other.trajectory) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b.iter()).all(|(p, q)| {
                        p.n == q.n
                            && bits_eq(p.residual, q.residual)
                            && bits_eq(p.step_residual, q.step_residual)
                            && p.distance.map(f64::to_bits) == q.distance.map(f64::to_bits)
                            && bits_eq(p.alpha, q.alpha)
                            && p.batch == q.batch
                            && p.oracle_calls == q.oracle_calls
                    })
            }
            _ => false,
        }
    }
}

/// Natural residual r_alpha(x) = ||x - P_X(x - alpha T(x))|| with the
/// closed-form mean operator.
pub fn residual(problem: &ProblemInstance, x: &Vector, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "residual: alpha must be > 0, got {alpha}"
        )));
    }
    let t = problem.oracle.mean_operator_eval(x)?;
    residual_with_operator(problem, x, &t, alpha)
}

fn residual_with_operator(
    problem: &ProblemInstance,
    x: &Vector,
    t: &Vector,
    alpha: f64,
) -> Result<f64> {
    let shifted = x.sub(&t.scale(alpha));
    let projected = problem.set.project(&shifted)?;
    let r = x.dist(&projected);
    if !r.is_finite() {
        return Err(Error::NonFinite {
            context: "residual evaluation".into(),
        });
    }
    Ok(r)
}

/// Residual for the run loop: uses the closed-form mean operator when present,
/// otherwise averages a large surrogate batch drawn outside the oracle-call
/// ledger and flags the report.
fn merit_residual(
    problem: &ProblemInstance,
    x: &Vector,
    alpha: f64,
    batch_hint: u64,
    surrogate_rng: &mut RngStream,
    estimated: &mut bool,
) -> Result<f64> {
    if problem.oracle.has_mean_operator() {
        let t = problem.oracle.mean_operator_eval(x)?;
        return residual_with_operator(problem, x, &t, alpha);
    }
    *estimated = true;
    let m = 10_000u64.max(batch_hint.saturating_mul(100));
    let mut acc = Vector::zeros(problem.dim);
    for _ in 0..m {
        acc.axpy(1.0, &problem.oracle.sample(x, surrogate_rng));
    }
    let t = acc.scale(1.0 / m as f64);
    residual_with_operator(problem, x, &t, alpha)
}

fn numeric_guard(v: &Vector, n: u64, context: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric {
            iteration: n,
            context: context.into(),
        })
    }
}

/// One forward-backward-forward update. Two independent substreams of `rng`
/// feed the two oracle queries, realising the independence of xi_{n+1} and
/// eta_{n+1}.
pub fn sfbf_step(
    state: &SolverState,
    problem: &ProblemInstance,
    est: &mut MiniBatchEstimator,
    alpha: f64,
    m: u64,
    rng: &RngStream,
) -> Result<SolverState> {
    let mut xi = rng.child(0);
    let mut eta = rng.child(1);
    let a = est.evaluate_batch(&state.x, m, &mut xi)?;
    let y = problem.set.project(&state.x.sub(&a.scale(alpha)))?;
    let b = est.evaluate_batch(&y, m, &mut eta)?;
    let x_next = y.add(&a.sub(&b).scale(alpha));
    numeric_guard(&x_next, state.n, "sfbf extrapolation")?;
    debug_assert!(problem.set.contains(&y, 1e-9).unwrap_or(false));
    Ok(SolverState {
        n: state.n + 1,
        x: x_next,
        y,
    })
}

/// One extragradient update: two projections, two oracle queries; the X
/// iterate stays feasible.
pub fn seg_step(
    state: &SolverState,
    problem: &ProblemInstance,
    est: &mut MiniBatchEstimator,
    alpha: f64,
    m: u64,
    rng: &RngStream,
) -> Result<SolverState> {
    let mut xi = rng.child(0);
    let mut eta = rng.child(1);
    let a = est.evaluate_batch(&state.x, m, &mut xi)?;
    let y = problem.set.project(&state.x.sub(&a.scale(alpha)))?;
    let b = est.evaluate_batch(&y, m, &mut eta)?;
    let x_next = problem.set.project(&state.x.sub(&b.scale(alpha)))?;
    numeric_guard(&x_next, state.n, "seg projection")?;
    Ok(SolverState {
        n: state.n + 1,
        x: x_next,
        y,
    })
}

/// Run the configured solver from x0 until the stopping rule fires, the
/// iteration budget is spent, or the iterates diverge. Numeric trouble inside
/// the loop is not an error: it produces a partial report flagged `diverged`.
/// The whole run is deterministic given (config.seed, problem data).
pub fn run(problem: &ProblemInstance, config: &SolverConfig, x0: &Vector) -> Result<RunReport> {
    if x0.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            got: x0.len(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::NonFinite {
            context: "starting point".into(),
        });
    }
    if !config.skip_step_validation {
        config.validate_against(problem)?;
    }
    let check_every = config.residual_check_every.max(1);
    let start = Instant::now();

    let mut est = MiniBatchEstimator::new(&problem.oracle);
    let root = RngStream::new(config.seed, 0);
    // Substream reserved for surrogate residual estimation; iteration n uses
    // child(n) and tags never collide with u64::MAX at desk scale.
    let mut surrogate_rng = root.child(u64::MAX);
    let mut residuals_estimated = false;

    let mut state = SolverState {
        n: 0,
        x: x0.clone(),
        y: problem.set.project(x0)?,
    };
    let mut trajectory: Option<Vec<TrajectoryPoint>> =
        if config.record_trajectory { Some(Vec::new()) } else { None };
    let mut converged = false;
    let mut diverged = false;
    let mut final_residual = f64::NAN;

    loop {
        let n = state.n;
        if !state.x.is_finite() || state.x.norm() > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
        let budget_exhausted = n >= config.stop.max_iterations;
        let batch_hint = config.batch_schedule.batch_size_at(n);
        if config.record_trajectory || n.is_multiple_of(check_every) || budget_exhausted {
            match merit_residual(
                problem,
                &state.x,
                config.stop.residual_alpha,
                batch_hint,
                &mut surrogate_rng,
                &mut residuals_estimated,
            ) {
                Ok(r) => {
                    final_residual = r;
                    if r <= config.stop.residual_tol {
                        converged = true;
                        break;
                    }
                }
                Err(_) => {
                    diverged = true;
                    break;
                }
            }
        }
        if budget_exhausted {
            break;
        }

        let alpha = config.step_policy.step_size_at(n);
        let m = batch_hint;
        let row = if let Some(tr) = trajectory.as_mut() {
            // Everything describing X_n is captured before stepping.
            let step_residual = if (config.stop.residual_alpha - alpha).abs() < f64::EPSILON {
                final_residual
            } else {
                merit_residual(
                    problem,
                    &state.x,
                    alpha,
                    m,
                    &mut surrogate_rng,
                    &mut residuals_estimated,
                )
                .unwrap_or(f64::NAN)
            };
            let distance = problem.known_solution.as_ref().map(|xs| state.x.dist(xs));
            Some((tr, step_residual, distance))
        } else {
            None
        };

        let iter_rng = root.child(n);
        let stepped = match config.algorithm {
            Algorithm::Sfbf => sfbf_step(&state, problem, &mut est, alpha, m, &iter_rng),
            Algorithm::Seg => seg_step(&state, problem, &mut est, alpha, m, &iter_rng),
        };
        match stepped {
            Ok(next) => {
                if let Some((tr, step_residual, distance)) = row {
                    tr.push(TrajectoryPoint {
                        n,
                        residual: final_residual,
                        step_residual,
                        distance,
                        alpha,
                        batch: m,
                        oracle_calls: est.call_counter(),
                        elapsed_s: start.elapsed().as_secs_f64(),
                    });
                }
                state = next;
            }
            Err(_) => {
                diverged = true;
                break;
            }
        }
    }

    Ok(RunReport {
        algorithm: config.algorithm,
        iterations: state.n,
        final_residual,
        oracle_calls: est.call_counter(),
        wall_time_s: start.elapsed().as_secs_f64(),
        converged,
        diverged,
        residuals_estimated,
        trajectory,
        final_x: state.x,
        final_y: state.y,
    })
}

/// Audit a zero-noise trajectory against the per-iteration contraction
/// ||X_{n+1} - x*||^2 <= ||X_n - x*||^2 - (rho_n / 2) r_{alpha_n}(X_n)^2,
/// rho_n = 1 - 2 L^2 alpha_n^2, allowing 1e-10 slack. Requires a densely
/// recorded trajectory and a known solution.
pub fn deterministic_fejer_check(
    problem: &ProblemInstance,
    trajectory: &[TrajectoryPoint],
) -> Result<bool> {
    if problem.known_solution.is_none() {
        return Err(Error::Unsupported(
            "Fejer audit needs a problem with a known solution".into(),
        ));
    }
    let l = problem.lipschitz_l;
    for pair in trajectory.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.n != a.n + 1 {
            return Err(Error::InvalidInput(format!(
                "trajectory not densely recorded between n = {} and n = {}",
                a.n, b.n
            )));
        }
        let da = a.distance.ok_or_else(|| {
            Error::Unsupported("trajectory rows carry no distance to the solution".into())
        })?;
        let db = b.distance.ok_or_else(|| {
            Error::Unsupported("trajectory rows carry no distance to the solution".into())
        })?;
        let rho = 1.0 - 2.0 * l * l * a.alpha * a.alpha;
        let bound = da * da - 0.5 * rho * a.step_residual * a.step_residual + 1e-10;
        if db * db > bound {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fixed-order CSV export of a recorded trajectory:
/// n, residual, distance, alpha, batch, cumulative_oracle_calls.
pub fn trajectory_csv(report: &RunReport) -> Result<String> {
    let rows = report.trajectory.as_ref().ok_or_else(|| {
        Error::Unsupported("run was executed without trajectory recording".into())
    })?;
    let mut out = String::from("n,residual,distance,alpha,batch,cumulative_oracle_calls\n");
    for p in rows {
        let distance = p.distance.map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.n, p.residual, distance, p.alpha, p.batch, p.oracle_calls
        ));
    }
    Ok(out)
}
