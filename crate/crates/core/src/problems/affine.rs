//! Closed-form affine test problems T(x) = A (x - x*), with the solution x*
//! known by construction. Used for oracle-equivalence checks, the hand-traced
//! solver examples, and the deterministic Fejer audits.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{sample_gaussian, sample_uniform, spectral_norm_safe, Matrix, RngStream, Vector};
use crate::oracle::{MeanOperatorFn, SamplerFn, StochasticOracle};
use crate::problems::{Family, ProblemData, ProblemInstance, ProblemMetadata};
use crate::sets::FeasibleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffineSetKind {
    Box,
    Orthant,
    WholeSpace,
}

impl AffineSetKind {
    pub fn name(self) -> &'static str {
        match self {
            AffineSetKind::Box => "box",
            AffineSetKind::Orthant => "orthant",
            AffineSetKind::WholeSpace => "whole",
        }
    }
}

impl std::str::FromStr for AffineSetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "box" => Ok(AffineSetKind::Box),
            "orthant" => Ok(AffineSetKind::Orthant),
            "whole" => Ok(AffineSetKind::WholeSpace),
            other => Err(Error::Config(format!("unknown affine set kind '{other}'"))),
        }
    }
}

/// Default affine benchmark: strongly monotone instances live on a box,
/// skew (pseudo-monotone, null quadratic form) instances on the whole space.
pub fn affine_test_problem(d: usize, strong: bool, seed: u64) -> ProblemInstance {
    let set_kind = if strong {
        AffineSetKind::Box
    } else {
        AffineSetKind::WholeSpace
    };
    affine_problem(d, strong, set_kind, 0.0, seed)
}

/// T(x) = A (x - x*) with x* feasible and recorded as the known solution.
/// `strong` selects A = S'S + I (strongly monotone); otherwise A = R - R'
/// (skew-symmetric). Optional additive Gaussian noise of level `noise_sd`.
pub fn affine_problem(
    d: usize,
    strong: bool,
    set_kind: AffineSetKind,
    noise_sd: f64,
    seed: u64,
) -> ProblemInstance {
    assert!(d >= 1, "dimension must be >= 1");
    let root = RngStream::new(seed, 0);
    let mut mat_rng = root.child(1);
    let a = if strong {
        // Entries scaled by 1/sqrt(d) keep the condition number modest, so the
        // zero-noise benchmark converges well inside its iteration budget.
        let scale = 1.0 / (d as f64).sqrt();
        let s = Matrix::from_fn(d, d, |_, _| scale * mat_rng.next_uniform(0.0, 1.0));
        let mut a = Matrix::zeros(d, d);
        for r in 0..d {
            for c in r..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += s.get(k, r) * s.get(k, c);
                }
                if r == c {
                    acc += 1.0;
                }
                a.set(r, c, acc);
                a.set(c, r, acc);
            }
        }
        a
    } else {
        let r = Matrix::from_fn(d, d, |_, _| mat_rng.next_uniform(0.0, 1.0));
        let rt = r.transpose();
        r.add(&rt.scale(-1.0))
    };

    let mut sol_rng = root.child(2);
    let (set, x_star) = match set_kind {
        AffineSetKind::Box => {
            let set = FeasibleSet::box_set(Vector::zeros(d), Vector::from_elem(d, 10.0))
                .expect("static bounds");
            let x = sample_uniform(&mut sol_rng, d, 1.0, 5.0).expect("d >= 1");
            (set, x)
        }
        AffineSetKind::Orthant => {
            let set = FeasibleSet::nonnegative_orthant(d).expect("d >= 1");
            let x = sample_uniform(&mut sol_rng, d, 0.5, 2.0).expect("d >= 1");
            (set, x)
        }
        AffineSetKind::WholeSpace => {
            let set = FeasibleSet::whole_space(d).expect("d >= 1");
            let x = sample_uniform(&mut sol_rng, d, -2.0, 2.0).expect("d >= 1");
            (set, x)
        }
    };

    build_affine(a, x_star, set, noise_sd, seed, strong, set_kind.name())
}

/// Build an affine instance from explicit parts; the metadata is labelled
/// `custom` and such instances are not regenerable from their description.
pub fn affine_from_parts(
    a: Matrix,
    x_star: Vector,
    set: FeasibleSet,
    noise_sd: f64,
) -> ProblemInstance {
    build_affine(a, x_star, set, noise_sd, 0, false, "custom")
}

fn build_affine(
    a: Matrix,
    x_star: Vector,
    set: FeasibleSet,
    noise_sd: f64,
    seed: u64,
    strong: bool,
    set_label: &str,
) -> ProblemInstance {
    let d = x_star.len();
    assert_eq!(a.rows(), d);
    assert_eq!(a.cols(), d);
    assert_eq!(set.dim(), d);
    let lipschitz_l = spectral_norm_safe(&a).expect("finite matrix");

    let mat = Arc::new(a);
    let sol = Arc::new(x_star);
    let mean: MeanOperatorFn = {
        let mat = Arc::clone(&mat);
        let sol = Arc::clone(&sol);
        Arc::new(move |x: &Vector| mat.matvec(&x.sub(&sol)))
    };
    let sampler: SamplerFn = {
        let mean = mean.clone();
        Arc::new(move |x: &Vector, rng: &mut RngStream| {
            let mut out = mean(x);
            if noise_sd > 0.0 {
                let noise = sample_gaussian(rng, out.len(), 0.0, noise_sd).expect("d >= 1");
                out.axpy(1.0, &noise);
            }
            out
        })
    };
    let oracle = StochasticOracle::new(d, sampler).with_mean_operator(mean);

    ProblemInstance {
        dim: d,
        set,
        oracle,
        lipschitz_l,
        lipschitz_exact: true,
        known_solution: Some((*sol).clone()),
        metadata: ProblemMetadata {
            family: Family::Affine,
            seed,
            params: vec![
                ("d".into(), d.to_string()),
                ("strong".into(), strong.to_string()),
                ("set".into(), set_label.to_string()),
                ("noise_sd".into(), noise_sd.to_string()),
            ],
        },
        data: ProblemData::Generic,
    }
}

/// The 1-D problem T(x) = x - 1 on [0, inf), solution x* = 1. This is the
/// hand-traceable instance behind the worked solver examples.
pub fn unit_scalar_problem() -> ProblemInstance {
    affine_from_parts(
        Matrix::identity(1),
        Vector::new(vec![1.0]),
        FeasibleSet::nonnegative_orthant(1).expect("d = 1"),
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_solution_has_zero_operator_value() {
        for strong in [true, false] {
            let p = affine_test_problem(6, strong, 3);
            let xs = p.known_solution.clone().unwrap();
            let t = p.oracle.mean_operator_eval(&xs).unwrap();
            assert!(t.norm() < 1e-12);
            assert!(p.set.contains(&xs, 0.0).unwrap());
        }
    }

    #[test]
    fn skew_variant_has_null_quadratic_form() {
        let p = affine_test_problem(8, false, 11);
        let xs = p.known_solution.clone().unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let z = sample_gaussian(&mut rng, 8, 0.0, 1.0).unwrap();
            let t = p.oracle.mean_operator_eval(&z).unwrap();
            let q = t.dot(&z.sub(&xs)).abs();
            assert!(q <= 1e-9 * (1.0 + z.dot(&z)), "quadratic form {q}");
        }
    }

    #[test]
    fn noisy_samples_average_to_the_mean_operator() {
        let p = affine_problem(3, true, AffineSetKind::Box, 0.5, 9);
        let x = Vector::new(vec![0.5, 1.5, 2.5]);
        let t = p.oracle.mean_operator_eval(&x).unwrap();
        let mut rng = RngStream::new(13, 0);
        let mut acc = Vector::zeros(3);
        let n = 20_000;
        for _ in 0..n {
            acc.axpy(1.0, &p.oracle.sample(&x, &mut rng));
        }
        let avg = acc.scale(1.0 / n as f64);
        // se per coordinate = 0.5 / sqrt(n)
        assert!(avg.dist(&t) <= 5.0 * 0.5 / (n as f64).sqrt() * (3.0f64).sqrt());
    }

    #[test]
    fn zero_noise_runs_converge_to_the_known_solution() {
        use crate::schedules::{BatchSchedule, StepSizePolicy, SFBF_STEP_FACTOR};
        use crate::solvers::{run, Algorithm, SolverConfig, StoppingRule};

        let p = affine_test_problem(5, true, 17);
        let xs = p.known_solution.clone().unwrap();
        let alpha = 0.5 / (SFBF_STEP_FACTOR * p.lipschitz_l);
        let mut x0 = xs.clone();
        x0[0] += 1.0; // x* + e1

        // Independent oracle: iterate the recursion directly on raw slices.
        let a = {
            // rebuild A by probing the mean operator column by column
            let d = 5;
            let mut cols = Vec::new();
            for j in 0..d {
                let mut e = xs.clone();
                e[j] += 1.0;
                cols.push(p.oracle.mean_operator_eval(&e).unwrap());
            }
            cols
        };
        let apply = |z: &[f64]| -> Vec<f64> {
            // A (x - x*) with A given by its probed columns
            (0..5)
                .map(|i| (0..5).map(|j| a[j][i] * z[j]).sum())
                .collect()
        };
        let clamp = |v: f64| v.clamp(0.0, 10.0);
        let mut x: Vec<f64> = x0.as_slice().to_vec();
        for _ in 0..20_000 {
            let z: Vec<f64> = x.iter().zip(xs.iter()).map(|(xi, s)| xi - s).collect();
            let tx = apply(&z);
            let y: Vec<f64> = x
                .iter()
                .zip(tx.iter())
                .map(|(xi, t)| clamp(xi - alpha * t))
                .collect();
            let zy: Vec<f64> = y.iter().zip(xs.iter()).map(|(yi, s)| yi - s).collect();
            let ty = apply(&zy);
            x = y
                .iter()
                .zip(tx.iter().zip(ty.iter()))
                .map(|(yi, (t1, t2))| yi + alpha * (t1 - t2))
                .collect();
        }
        let brute_gap: f64 = x
            .iter()
            .zip(xs.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(brute_gap <= 1e-6, "oracle iteration stalled at {brute_gap}");

        let config = SolverConfig::new(
            Algorithm::Sfbf,
            StepSizePolicy::constant(alpha).unwrap(),
            BatchSchedule::constant(1).unwrap(),
        )
        .with_stop(StoppingRule {
            residual_tol: 1e-8,
            residual_alpha: 1.0,
            max_iterations: 20_000,
        });
        let report = run(&p, &config, &x0).unwrap();
        assert!(report.converged);
        assert!(report.final_x.dist(&xs) <= 1e-6);
    }

    #[test]
    fn scalar_problem_matches_hand_values() {
        let p = unit_scalar_problem();
        let t = p.oracle.mean_operator_eval(&Vector::new(vec![0.0])).unwrap();
        assert_eq!(t.as_slice(), &[-1.0]);
        assert_eq!(p.lipschitz_l, 1.0);
    }

    #[test]
    fn generated_instances_round_trip_through_their_description() {
        let p = affine_problem(4, true, AffineSetKind::Orthant, 0.3, 8);
        let again = crate::problems::from_description(&p.describe()).unwrap();
        assert_eq!(p.known_solution, again.known_solution);
        assert_eq!(p.lipschitz_l, again.lipschitz_l);
        assert_eq!(p.set, again.set);
    }
}
