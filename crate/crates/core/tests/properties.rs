//! Property tests over randomised inputs: stream reproducibility, spectral
//! norm identities, projection geometry, and schedule invariants.

use proptest::prelude::*;

use svikit::numkit::{sample_gaussian, sample_uniform, spectral_norm, Matrix, RngStream, Vector};
use svikit::schedules::{validate_step_size, BatchSchedule, StepSizePolicy};
use svikit::sets::FeasibleSet;

fn small_matrix(dim: usize, seed: u64) -> Matrix {
    let mut rng = RngStream::new(seed, 3);
    Matrix::from_fn(dim, dim, |_, _| rng.next_uniform(-1.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rng_streams_replay_bit_identically(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RngStream::new(seed, stream);
        let mut b = RngStream::new(seed, stream);
        let ga = sample_gaussian(&mut a, 32, 0.5, 2.0).unwrap();
        let gb = sample_gaussian(&mut b, 32, 0.5, 2.0).unwrap();
        prop_assert_eq!(ga, gb);
        let ua = sample_uniform(&mut a, 32, -3.0, 4.0).unwrap();
        let ub = sample_uniform(&mut b, 32, -3.0, 4.0).unwrap();
        prop_assert_eq!(ua, ub);
    }

    #[test]
    fn spectral_norm_scales_homogeneously(seed in 0u64..500, dim in 1usize..8) {
        let m = small_matrix(dim, seed);
        let tol = 1e-9;
        let base = spectral_norm(&m, tol, 10_000).unwrap().value;
        for factor in [-2.0, 0.5, 3.0] {
            let scaled = spectral_norm(&m.scale(factor), tol, 10_000).unwrap().value;
            prop_assert!(
                (scaled - factor.abs() * base).abs() <= 10.0 * tol * (1.0 + base),
                "|{factor}| * {base} vs {scaled}"
            );
        }
    }

    #[test]
    fn spectral_norm_is_transpose_invariant(seed in 0u64..500, dim in 1usize..8) {
        let m = small_matrix(dim, seed);
        let tol = 1e-9;
        let a = spectral_norm(&m, tol, 10_000).unwrap().value;
        let b = spectral_norm(&m.transpose(), tol, 10_000).unwrap().value;
        prop_assert!((a - b).abs() <= 10.0 * tol * (1.0 + a));
    }

    #[test]
    fn projections_are_idempotent_and_nonexpansive(
        xs in prop::collection::vec(-50.0f64..50.0, 4),
        ys in prop::collection::vec(-50.0f64..50.0, 4),
    ) {
        let sets = [
            FeasibleSet::box_set(Vector::from_elem(4, -1.0), Vector::from_elem(4, 3.0)).unwrap(),
            FeasibleSet::nonnegative_orthant(4).unwrap(),
            FeasibleSet::whole_space(4).unwrap(),
        ];
        let x = Vector::new(xs);
        let y = Vector::new(ys);
        for set in &sets {
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            prop_assert_eq!(set.project(&px).unwrap(), px.clone());
            prop_assert!(px.dist(&py) <= x.dist(&y) + 1e-12);
            prop_assert!(set.contains(&px, 1e-12).unwrap());
        }
    }

    #[test]
    fn batch_schedules_stay_positive_and_nondecreasing(
        d in 1u64..500,
        c in 0.1f64..5.0,
        n0 in 2u64..10,
        a in 0.1f64..2.0,
    ) {
        let rules = [
            BatchSchedule::experiment_rule(d).unwrap(),
            BatchSchedule::poly_log(c, n0, a, -1.0).unwrap(),
            BatchSchedule::poly_log(c, n0, a, 0.5).unwrap(),
        ];
        for rule in &rules {
            let mut prev = 0;
            for n in 0..2000 {
                let m = rule.batch_size_at(n);
                prop_assert!(m >= 1);
                prop_assert!(m >= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn step_size_acceptance_is_exactly_a_positive_margin(
        alpha in 0.01f64..2.0,
        lipschitz in 0.1f64..5.0,
    ) {
        let policy = StepSizePolicy::constant(alpha).unwrap();
        let rho = 1.0 - 2.0 * lipschitz * lipschitz * alpha * alpha;
        match validate_step_size(&policy, lipschitz) {
            Ok(v) => {
                prop_assert!(rho > 0.0);
                prop_assert!((v.rho_lower - rho).abs() < 1e-12);
            }
            Err(_) => prop_assert!(rho <= 0.0),
        }
    }
}
