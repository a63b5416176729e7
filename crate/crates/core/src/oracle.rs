//! Stochastic oracle abstraction: single-sample evaluations F(x, xi), the
//! mini-batch estimator built on top of them, and oracle-call accounting.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{RngStream, Vector};

/// One draw F(x, xi) of the random operator at x.
pub type SamplerFn = Arc<dyn Fn(&Vector, &mut RngStream) -> Vector + Send + Sync>;

/// The exact mean operator T(x) = E[F(x, xi)], when available in closed form.
pub type MeanOperatorFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// A seeded sampler for F(x, xi), optionally paired with its closed-form mean.
#[derive(Clone)]
pub struct StochasticOracle {
    dim: usize,
    sampler: SamplerFn,
    mean_operator: Option<MeanOperatorFn>,
}

impl std::fmt::Debug for StochasticOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StochasticOracle")
            .field("dim", &self.dim)
            .field("mean_operator", &self.mean_operator.is_some())
            .finish()
    }
}

impl StochasticOracle {
    pub fn new(dim: usize, sampler: SamplerFn) -> Self {
        StochasticOracle {
            dim,
            sampler,
            mean_operator: None,
        }
    }

    pub fn with_mean_operator(mut self, mean: MeanOperatorFn) -> Self {
        self.mean_operator = Some(mean);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_mean_operator(&self) -> bool {
        self.mean_operator.is_some()
    }

    /// One draw of F(x, xi) from the given stream.
    pub fn sample(&self, x: &Vector, rng: &mut RngStream) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        (self.sampler)(x, rng)
    }

    /// T(x), erroring when no closed form was supplied.
    pub fn mean_operator_eval(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        match &self.mean_operator {
            Some(f) => Ok(f(x)),
            None => Err(Error::Unsupported(
                "oracle has no closed-form mean operator".into(),
            )),
        }
    }
}

/// Mini-batch averaging over a stochastic oracle, counting every single-sample
/// evaluation. The counter increases by exactly m per batch of size m.
#[derive(Debug)]
pub struct MiniBatchEstimator<'a> {
    oracle: &'a StochasticOracle,
    call_counter: u64,
}

impl<'a> MiniBatchEstimator<'a> {
    pub fn new(oracle: &'a StochasticOracle) -> Self {
        MiniBatchEstimator {
            oracle,
            call_counter: 0,
        }
    }

    pub fn oracle(&self) -> &StochasticOracle {
        self.oracle
    }

    /// Number of single-sample evaluations performed so far.
    pub fn call_counter(&self) -> u64 {
        self.call_counter
    }

    /// (1/m) sum of m fresh i.i.d. draws of F(x, xi).
    pub fn evaluate_batch(&mut self, x: &Vector, m: u64, rng: &mut RngStream) -> Result<Vector> {
        if m == 0 {
            return Err(Error::InvalidInput("batch size must be >= 1".into()));
        }
        if x.len() != self.oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.oracle.dim(),
                got: x.len(),
            });
        }
        let mut acc = Vector::zeros(self.oracle.dim());
        for _ in 0..m {
            let draw = self.oracle.sample(x, rng);
            acc.axpy(1.0, &draw);
        }
        self.call_counter += m;
        let out = acc.scale(1.0 / m as f64);
        if !out.is_finite() {
            return Err(Error::NonFinite {
                context: format!("mini-batch estimate at x = {:?}", x.as_slice()),
            });
        }
        Ok(out)
    }

    /// Mean squared error of the batch estimator against T(x), over `reps`
    /// independent batches of size m.
    pub fn empirical_mse(
        &mut self,
        x: &Vector,
        m: u64,
        reps: u64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        if reps == 0 {
            return Err(Error::InvalidInput("reps must be >= 1".into()));
        }
        let target = self.oracle.mean_operator_eval(x)?;
        let mut acc = 0.0;
        for _ in 0..reps {
            let est = self.evaluate_batch(x, m, rng)?;
            acc += est.dist(&target).powi(2);
        }
        Ok(acc / reps as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn affine_oracle(noise_sd: f64) -> StochasticOracle {
        // F(x, xi) = (x - 1) + noise
        let sampler: SamplerFn = Arc::new(move |x, rng| {
            let mut out = x.map(|v| v - 1.0);
            if noise_sd > 0.0 {
                for i in 0..out.len() {
                    out[i] += noise_sd * rng.next_standard_normal();
                }
            }
            out
        });
        StochasticOracle::new(1, sampler)
            .with_mean_operator(Arc::new(|x: &Vector| x.map(|v| v - 1.0)))
    }

    #[test]
    fn batch_of_fixed_sequence_is_arithmetic_mean() {
        let counter = Arc::new(AtomicUsize::new(0));
        let c = counter.clone();
        let sampler: SamplerFn = Arc::new(move |_x, _rng| {
            let k = c.fetch_add(1, Ordering::SeqCst);
            Vector::new(vec![(k % 3 + 1) as f64])
        });
        let oracle = StochasticOracle::new(1, sampler);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(0, 0);
        let out = est
            .evaluate_batch(&Vector::zeros(1), 3, &mut rng)
            .unwrap();
        assert_eq!(out.as_slice(), &[2.0]);
        assert_eq!(est.call_counter(), 3);
    }

    #[test]
    fn zero_noise_batch_equals_mean_operator() {
        let oracle = affine_oracle(0.0);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(3, 0);
        let x = Vector::new(vec![0.0]);
        for m in [1, 2, 5, 17] {
            let out = est.evaluate_batch(&x, m, &mut rng).unwrap();
            assert_eq!(out.as_slice(), &[-1.0]);
        }
        assert_eq!(est.call_counter(), 25);
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        let oracle = affine_oracle(0.0);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(3, 0);
        assert!(est.evaluate_batch(&Vector::zeros(1), 0, &mut rng).is_err());
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let sampler: SamplerFn = Arc::new(|_x, _rng| Vector::new(vec![f64::NAN]));
        let oracle = StochasticOracle::new(1, sampler);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(3, 0);
        let err = est
            .evaluate_batch(&Vector::zeros(1), 2, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn large_batch_concentrates_at_five_sigma() {
        // T(x) = x at x = 0 with additive N(0,1) noise: |estimate| <= 5/sqrt(m).
        let sampler: SamplerFn =
            Arc::new(|x, rng| Vector::new(vec![x[0] + rng.next_standard_normal()]));
        let oracle = StochasticOracle::new(1, sampler);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(17, 0);
        let out = est
            .evaluate_batch(&Vector::zeros(1), 10_000, &mut rng)
            .unwrap();
        assert!(out[0].abs() <= 0.05, "estimate {} beyond 5 sigma", out[0]);
    }

    #[test]
    fn mse_scales_inversely_with_batch_size() {
        let oracle = affine_oracle(1.0);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(23, 0);
        let x = Vector::new(vec![0.0]);
        let mse1 = est.empirical_mse(&x, 1, 100_000, &mut rng).unwrap();
        assert!((0.97..=1.03).contains(&mse1), "mse(m=1) = {mse1}");
        let mse4 = est.empirical_mse(&x, 4, 100_000, &mut rng).unwrap();
        assert!((0.24..=0.26).contains(&mse4), "mse(m=4) = {mse4}");
    }

    #[test]
    fn zero_noise_mse_is_zero() {
        let oracle = affine_oracle(0.0);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(23, 0);
        let mse = est
            .empirical_mse(&Vector::new(vec![2.0]), 3, 10, &mut rng)
            .unwrap();
        assert_eq!(mse, 0.0);
    }

    #[test]
    fn mse_requires_mean_operator() {
        let sampler: SamplerFn = Arc::new(|x, _| x.clone());
        let oracle = StochasticOracle::new(1, sampler);
        let mut est = MiniBatchEstimator::new(&oracle);
        let mut rng = RngStream::new(23, 0);
        let err = est
            .empirical_mse(&Vector::zeros(1), 1, 1, &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn mean_operator_eval_affine() {
        let oracle = affine_oracle(0.5);
        let t = oracle.mean_operator_eval(&Vector::zeros(1)).unwrap();
        assert_eq!(t.as_slice(), &[-1.0]);
    }
}
