use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numkit::vector::Vector;

/// Seeded, stream-addressable random source.
///
/// A stream is identified by `(seed, stream_id)`; the same pair always
/// reproduces the same sample sequence bit-for-bit, and distinct stream ids
/// give statistically independent streams. Substreams are derived without
/// consuming any state, so e.g. replication r and oracle call k can be mapped
/// to a deterministic stream regardless of execution order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of two values, used for substream ids and seed hashing.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derive the substream tagged `tag`. Pure: the parent state is untouched,
    /// so the derivation tree is deterministic no matter when children are
    /// created or used.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, mix(self.stream_id, tag))
    }

    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

/// `n` i.i.d. draws from N(mean, sd^2). `sd = 0` returns the constant vector.
pub fn sample_gaussian(rng: &mut RngStream, n: usize, mean: f64, sd: f64) -> Result<Vector> {
    if n == 0 {
        return Err(Error::InvalidInput("sample_gaussian: n must be >= 1".into()));
    }
    if sd < 0.0 || !sd.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidInput(
            "sample_gaussian: mean must be finite and sd >= 0".into(),
        ));
    }
    if sd == 0.0 {
        return Ok(Vector::from_elem(n, mean));
    }
    let data = (0..n)
        .map(|_| mean + sd * rng.next_standard_normal())
        .collect();
    Ok(Vector::new(data))
}

/// `n` i.i.d. draws from Uniform(lo, hi).
pub fn sample_uniform(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Result<Vector> {
    if n == 0 {
        return Err(Error::InvalidInput("sample_uniform: n must be >= 1".into()));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidInput(format!(
            "sample_uniform: lo must be < hi, got [{lo}, {hi}]"
        )));
    }
    let data = (0..n).map(|_| rng.next_uniform(lo, hi)).collect();
    Ok(Vector::new(data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sd_returns_constant_vector() {
        let mut rng = RngStream::new(7, 0);
        let v = sample_gaussian(&mut rng, 3, 5.0, 0.0).unwrap();
        assert_eq!(v.as_slice(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn rejects_empty_draws() {
        let mut rng = RngStream::new(7, 0);
        assert!(sample_gaussian(&mut rng, 0, 0.0, 1.0).is_err());
        assert!(sample_uniform(&mut rng, 0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_inverted_uniform_bounds() {
        let mut rng = RngStream::new(7, 0);
        assert!(sample_uniform(&mut rng, 4, 1.0, 1.0).is_err());
        assert!(sample_uniform(&mut rng, 4, 2.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_sample_mean_matches_law_of_large_numbers() {
        let mut rng = RngStream::new(1, 0);
        let v = sample_gaussian(&mut rng, 100_000, 0.0, 1.0).unwrap();
        let mean = v.sum() / v.len() as f64;
        assert!(mean.abs() <= 0.02, "sample mean {mean} out of band");
    }

    #[test]
    fn uniform_sample_mean_and_range() {
        let mut rng = RngStream::new(1, 0);
        let v = sample_uniform(&mut rng, 100_000, 0.0, 1.0).unwrap();
        let mean = v.sum() / v.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "sample mean {mean} out of band");
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn same_stream_replays_bit_identically() {
        let mut a = RngStream::new(42, 9);
        let mut b = RngStream::new(42, 9);
        let va = sample_gaussian(&mut a, 64, 0.0, 1.0).unwrap();
        let vb = sample_gaussian(&mut b, 64, 0.0, 1.0).unwrap();
        assert_eq!(va, vb);
        let ua = sample_uniform(&mut a, 64, -1.0, 1.0).unwrap();
        let ub = sample_uniform(&mut b, 64, -1.0, 1.0).unwrap();
        assert_eq!(ua, ub);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 1);
        let mut b = RngStream::new(42, 2);
        let va = sample_uniform(&mut a, 16, 0.0, 1.0).unwrap();
        let vb = sample_uniform(&mut b, 16, 0.0, 1.0).unwrap();
        assert_ne!(va, vb);
    }

    #[test]
    fn child_derivation_is_pure() {
        let root = RngStream::new(5, 3);
        let c1 = root.child(10);
        let c2 = root.child(10);
        assert_eq!(c1.stream_id(), c2.stream_id());
        assert_ne!(c1.stream_id(), root.child(11).stream_id());
    }
}
