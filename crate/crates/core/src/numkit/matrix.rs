use crate::error::{Error, Result};
use crate::numkit::rng::RngStream;
use crate::numkit::vector::Vector;

/// Dense row-major matrix with immutable dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(
                "matrix dimensions must be >= 1".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.cols, x.len());
        let xs = x.as_slice();
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(xs.iter()) {
                acc += a * b;
            }
            out.push(acc);
        }
        Vector::new(out)
    }

    /// y = A' x, without materialising the transpose.
    pub fn matvec_t(&self, x: &Vector) -> Vector {
        debug_assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            let row = self.row(r);
            for (o, a) in out.iter_mut().zip(row.iter()) {
                *o += a * xr;
            }
        }
        Vector::new(out)
    }

    /// (A + A') / 2
    pub fn symmetrized(&self) -> Matrix {
        debug_assert_eq!(self.rows, self.cols);
        Matrix::from_fn(self.rows, self.cols, |r, c| {
            0.5 * (self.get(r, c) + self.get(c, r))
        })
    }
}

/// Outcome of the power iteration spectral norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const SPECTRAL_NORM_TOL: f64 = 1e-8;
pub const SPECTRAL_NORM_MAX_ITER: usize = 10_000;

/// Largest singular value of `m`, by power iteration on `m' m`.
///
/// Uses a Rayleigh-quotient convergence test on lambda = ||m v||^2 for unit v;
/// the relative change must fall below `tol`. The start vector is drawn from a
/// deterministic stream keyed on the matrix dimensions, so repeated calls on
/// the same matrix agree bit-for-bit.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralNorm> {
    if !m.is_finite() {
        return Err(Error::NonFinite {
            context: "spectral_norm input".into(),
        });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidInput("spectral_norm: tol must be > 0".into()));
    }

    let mut rng = RngStream::new(
        0x5bec_7a11_u64,
        ((m.rows() as u64) << 32) | m.cols() as u64,
    );
    let mut v = crate::numkit::rng::sample_gaussian(&mut rng, m.cols(), 0.0, 1.0)?;
    let nv = v.norm();
    if nv == 0.0 {
        v = Vector::from_elem(m.cols(), (m.cols() as f64).sqrt().recip());
    } else {
        v = v.scale(1.0 / nv);
    }

    let mut lambda_prev = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let w = m.matvec(&v);
        let lambda = w.dot(&w);
        if lambda == 0.0 {
            // v is in the null space; either the matrix is zero or we were
            // unlucky with the start vector. Restart once from a new draw.
            let fresh = crate::numkit::rng::sample_gaussian(&mut rng, m.cols(), 0.0, 1.0)?;
            let n = fresh.norm();
            if n == 0.0 || iterations > 1 {
                return Ok(SpectralNorm {
                    value: 0.0,
                    converged: true,
                    iterations,
                });
            }
            v = fresh.scale(1.0 / n);
            continue;
        }
        if (lambda - lambda_prev).abs() <= tol * lambda {
            return Ok(SpectralNorm {
                value: lambda.sqrt(),
                converged: true,
                iterations,
            });
        }
        lambda_prev = lambda;
        let u = m.matvec_t(&w);
        let un = u.norm();
        if un == 0.0 {
            return Ok(SpectralNorm {
                value: lambda.sqrt(),
                converged: true,
                iterations,
            });
        }
        v = u.scale(1.0 / un);
    }

    Ok(SpectralNorm {
        value: lambda_prev.sqrt().max(0.0),
        converged: false,
        iterations,
    })
}

/// `spectral_norm` with the crate defaults, padded by a 1.01 safety factor if
/// the iteration did not converge. Overestimating L is safe for step-size
/// validation; underestimating is not.
pub fn spectral_norm_safe(m: &Matrix) -> Result<f64> {
    let est = spectral_norm(m, SPECTRAL_NORM_TOL, SPECTRAL_NORM_MAX_ITER)?;
    Ok(if est.converged {
        est.value
    } else {
        est.value * 1.01
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm_is_one() {
        let m = Matrix::identity(3);
        let est = spectral_norm(&m, 1e-8, 10_000).unwrap();
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn diagonal_norm_is_largest_entry() {
        let m = Matrix::from_fn(3, 3, |r, c| if r == c { (r + 1) as f64 } else { 0.0 });
        let est = spectral_norm(&m, 1e-10, 10_000).unwrap();
        assert!(est.converged);
        assert!((est.value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn rotation_is_an_isometry() {
        let m = Matrix::new(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let est = spectral_norm(&m, 1e-10, 10_000).unwrap();
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let m = Matrix::new(2, 2, vec![0.0, f64::NAN, 1.0, 0.0]).unwrap();
        assert!(spectral_norm(&m, 1e-8, 100).is_err());
    }

    #[test]
    fn flags_non_convergence() {
        // The Rayleigh test needs two successive values, so one iteration can
        // never converge on a nonzero matrix.
        let m = Matrix::from_fn(3, 3, |r, c| if r == c { (r + 1) as f64 } else { 0.0 });
        let est = spectral_norm(&m, 1e-10, 1).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 1);
        // The padded helper compensates by over-reporting.
        let padded = spectral_norm_safe(&m).unwrap();
        assert!((padded - 3.0).abs() < 1e-7);
    }

    #[test]
    fn matvec_t_matches_explicit_transpose() {
        let m = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = Vector::new(vec![1.0, -1.0]);
        let direct = m.transpose().matvec(&x);
        let fused = m.matvec_t(&x);
        assert_eq!(direct, fused);
    }
}
