//! Random quadratic fractional programs.
//!
//! The objective is the ratio of a random convex quadratic G to a positive
//! deterministic affine function h, minimised over a box. Ratios of this kind
//! are pseudo-convex, so the gradient operator is pseudo-monotone; per sample
//! the quadratic data (Q, c, q) is perturbed while h stays fixed, which makes
//! the expectation commute with the quotient-rule gradient and yields a
//! closed-form mean operator.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{sample_gaussian, sample_uniform, Matrix, RngStream, Vector};
use crate::oracle::{MeanOperatorFn, SamplerFn, StochasticOracle};
use crate::problems::{Family, ProblemData, ProblemInstance, ProblemMetadata};
use crate::sets::FeasibleSet;

/// Deterministic data of one fractional program instance.
///
/// Objective: G(x)/h(x) with G(x) = x'Qx/2 + c'x + q0 and h(x) = a'x + b,
/// where Q is symmetric PSD and h > 0 on the box.
#[derive(Debug, Clone)]
pub struct FractionalProgramData {
    pub q: Matrix,
    pub c: Vector,
    pub q0: f64,
    pub a: Vector,
    pub b: f64,
    pub noise_sd: f64,
}

impl FractionalProgramData {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn h(&self, x: &Vector) -> f64 {
        self.a.dot(x) + self.b
    }

    pub fn g_mean(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.q.matvec(x)) + self.c.dot(x) + self.q0
    }

    /// Mean objective value G(x)/h(x).
    pub fn objective(&self, x: &Vector) -> f64 {
        self.g_mean(x) / self.h(x)
    }

    /// T(x) = grad(G/h) = ((Qx + c) h - G a) / h^2, by the quotient rule.
    pub fn mean_operator(&self, x: &Vector) -> Vector {
        let h = self.h(x);
        let qx = self.q.matvec(x);
        let g = 0.5 * x.dot(&qx) + self.c.dot(x) + self.q0;
        let grad_g = qx.add(&self.c);
        grad_g.scale(h).sub(&self.a.scale(g)).scale(1.0 / (h * h))
    }

    /// One draw F(x, xi): the quotient-rule gradient with perturbed data
    /// Q + (V + V')/2, c + c1, q0 + q1, V and c1 and q1 Gaussian with the
    /// instance noise level. The matrix V is streamed entry by entry
    /// (row-major), so a sample costs O(d^2) without materialising V.
    pub fn sample_operator(&self, x: &Vector, rng: &mut RngStream) -> Vector {
        let d = self.dim();
        let sd = self.noise_sd;
        let h = self.h(x);
        let qx = self.q.matvec(x);

        // w = V x and wt = V' x accumulated in one pass over the entries of V.
        let mut w = vec![0.0; d];
        let mut wt = vec![0.0; d];
        if sd > 0.0 {
            let xs = x.as_slice();
            for i in 0..d {
                let xi = xs[i];
                for j in 0..d {
                    let v = sd * rng.next_standard_normal();
                    w[i] += v * xs[j];
                    wt[j] += v * xi;
                }
            }
        }
        let w = Vector::new(w);
        let wt = Vector::new(wt);

        let c1 = if sd > 0.0 {
            sample_gaussian(rng, d, 0.0, sd).expect("d >= 1")
        } else {
            Vector::zeros(d)
        };
        let q1 = if sd > 0.0 {
            sd * rng.next_standard_normal()
        } else {
            0.0
        };

        // x'(V + V')x / 2 = x'Vx = <x, w>
        let g = 0.5 * x.dot(&qx) + 0.5 * x.dot(&w) + self.c.dot(x) + c1.dot(x) + self.q0 + q1;
        let grad_g = qx
            .add(&w.add(&wt).scale(0.5))
            .add(&self.c)
            .add(&c1);
        grad_g.scale(h).sub(&self.a.scale(g)).scale(1.0 / (h * h))
    }
}

fn build_oracle(data: &Arc<FractionalProgramData>) -> StochasticOracle {
    let d = data.dim();
    let sampler: SamplerFn = {
        let data = Arc::clone(data);
        Arc::new(move |x, rng| data.sample_operator(x, rng))
    };
    let mean: MeanOperatorFn = {
        let data = Arc::clone(data);
        Arc::new(move |x| data.mean_operator(x))
    };
    StochasticOracle::new(d, sampler).with_mean_operator(mean)
}

/// Wrap explicit fractional data (e.g. a tiny hand-checked instance) into a
/// problem over the given set.
pub fn fractional_from_data(
    data: FractionalProgramData,
    set: FeasibleSet,
    seed: u64,
) -> Result<ProblemInstance> {
    if set.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: set.dim(),
        });
    }
    let data = Arc::new(data);
    let oracle = build_oracle(&data);
    let lipschitz_l = estimate_lipschitz(&data, &set, seed);
    Ok(ProblemInstance {
        dim: data.dim(),
        set,
        oracle,
        lipschitz_l,
        lipschitz_exact: false,
        known_solution: None,
        metadata: ProblemMetadata {
            family: Family::Fractional,
            seed,
            params: vec![
                ("d".into(), data.dim().to_string()),
                ("noise_sd".into(), data.noise_sd.to_string()),
                ("custom".into(), "true".into()),
            ],
        },
        data: ProblemData::Fractional(data),
    })
}

/// No closed form is available for the Lipschitz modulus of the quotient-rule
/// gradient, so sample difference quotients over random feasible pairs and
/// pad by 20%.
fn estimate_lipschitz(data: &FractionalProgramData, set: &FeasibleSet, seed: u64) -> f64 {
    let d = data.dim();
    let mut rng = RngStream::new(seed, 0).child(0xf1);
    let mut best: f64 = 0.0;
    for _ in 0..100 {
        let x = set
            .project(&sample_gaussian(&mut rng, d, 2.0, 3.0).expect("d >= 1"))
            .expect("dims match");
        let y = set
            .project(&sample_gaussian(&mut rng, d, 2.0, 3.0).expect("d >= 1"))
            .expect("dims match");
        let gap = x.dist(&y);
        if gap < 1e-12 {
            continue;
        }
        let ratio = data.mean_operator(&x).dist(&data.mean_operator(&y)) / gap;
        best = best.max(ratio);
    }
    (best * 1.2).max(f64::MIN_POSITIVE)
}

pub fn generate_fractional(d: usize, seed: u64) -> Result<ProblemInstance> {
    generate_fractional_with_noise(d, 0.1, seed)
}

/// Random instance: Q = M'M + I with M uniform on (0,1) entries, a and c
/// uniform on (0,2), q0 uniform on (1,2), b = 1 + 4d, box lower bounds
/// uniform on (0,1) with upper bounds 10 above.
pub fn generate_fractional_with_noise(d: usize, noise_sd: f64, seed: u64) -> Result<ProblemInstance> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if noise_sd < 0.0 {
        return Err(Error::InvalidInput("noise_sd must be >= 0".into()));
    }
    let root = RngStream::new(seed, 0);

    let mut m_rng = root.child(1);
    let m_raw = Matrix::from_fn(d, d, |_, _| m_rng.next_uniform(0.0, 1.0));
    // Q = M'M + I, assembled explicitly; instances stay at desk scale.
    let mut q = Matrix::zeros(d, d);
    for r in 0..d {
        for c in r..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += m_raw.get(k, r) * m_raw.get(k, c);
            }
            if r == c {
                acc += 1.0;
            }
            q.set(r, c, acc);
            q.set(c, r, acc);
        }
    }

    let a = sample_uniform(&mut root.child(2), d, 0.0, 2.0)?;
    let c = sample_uniform(&mut root.child(3), d, 0.0, 2.0)?;
    let q0 = root.child(4).next_uniform(1.0, 2.0);
    let b = 1.0 + 4.0 * d as f64;

    let lo = sample_uniform(&mut root.child(5), d, 0.0, 1.0)?;
    let hi = lo.map(|v| v + 10.0);
    let set = FeasibleSet::box_set(lo, hi)?;

    let data = Arc::new(FractionalProgramData {
        q,
        c,
        q0,
        a,
        b,
        noise_sd,
    });
    let oracle = build_oracle(&data);
    let lipschitz_l = estimate_lipschitz(&data, &set, seed);

    Ok(ProblemInstance {
        dim: d,
        set,
        oracle,
        lipschitz_l,
        lipschitz_exact: false,
        known_solution: None,
        metadata: ProblemMetadata {
            family: Family::Fractional,
            seed,
            params: vec![
                ("d".into(), d.to_string()),
                ("noise_sd".into(), noise_sd.to_string()),
            ],
        },
        data: ProblemData::Fractional(data),
    })
}
