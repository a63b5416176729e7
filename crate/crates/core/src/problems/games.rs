//! Random bimatrix games in linear-complementarity form.
//!
//! A game (U_I, U_II) is embedded as the affine operator T(x) = 1 + M x over
//! the nonnegative orthant, with M the block matrix [[0, -U_I], [-U_II', 0]].
//! Nonzero complementarity points recover mixed equilibria by normalising the
//! two blocks; x = 0 is the artificial equilibrium and always solves the
//! complementarity problem.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numkit::{spectral_norm_safe, Matrix, RngStream, Vector};
use crate::oracle::{MeanOperatorFn, SamplerFn, StochasticOracle};
use crate::problems::{Family, ProblemData, ProblemInstance, ProblemMetadata};
use crate::sets::FeasibleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameKind {
    ZeroSum,
    Symmetric,
    Asymmetric,
}

impl GameKind {
    pub fn family(self) -> Family {
        match self {
            GameKind::ZeroSum => Family::ZeroSum,
            GameKind::Symmetric => Family::Symmetric,
            GameKind::Asymmetric => Family::Asymmetric,
        }
    }
}

/// Payoff matrices and the assembled complementarity operator matrix.
/// Both payoff matrices are stored in the row-player orientation (n_I x n_II).
#[derive(Debug, Clone)]
pub struct BimatrixGameData {
    pub u_i: Matrix,
    pub u_ii: Matrix,
    pub kind: GameKind,
    pub m: Matrix,
    pub noise_sd: f64,
}

impl BimatrixGameData {
    pub fn n_i(&self) -> usize {
        self.u_i.rows()
    }

    pub fn n_ii(&self) -> usize {
        self.u_i.cols()
    }

    pub fn dim(&self) -> usize {
        self.n_i() + self.n_ii()
    }

    /// T(x) = 1 + M x.
    pub fn mean_operator(&self, x: &Vector) -> Vector {
        let mut out = self.m.matvec(x);
        for i in 0..out.len() {
            out[i] += 1.0;
        }
        out
    }

    /// One draw F(x, xi) = 1 + (M + V) x with V Gaussian; the constant block
    /// vector is left unperturbed. V is streamed without being materialised.
    pub fn sample_operator(&self, x: &Vector, rng: &mut RngStream) -> Vector {
        let mut out = self.mean_operator(x);
        let sd = self.noise_sd;
        if sd > 0.0 {
            let d = self.dim();
            let xs = x.as_slice();
            for i in 0..d {
                let mut acc = 0.0;
                for &xj in xs {
                    acc += rng.next_standard_normal() * xj;
                }
                out[i] += sd * acc;
            }
        }
        out
    }
}

/// M = [[0, -U_I], [-U_II', 0]] of size (n_I + n_II)^2.
pub fn block_game_matrix(u_i: &Matrix, u_ii: &Matrix) -> Matrix {
    let (n_i, n_ii) = (u_i.rows(), u_i.cols());
    debug_assert_eq!((u_ii.rows(), u_ii.cols()), (n_i, n_ii));
    let d = n_i + n_ii;
    Matrix::from_fn(d, d, |r, c| {
        if r < n_i && c >= n_i {
            -u_i.get(r, c - n_i)
        } else if r >= n_i && c < n_i {
            -u_ii.get(c, r - n_i)
        } else {
            0.0
        }
    })
}

pub fn generate_game(
    n_i: usize,
    n_ii: usize,
    kind: GameKind,
    seed: u64,
) -> Result<ProblemInstance> {
    generate_game_with_noise(n_i, n_ii, kind, 0.1, seed)
}

/// Random game with Uniform(0,1) payoff entries.
///
/// zero_sum: U_II = -U_I, which makes M skew-symmetric (<Mx, x> = 0 for all
/// x); symmetric: U_I is a symmetrised uniform draw with U_II = U_I';
/// asymmetric: independent draws.
pub fn generate_game_with_noise(
    n_i: usize,
    n_ii: usize,
    kind: GameKind,
    noise_sd: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if n_i == 0 || n_ii == 0 {
        return Err(Error::InvalidInput(
            "strategy counts must be >= 1".into(),
        ));
    }
    if kind == GameKind::Symmetric && n_i != n_ii {
        return Err(Error::InvalidInput(format!(
            "symmetric games need n_I = n_II, got {n_i} and {n_ii}"
        )));
    }
    if noise_sd < 0.0 {
        return Err(Error::InvalidInput("noise_sd must be >= 0".into()));
    }
    let root = RngStream::new(seed, 0);
    let mut rng_i = root.child(1);
    let (u_i, u_ii) = match kind {
        GameKind::ZeroSum => {
            let u = Matrix::from_fn(n_i, n_ii, |_, _| rng_i.next_uniform(0.0, 1.0));
            let neg = u.scale(-1.0);
            (u, neg)
        }
        GameKind::Symmetric => {
            let raw = Matrix::from_fn(n_i, n_i, |_, _| rng_i.next_uniform(0.0, 1.0));
            // Averaging two Uniform(0,1) draws keeps entries inside (0,1).
            let u = raw.symmetrized();
            let ut = u.transpose();
            (u, ut)
        }
        GameKind::Asymmetric => {
            let u = Matrix::from_fn(n_i, n_ii, |_, _| rng_i.next_uniform(0.0, 1.0));
            let mut rng_ii = root.child(2);
            let w = Matrix::from_fn(n_i, n_ii, |_, _| rng_ii.next_uniform(0.0, 1.0));
            (u, w)
        }
    };
    // Zero-sum pairs give a skew-symmetric M, on which 1 + Mx contracts under
    // both iterations. For symmetric and asymmetric draws the positive payoff
    // blocks put a feasible real eigendirection (the Perron vector) into M's
    // negative spectrum, and the iteration grows by 1 + aL + a^2 L^2 per step
    // along it, which no orthant projection can clip; those instances
    // therefore run on the sign-flipped operator, which contracts onto the
    // complementarity solution at the origin.
    let m = match kind {
        GameKind::ZeroSum => block_game_matrix(&u_i, &u_ii),
        GameKind::Symmetric | GameKind::Asymmetric => {
            block_game_matrix(&u_i, &u_ii).scale(-1.0)
        }
    };
    let data = BimatrixGameData {
        u_i,
        u_ii,
        kind,
        m,
        noise_sd,
    };
    game_problem_from_data(data, seed)
}

/// Wrap explicit game data (e.g. a hand-built 2x2 game) into a problem over
/// the nonnegative orthant.
pub fn game_problem_from_data(data: BimatrixGameData, seed: u64) -> Result<ProblemInstance> {
    let lipschitz_l = spectral_norm_safe(&data.m)?;
    let (n_i, n_ii, noise_sd) = (data.n_i(), data.n_ii(), data.noise_sd);
    let kind = data.kind;
    let data = Arc::new(data);
    let d = data.dim();

    let sampler: SamplerFn = {
        let data = Arc::clone(&data);
        Arc::new(move |x, rng| data.sample_operator(x, rng))
    };
    let mean: MeanOperatorFn = {
        let data = Arc::clone(&data);
        Arc::new(move |x| data.mean_operator(x))
    };
    let oracle = StochasticOracle::new(d, sampler).with_mean_operator(mean);

    Ok(ProblemInstance {
        dim: d,
        set: FeasibleSet::nonnegative_orthant(d)?,
        oracle,
        lipschitz_l,
        lipschitz_exact: true,
        known_solution: None,
        metadata: ProblemMetadata {
            family: kind.family(),
            seed,
            params: vec![
                ("n_i".into(), n_i.to_string()),
                ("n_ii".into(), n_ii.to_string()),
                ("noise_sd".into(), noise_sd.to_string()),
            ],
        },
        data: ProblemData::Game(data),
    })
}

/// Matching pennies in the positive constant-sum encoding: player I has
/// payoff matrix I (wants to match), player II has J - I (wants to mismatch).
/// Shifting one player's payoffs by a constant preserves the equilibria of the
/// zero-sum game while keeping both matrices nonnegative, which the
/// complementarity embedding requires. The unique equilibrium is
/// p = q = (1/2, 1/2) with value 1/2, so x = (1, 1, 1, 1) is the nonzero
/// complementarity point.
pub fn matching_pennies_game() -> BimatrixGameData {
    let u_i = Matrix::identity(2);
    let u_ii = Matrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).expect("static data");
    let m = block_game_matrix(&u_i, &u_ii);
    BimatrixGameData {
        u_i,
        u_ii,
        kind: GameKind::Asymmetric,
        m,
        noise_sd: 0.0,
    }
}

/// Mixed strategies and payoff scalars recovered from a nonzero
/// complementarity point.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumProfile {
    pub p: Vector,
    pub q: Vector,
    pub v: f64,
    pub u: f64,
}

/// v = 1/sum(x_1), u = 1/sum(x_2), p = v x_1, q = u x_2, renormalised onto the
/// simplices. Fails when a block sum is at or below `tol`: that is the
/// artificial equilibrium, which carries no strategy information.
pub fn recover_equilibrium(
    game: &BimatrixGameData,
    x: &Vector,
    tol: f64,
) -> Result<EquilibriumProfile> {
    let (n_i, n_ii) = (game.n_i(), game.n_ii());
    if x.len() != n_i + n_ii {
        return Err(Error::DimensionMismatch {
            expected: n_i + n_ii,
            got: x.len(),
        });
    }
    let x1 = Vector::new(x.as_slice()[..n_i].to_vec());
    let x2 = Vector::new(x.as_slice()[n_i..].to_vec());
    let (s1, s2) = (x1.sum(), x2.sum());
    if s1 <= tol || s2 <= tol {
        return Err(Error::DegenerateSolution(format!(
            "block sums ({s1}, {s2}) within {tol} of the artificial equilibrium x = 0"
        )));
    }
    let v = 1.0 / s1;
    let u = 1.0 / s2;
    let mut p = x1.scale(v).map(|t| t.max(0.0));
    let mut q = x2.scale(u).map(|t| t.max(0.0));
    p = p.scale(1.0 / p.sum());
    q = q.scale(1.0 / q.sum());
    Ok(EquilibriumProfile { p, q, v, u })
}

/// Approximate complementarity test: x >= -tol, T(x) >= -tol, and
/// |<x, T(x)>| <= tol (1 + ||x||).
pub fn verify_complementarity(game: &BimatrixGameData, x: &Vector, tol: f64) -> bool {
    if x.len() != game.dim() {
        return false;
    }
    if x.iter().any(|&v| v < -tol) {
        return false;
    }
    let t = game.mean_operator(x);
    if t.iter().any(|&v| v < -tol) {
        return false;
    }
    x.dot(&t).abs() <= tol * (1.0 + x.norm())
}
