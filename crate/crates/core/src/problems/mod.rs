//! Problem generators: random quadratic fractional programs, random bimatrix
//! games in complementarity form, and closed-form affine test problems.

pub mod affine;
pub mod fractional;
pub mod games;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;
use crate::numkit::Vector;
use crate::sets::FeasibleSet;

pub use affine::{
    affine_from_parts, affine_problem, affine_test_problem, unit_scalar_problem, AffineSetKind,
};
pub use fractional::{
    fractional_from_data, generate_fractional, generate_fractional_with_noise,
    FractionalProgramData,
};
pub use games::{
    block_game_matrix, game_problem_from_data, generate_game, generate_game_with_noise,
    matching_pennies_game, recover_equilibrium, verify_complementarity, BimatrixGameData,
    EquilibriumProfile, GameKind,
};

/// Problem family tag carried in metadata and used by the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Fractional,
    ZeroSum,
    Symmetric,
    Asymmetric,
    Affine,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Fractional => "fractional",
            Family::ZeroSum => "zero_sum",
            Family::Symmetric => "symmetric",
            Family::Asymmetric => "asymmetric",
            Family::Affine => "affine",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fractional" => Ok(Family::Fractional),
            "zero_sum" => Ok(Family::ZeroSum),
            "symmetric" => Ok(Family::Symmetric),
            "asymmetric" => Ok(Family::Asymmetric),
            "affine" => Ok(Family::Affine),
            other => Err(Error::Config(format!("unknown problem family '{other}'"))),
        }
    }
}

/// Generation record: enough to regenerate the instance from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemMetadata {
    pub family: Family,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

/// Family-specific payload kept alongside the oracle for recovery and
/// diagnostics.
#[derive(Debug, Clone)]
pub enum ProblemData {
    Generic,
    Fractional(Arc<FractionalProgramData>),
    Game(Arc<BimatrixGameData>),
}

/// The variational inequality VI(T, X) to be solved: a feasible set, a
/// stochastic oracle for T, a safe Lipschitz estimate, and optionally the
/// known solution.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dim: usize,
    pub set: FeasibleSet,
    pub oracle: StochasticOracle,
    /// Upper estimate of the Lipschitz modulus of the mean operator.
    pub lipschitz_l: f64,
    /// Whether `lipschitz_l` is exact (spectral norm) or a sampled estimate.
    pub lipschitz_exact: bool,
    pub known_solution: Option<Vector>,
    pub metadata: ProblemMetadata,
    pub data: ProblemData,
}

impl ProblemInstance {
    pub fn game_data(&self) -> Option<&BimatrixGameData> {
        match &self.data {
            ProblemData::Game(g) => Some(g),
            _ => None,
        }
    }

    pub fn fractional_data(&self) -> Option<&FractionalProgramData> {
        match &self.data {
            ProblemData::Fractional(f) => Some(f),
            _ => None,
        }
    }

    /// Structured text form (family, seed, generation parameters); matrices
    /// are regenerated from the seed rather than stored.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("family = {}\n", self.metadata.family));
        out.push_str(&format!("seed = {}\n", self.metadata.seed));
        for (k, v) in &self.metadata.params {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Rebuild an instance from its `describe()` text.
pub fn from_description(text: &str) -> Result<ProblemInstance> {
    let mut fields = std::collections::BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected 'key = value', got '{line}'")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        fields
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing field '{key}'")))
    };
    if fields.get("custom").map(String::as_str) == Some("true") {
        return Err(Error::Config(
            "instance was built from explicit data, not a generator; it cannot be regenerated from its description".into(),
        ));
    }
    let family: Family = get("family")?.parse()?;
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| Error::Config("seed must be an integer".into()))?;
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("{key} must be a positive integer")))
    };
    let parse_f64 = |key: &str, default: f64| -> Result<f64> {
        match fields.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key} must be a real number"))),
            None => Ok(default),
        }
    };
    match family {
        Family::Fractional => {
            let d = parse_usize("d")?;
            let noise = parse_f64("noise_sd", 0.1)?;
            generate_fractional_with_noise(d, noise, seed)
        }
        Family::ZeroSum | Family::Symmetric | Family::Asymmetric => {
            let n_i = parse_usize("n_i")?;
            let n_ii = parse_usize("n_ii")?;
            let noise = parse_f64("noise_sd", 0.1)?;
            let kind = match family {
                Family::ZeroSum => GameKind::ZeroSum,
                Family::Symmetric => GameKind::Symmetric,
                _ => GameKind::Asymmetric,
            };
            generate_game_with_noise(n_i, n_ii, kind, noise, seed)
        }
        Family::Affine => {
            let d = parse_usize("d")?;
            let strong = get("strong")? == "true";
            let set_kind: AffineSetKind = get("set")?.parse()?;
            let noise = parse_f64("noise_sd", 0.0)?;
            Ok(affine_problem(d, strong, set_kind, noise, seed))
        }
    }
}
