//! Experiment configuration and its key = value file format.
//!
//! Schema (one `key = value` per line, `#` comments allowed):
//!
//! ```text
//! family = fractional | zero_sum | symmetric | asymmetric | affine
//! dims = 50, 100, 200            # games accept nIxnII pairs, e.g. 100x200
//! algorithms = sfbf, seg
//! replications = 10
//! base_seed = 42
//! residual_tol = 1e-3
//! residual_alpha = 1
//! max_iterations = 100000
//! step_rule = paper_game | paper_fractional | alpha:0.05 | alpha_unvalidated:0.05
//! batch_rule = experiment | constant:8 | polylog:1.0,2,1.0,-1.0
//! record_trajectory = false
//! output_dir = out               # optional; artifacts written when present
//! ```

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::problems::{Family, ProblemInstance};
use crate::schedules::{BatchSchedule, StepSizePolicy};
use crate::solvers::{Algorithm, StoppingRule};

/// Problem size: `d` for fractional/affine families, (n_I, n_II) for games
/// (a bare number means a square game).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimSpec {
    pub primary: usize,
    pub secondary: Option<usize>,
}

impl DimSpec {
    pub fn square(n: usize) -> Self {
        DimSpec {
            primary: n,
            secondary: None,
        }
    }

    pub fn pair(n_i: usize, n_ii: usize) -> Self {
        DimSpec {
            primary: n_i,
            secondary: Some(n_ii),
        }
    }

    pub fn label(&self) -> String {
        match self.secondary {
            Some(s) => format!("{}x{}", self.primary, s),
            None => self.primary.to_string(),
        }
    }

    /// Ambient dimension of the resulting problem.
    pub fn problem_dim(&self, family: Family) -> usize {
        match family {
            Family::Fractional | Family::Affine => self.primary,
            _ => self.primary + self.secondary.unwrap_or(self.primary),
        }
    }
}

impl std::str::FromStr for DimSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_num = |t: &str| -> Result<usize> {
            let n: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad dimension '{t}'")))?;
            if n == 0 {
                return Err(Error::Config("dimensions must be >= 1".into()));
            }
            Ok(n)
        };
        match s.split_once('x') {
            Some((a, b)) => Ok(DimSpec::pair(parse_num(a)?, parse_num(b)?)),
            None => Ok(DimSpec::square(parse_num(s)?)),
        }
    }
}

/// Named step-size rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// alpha = 0.99/(sqrt(2) L) for FBF, 0.99/(sqrt(6) L) for the baseline.
    PaperGame,
    /// alpha = 10/d for FBF, (10/d)/sqrt(3) for the baseline. No usable
    /// Lipschitz modulus is known for the fractional operator, so these runs
    /// bypass the step-size gate.
    PaperFractional,
    /// One explicit constant for every algorithm.
    Explicit { alpha: f64, unvalidated: bool },
}

impl StepRule {
    /// Concrete policy for this algorithm on this problem, plus whether the
    /// validation gate must be skipped.
    pub fn policy_for(
        &self,
        algorithm: Algorithm,
        problem: &ProblemInstance,
        dim: DimSpec,
        family: Family,
    ) -> Result<(StepSizePolicy, bool)> {
        match self {
            StepRule::PaperGame => {
                let alpha = 0.99 / (algorithm.step_factor() * problem.lipschitz_l);
                Ok((StepSizePolicy::constant(alpha)?, false))
            }
            StepRule::PaperFractional => {
                let d = dim.problem_dim(family) as f64;
                let base = 10.0 / d;
                let alpha = match algorithm {
                    Algorithm::Sfbf => base,
                    Algorithm::Seg => base / 3.0f64.sqrt(),
                };
                Ok((StepSizePolicy::constant(alpha)?, true))
            }
            StepRule::Explicit { alpha, unvalidated } => {
                Ok((StepSizePolicy::constant(*alpha)?, *unvalidated))
            }
        }
    }
}

impl std::str::FromStr for StepRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "paper_game" {
            return Ok(StepRule::PaperGame);
        }
        if s == "paper_fractional" {
            return Ok(StepRule::PaperFractional);
        }
        if let Some(rest) = s.strip_prefix("alpha_unvalidated:") {
            let alpha: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad step size '{rest}'")))?;
            return Ok(StepRule::Explicit {
                alpha,
                unvalidated: true,
            });
        }
        if let Some(rest) = s.strip_prefix("alpha:") {
            let alpha: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad step size '{rest}'")))?;
            return Ok(StepRule::Explicit {
                alpha,
                unvalidated: false,
            });
        }
        Err(Error::Config(format!("unknown step rule '{s}'")))
    }
}

/// Batch schedule specification; `experiment` plugs the problem dimension into
/// the (n+1)^1.5/d rule at build time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchRuleSpec {
    Experiment,
    PolyLog { c: f64, n0: u64, a: f64, b: f64 },
    Constant(u64),
}

impl BatchRuleSpec {
    pub fn schedule_for(&self, problem_dim: usize) -> Result<BatchSchedule> {
        match self {
            BatchRuleSpec::Experiment => BatchSchedule::experiment_rule(problem_dim as u64),
            BatchRuleSpec::PolyLog { c, n0, a, b } => BatchSchedule::poly_log(*c, *n0, *a, *b),
            BatchRuleSpec::Constant(m) => BatchSchedule::constant(*m),
        }
    }
}

impl std::str::FromStr for BatchRuleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "experiment" {
            return Ok(BatchRuleSpec::Experiment);
        }
        if let Some(rest) = s.strip_prefix("constant:") {
            let m: u64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad batch size '{rest}'")))?;
            return Ok(BatchRuleSpec::Constant(m));
        }
        if let Some(rest) = s.strip_prefix("polylog:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(Error::Config(
                    "polylog batch rule needs c,n0,a,b".into(),
                ));
            }
            let c: f64 = parts[0]
                .parse()
                .map_err(|_| Error::Config("bad polylog c".into()))?;
            let n0: u64 = parts[1]
                .parse()
                .map_err(|_| Error::Config("bad polylog n0".into()))?;
            let a: f64 = parts[2]
                .parse()
                .map_err(|_| Error::Config("bad polylog a".into()))?;
            let b: f64 = parts[3]
                .parse()
                .map_err(|_| Error::Config("bad polylog b".into()))?;
            return Ok(BatchRuleSpec::PolyLog { c, n0, a, b });
        }
        Err(Error::Config(format!("unknown batch rule '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub dims: Vec<DimSpec>,
    pub algorithms: Vec<Algorithm>,
    pub replications: u64,
    pub base_seed: u64,
    pub stop: StoppingRule,
    pub step_rule: StepRule,
    pub batch_rule: BatchRuleSpec,
    pub record_trajectory: bool,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Sensible defaults for a family: paper step and batch rules, tol 1e-3.
    pub fn for_family(family: Family) -> Self {
        let step_rule = match family {
            Family::Fractional => StepRule::PaperFractional,
            _ => StepRule::PaperGame,
        };
        ExperimentConfig {
            family,
            dims: vec![],
            algorithms: vec![Algorithm::Sfbf, Algorithm::Seg],
            replications: 10,
            base_seed: 0,
            stop: StoppingRule::default(),
            step_rule,
            batch_rule: BatchRuleSpec::Experiment,
            record_trajectory: false,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("dims must be nonempty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must be nonempty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.stop.residual_tol) || !positive(self.stop.residual_alpha) {
            return Err(Error::Config(
                "residual_tol and residual_alpha must be > 0".into(),
            ));
        }
        for dim in &self.dims {
            if self.family == Family::Symmetric {
                if let Some(s) = dim.secondary {
                    if s != dim.primary {
                        return Err(Error::Config(format!(
                            "symmetric games need square dims, got {}",
                            dim.label()
                        )));
                    }
                }
            }
            if matches!(self.family, Family::Fractional | Family::Affine)
                && dim.secondary.is_some()
            {
                return Err(Error::Config(format!(
                    "family {} takes a single dimension, got {}",
                    self.family,
                    dim.label()
                )));
            }
        }
        Ok(())
    }
}

/// Parse the config file format described in the module docs.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut fields: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.split_once('#') {
            Some((before, _)) => before.trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", idx + 1))
        })?;
        fields.push((k.trim().to_string(), v.trim().to_string()));
    }
    let get = |key: &str| fields.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v);
    let family: Family = get("family")
        .ok_or_else(|| Error::Config("missing 'family'".into()))?
        .parse()?;
    let mut config = ExperimentConfig::for_family(family);

    if let Some(v) = get("dims") {
        config.dims = v
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<DimSpec>>>()?;
    }
    if let Some(v) = get("algorithms") {
        config.algorithms = v
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Algorithm>>>()?;
    }
    let parse_u64 = |key: &str, v: &str| -> Result<u64> {
        v.parse()
            .map_err(|_| Error::Config(format!("'{key}' must be a nonnegative integer")))
    };
    let parse_f64 = |key: &str, v: &str| -> Result<f64> {
        v.parse()
            .map_err(|_| Error::Config(format!("'{key}' must be a real number")))
    };
    if let Some(v) = get("replications") {
        config.replications = parse_u64("replications", v)?;
    }
    if let Some(v) = get("base_seed") {
        config.base_seed = parse_u64("base_seed", v)?;
    }
    if let Some(v) = get("residual_tol") {
        config.stop.residual_tol = parse_f64("residual_tol", v)?;
    }
    if let Some(v) = get("residual_alpha") {
        config.stop.residual_alpha = parse_f64("residual_alpha", v)?;
    }
    if let Some(v) = get("max_iterations") {
        config.stop.max_iterations = parse_u64("max_iterations", v)?;
    }
    if let Some(v) = get("step_rule") {
        config.step_rule = v.parse()?;
    }
    if let Some(v) = get("batch_rule") {
        config.batch_rule = v.parse()?;
    }
    if let Some(v) = get("record_trajectory") {
        config.record_trajectory = match v.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Config(format!(
                    "'record_trajectory' must be true or false, got '{other}'"
                )))
            }
        };
    }
    if let Some(v) = get("output_dir") {
        config.output_dir = Some(PathBuf::from(v));
    }
    for (k, _) in &fields {
        const KNOWN: [&str; 12] = [
            "family",
            "dims",
            "algorithms",
            "replications",
            "base_seed",
            "residual_tol",
            "residual_alpha",
            "max_iterations",
            "step_rule",
            "batch_rule",
            "record_trajectory",
            "output_dir",
        ];
        if !KNOWN.contains(&k.as_str()) {
            return Err(Error::Config(format!("unknown config key '{k}'")));
        }
    }
    config.validate()?;
    Ok(config)
}
