//! Step-size policies and batch-size schedules.
//!
//! The step-size bound ties the policy to the Lipschitz modulus L of the mean
//! operator: the forward-backward-forward iteration admits sup alpha_n
//! < 1/(sqrt(2) L), while the extragradient baseline only admits
//! 1/(sqrt(6) L). Batch sizes must grow fast enough that sum 1/m_n is finite;
//! that is what turns per-iteration oracle noise into a summable perturbation
//! and permits constant step sizes.

use std::sync::Arc;

use crate::error::{Error, Result};

pub const SFBF_STEP_FACTOR: f64 = std::f64::consts::SQRT_2;
pub const SEG_STEP_FACTOR: f64 = 2.449489742783178; // sqrt(6)

/// Bounded positive step-size sequence alpha_n.
#[derive(Clone)]
pub enum StepSizePolicy {
    Constant(f64),
    BoundedSequence {
        values: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
    },
}

impl std::fmt::Debug for StepSizePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSizePolicy::Constant(a) => write!(f, "Constant({a})"),
            StepSizePolicy::BoundedSequence { lower, upper, .. } => {
                write!(f, "BoundedSequence[{lower}, {upper}]")
            }
        }
    }
}

impl StepSizePolicy {
    pub fn constant(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "step size must be a positive real, got {alpha}"
            )));
        }
        Ok(StepSizePolicy::Constant(alpha))
    }

    pub fn bounded_sequence(
        values: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower <= 0.0 || upper < lower {
            return Err(Error::InvalidInput(format!(
                "step bounds must satisfy 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(StepSizePolicy::BoundedSequence {
            values,
            lower,
            upper,
        })
    }

    /// alpha_n, clamped into [lower, upper] for sequence policies.
    pub fn step_size_at(&self, n: u64) -> f64 {
        match self {
            StepSizePolicy::Constant(a) => *a,
            StepSizePolicy::BoundedSequence {
                values,
                lower,
                upper,
            } => values(n).clamp(*lower, *upper),
        }
    }

    /// sup_n alpha_n.
    pub fn upper_bound(&self) -> f64 {
        match self {
            StepSizePolicy::Constant(a) => *a,
            StepSizePolicy::BoundedSequence { upper, .. } => *upper,
        }
    }
}

/// Successful validation outcome: the worst-case contraction margin
/// rho = 1 - 2 L^2 alpha^2 evaluated at sup alpha_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeValidation {
    pub alpha_bar: f64,
    pub bound: f64,
    pub rho_lower: f64,
}

/// Validate a policy against the forward-backward-forward bound
/// sup alpha_n < 1/(sqrt(2) L). Acceptance is exactly rho_lower > 0.
pub fn validate_step_size(policy: &StepSizePolicy, lipschitz: f64) -> Result<StepSizeValidation> {
    validate_step_size_with_factor(policy, lipschitz, SFBF_STEP_FACTOR)
}

/// Validate against an explicit bound 1/(factor * L); factor is sqrt(2) for
/// the FBF iteration and sqrt(6) for the extragradient baseline.
pub fn validate_step_size_with_factor(
    policy: &StepSizePolicy,
    lipschitz: f64,
    factor: f64,
) -> Result<StepSizeValidation> {
    if !lipschitz.is_finite() || lipschitz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Lipschitz modulus must be > 0, got {lipschitz}"
        )));
    }
    let alpha_bar = policy.upper_bound();
    let bound = 1.0 / (factor * lipschitz);
    if alpha_bar >= bound {
        return Err(Error::StepSizeRejected {
            alpha_bar,
            bound,
            lipschitz,
        });
    }
    Ok(StepSizeValidation {
        alpha_bar,
        bound,
        rho_lower: 1.0 - 2.0 * lipschitz * lipschitz * alpha_bar * alpha_bar,
    })
}

/// Batch-size sequence m_{n+1} indexed by the 0-based iteration counter n.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchSchedule {
    /// m = ceil(c * (n + n0)^(1+a) * ln(n + n0)^(1+b)); summable whenever
    /// (a > 0 and b >= -1) or (a = 0 and b > 0).
    PolyLog { c: f64, n0: u64, a: f64, b: f64 },
    /// m = max(1, ceil((n+1)^1.5 / d)), the rule used in the experiments.
    ExperimentRule { d: u64 },
    /// Fixed batch size; sum 1/m diverges, kept for diagnostics and smoke runs.
    Constant { m: u64 },
}

/// Partial sum of sum 1/m_n plus, for polylog schedules, an analytic bound on
/// the tail via the integral test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummabilityReport {
    pub horizon: u64,
    pub partial_sum: f64,
    pub tail_bound: Option<f64>,
    pub divergent: bool,
}

impl BatchSchedule {
    pub fn poly_log(c: f64, n0: u64, a: f64, b: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidInput("polylog: c must be > 0".into()));
        }
        let summable = (a > 0.0 && b >= -1.0) || (a == 0.0 && b > 0.0);
        if !summable {
            return Err(Error::InvalidInput(format!(
                "polylog: need (a > 0 and b >= -1) or (a = 0 and b > 0), got a = {a}, b = {b}"
            )));
        }
        // With b = -1 the log factor is identically 1, so ln(n + n0) = 0 is
        // harmless and n0 = 1 is allowed; otherwise ln must stay positive.
        if b != -1.0 && n0 < 2 {
            return Err(Error::InvalidInput(
                "polylog: n0 must be >= 2 unless b = -1".into(),
            ));
        }
        if n0 == 0 {
            return Err(Error::InvalidInput("polylog: n0 must be >= 1".into()));
        }
        Ok(BatchSchedule::PolyLog { c, n0, a, b })
    }

    pub fn experiment_rule(d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("experiment rule: d must be >= 1".into()));
        }
        Ok(BatchSchedule::ExperimentRule { d })
    }

    pub fn constant(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("constant batch: m must be >= 1".into()));
        }
        Ok(BatchSchedule::Constant { m })
    }

    /// Batch size consumed by iteration n (0-based), always >= 1.
    pub fn batch_size_at(&self, n: u64) -> u64 {
        match self {
            BatchSchedule::PolyLog { c, n0, a, b } => {
                let t = (n + n0) as f64;
                let log_factor = if *b == -1.0 { 1.0 } else { t.ln().powf(1.0 + b) };
                let raw = c * t.powf(1.0 + a) * log_factor;
                (raw.ceil() as u64).max(1)
            }
            BatchSchedule::ExperimentRule { d } => {
                let raw = ((n + 1) as f64).powf(1.5) / *d as f64;
                (raw.ceil() as u64).max(1)
            }
            BatchSchedule::Constant { m } => *m,
        }
    }

    /// Partial sum of 1/m over the first `horizon` batch sizes, with a tail
    /// bound for polylog schedules and a divergence flag for constant ones.
    pub fn summability_report(&self, horizon: u64) -> SummabilityReport {
        let mut partial_sum = 0.0;
        for k in 0..horizon {
            partial_sum += 1.0 / self.batch_size_at(k) as f64;
        }
        let (tail_bound, divergent) = match self {
            BatchSchedule::Constant { .. } => (None, true),
            BatchSchedule::ExperimentRule { .. } => (None, false),
            BatchSchedule::PolyLog { c, n0, a, b } => {
                let tail = if *a > 0.0 {
                    // sum_{k >= N} 1/m_k <= (N-1+n0)^(-a) / (c a ln(N+n0)^(1+b))
                    let left = (horizon + n0 - 1) as f64;
                    let log_at_start = ((horizon + n0) as f64).ln();
                    left.powf(-a) / (c * a * log_at_start.powf(1.0 + b))
                } else {
                    // a = 0, b > 0: integral test gives 1/(c b ln(N-1+n0)^b)
                    let left = (horizon + n0 - 1) as f64;
                    1.0 / (c * b * left.ln().powf(*b))
                };
                (Some(tail), false)
            }
        };
        SummabilityReport {
            horizon,
            partial_sum,
            tail_bound,
            divergent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_step_size() {
        let p = StepSizePolicy::constant(0.1).unwrap();
        assert_eq!(p.step_size_at(7), 0.1);
    }

    #[test]
    fn paper_default_step_sizes_at_unit_lipschitz() {
        let sfbf = 0.99 / (SFBF_STEP_FACTOR * 1.0);
        assert!((sfbf - 0.70004).abs() < 1e-5);
        let seg = 0.99 / (SEG_STEP_FACTOR * 1.0);
        assert!((seg - 0.40417).abs() < 1e-5);
        assert!(validate_step_size(&StepSizePolicy::constant(sfbf).unwrap(), 1.0).is_ok());
        assert!(validate_step_size_with_factor(
            &StepSizePolicy::constant(seg).unwrap(),
            1.0,
            SEG_STEP_FACTOR
        )
        .is_ok());
    }

    #[test]
    fn validation_reports_contraction_margin() {
        let ok = validate_step_size(&StepSizePolicy::constant(0.7).unwrap(), 1.0).unwrap();
        assert!((ok.rho_lower - 0.02).abs() < 1e-12);
        let ok = validate_step_size(&StepSizePolicy::constant(0.1).unwrap(), 1.0).unwrap();
        assert!((ok.rho_lower - 0.98).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_step_sizes_at_or_above_the_bound() {
        let err = validate_step_size(&StepSizePolicy::constant(0.8).unwrap(), 1.0).unwrap_err();
        match err {
            Error::StepSizeRejected {
                alpha_bar, bound, ..
            } => {
                assert_eq!(alpha_bar, 0.8);
                assert!((bound - 1.0 / SFBF_STEP_FACTOR).abs() < 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
        // Acceptance is exactly rho_lower > 0: just below the bound passes.
        let eps = 1e-12;
        let at = 1.0 / SFBF_STEP_FACTOR;
        assert!(validate_step_size(&StepSizePolicy::constant(at).unwrap(), 1.0).is_err());
        let v = validate_step_size(&StepSizePolicy::constant(at - eps).unwrap(), 1.0).unwrap();
        assert!(v.rho_lower > 0.0);
    }

    #[test]
    fn experiment_rule_examples() {
        let s = BatchSchedule::experiment_rule(200).unwrap();
        assert_eq!(s.batch_size_at(0), 1);
        assert_eq!(s.batch_size_at(99), 5);
    }

    #[test]
    fn polylog_example() {
        let s = BatchSchedule::poly_log(1.0, 1, 1.0, -1.0).unwrap();
        assert_eq!(s.batch_size_at(0), 1);
        assert_eq!(s.batch_size_at(1), 4);
    }

    #[test]
    fn polylog_validation() {
        assert!(BatchSchedule::poly_log(1.0, 2, 0.0, 0.5).is_ok());
        assert!(BatchSchedule::poly_log(1.0, 1, 0.0, 0.5).is_err()); // ln(1) = 0 degenerate
        assert!(BatchSchedule::poly_log(1.0, 2, 0.0, 0.0).is_err()); // not summable
        assert!(BatchSchedule::poly_log(1.0, 2, 1.0, -2.0).is_err());
        assert!(BatchSchedule::poly_log(0.0, 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn constant_schedule_is_flagged_divergent() {
        let s = BatchSchedule::constant(5).unwrap();
        let report = s.summability_report(1000);
        assert!(report.divergent);
        assert!((report.partial_sum - 200.0).abs() < 1e-9);
    }

    #[test]
    fn experiment_rule_partial_sum_stays_below_zeta_three_halves() {
        let s = BatchSchedule::experiment_rule(1).unwrap();
        let report = s.summability_report(1_000_000);
        assert!(!report.divergent);
        assert!(
            report.partial_sum <= 2.613,
            "partial sum {} exceeds 2.613",
            report.partial_sum
        );
    }

    #[test]
    fn polylog_partial_sum_stays_below_basel_constant() {
        let s = BatchSchedule::poly_log(1.0, 1, 1.0, -1.0).unwrap();
        let report = s.summability_report(10_000);
        let basel = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!(report.partial_sum <= basel);
        let tail = report.tail_bound.unwrap();
        assert!(tail > 0.0 && report.partial_sum + tail >= basel - 1e-4);
    }

    #[test]
    fn batch_sizes_are_nondecreasing() {
        let rules = [
            BatchSchedule::experiment_rule(7).unwrap(),
            BatchSchedule::poly_log(0.5, 2, 0.5, -1.0).unwrap(),
            BatchSchedule::poly_log(1.0, 3, 1.0, 0.0).unwrap(),
        ];
        for rule in &rules {
            let mut prev = 0;
            for n in 0..5000 {
                let m = rule.batch_size_at(n);
                assert!(m >= 1);
                assert!(m >= prev, "{rule:?} decreased at n = {n}");
                prev = m;
            }
        }
    }

    #[test]
    fn accepted_policies_stay_below_the_bound_everywhere() {
        let policy = StepSizePolicy::bounded_sequence(
            Arc::new(|n| 0.3 + 0.2 / (1.0 + n as f64)),
            0.3,
            0.5,
        )
        .unwrap();
        let v = validate_step_size(&policy, 1.0).unwrap();
        for n in 0..1000 {
            assert!(policy.step_size_at(n) < v.bound);
        }
    }
}
