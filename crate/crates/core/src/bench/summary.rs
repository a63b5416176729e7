use crate::error::{Error, Result};
use crate::problems::Family;
use crate::solvers::Algorithm;

/// Aggregate statistics for one (family, dim, algorithm) cell, over exactly
/// `replications` runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub family: Family,
    pub dim: String,
    pub algorithm: Algorithm,
    pub replications: u64,
    pub mean_iterations: f64,
    pub sd_iterations: f64,
    pub mean_time_s: f64,
    pub sd_time_s: f64,
    pub mean_oracle_calls: f64,
    pub convergence_rate: f64,
}

/// Pairwise extragradient/FBF comparison on one dimension row.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub family: Family,
    pub dim: String,
    pub iteration_ratio: f64,
    pub time_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkSummary {
    pub rows: Vec<SummaryRow>,
    pub ratios: Vec<RatioRow>,
}

impl BenchmarkSummary {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, dim: &str, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.dim == dim && r.algorithm == algorithm)
    }

    pub fn ratio(&self, dim: &str) -> Option<&RatioRow> {
        self.ratios.iter().find(|r| r.dim == dim)
    }
}

pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    Csv,
    AlignedText,
}

/// Render the summary. CSV columns are fixed:
/// family, dim, algorithm, mean_iterations, sd_iterations, mean_time_s,
/// sd_time_s, mean_oracle_calls, convergence_rate.
pub fn emit_table(summary: &BenchmarkSummary, style: TableStyle) -> Result<String> {
    if summary.is_empty() {
        return Err(Error::InvalidInput("summary has no rows".into()));
    }
    match style {
        TableStyle::Csv => Ok(emit_csv(summary)),
        TableStyle::AlignedText => Ok(emit_aligned(summary)),
    }
}

fn emit_csv(summary: &BenchmarkSummary) -> String {
    let mut out = String::from(
        "family,dim,algorithm,mean_iterations,sd_iterations,mean_time_s,sd_time_s,mean_oracle_calls,convergence_rate\n",
    );
    for r in &summary.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.dim,
            r.algorithm,
            r.mean_iterations,
            r.sd_iterations,
            r.mean_time_s,
            r.sd_time_s,
            r.mean_oracle_calls,
            r.convergence_rate
        ));
    }
    out
}

fn emit_aligned(summary: &BenchmarkSummary) -> String {
    let mut out = String::new();
    let family = summary.rows[0].family;
    let reps = summary.rows[0].replications;
    out.push_str(&format!(
        "family: {family}    (averaged over {reps} runs)\n\n"
    ));
    out.push_str(&format!(
        "{:<14} {:>6} {:>14} {:>12} {:>12} {:>10}\n",
        "dim", "alg", "iterations", "time(sec.)", "oracle", "conv"
    ));
    for r in &summary.rows {
        out.push_str(&format!(
            "{:<14} {:>6} {:>14.2} {:>12.4} {:>12.0} {:>10.2}\n",
            r.dim,
            r.algorithm.name(),
            r.mean_iterations,
            r.mean_time_s,
            r.mean_oracle_calls,
            r.convergence_rate
        ));
    }
    if !summary.ratios.is_empty() {
        out.push('\n');
        for r in &summary.ratios {
            out.push_str(&format!(
                "dim {:<11} seg/sfbf iteration ratio {:.3}, time ratio {:.3}\n",
                r.dim, r.iteration_ratio, r.time_ratio
            ));
        }
    }
    out
}

/// Parse the CSV emitted above back into rows; used by round-trip checks and
/// downstream tooling.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty csv".into()))?;
    if header
        != "family,dim,algorithm,mean_iterations,sd_iterations,mean_time_s,sd_time_s,mean_oracle_calls,convergence_rate"
    {
        return Err(Error::InvalidInput(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::InvalidInput(format!(
                "expected 9 fields, got {} in '{line}'",
                fields.len()
            )));
        }
        let family: Family = fields[0].parse()?;
        let algorithm: Algorithm = fields[2].parse()?;
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad number '{}'", fields[i])))
        };
        rows.push(SummaryRow {
            family,
            dim: fields[1].to_string(),
            algorithm,
            replications: 0,
            mean_iterations: num(3)?,
            sd_iterations: num(4)?,
            mean_time_s: num(5)?,
            sd_time_s: num(6)?,
            mean_oracle_calls: num(7)?,
            convergence_rate: num(8)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_row() -> BenchmarkSummary {
        BenchmarkSummary {
            rows: vec![SummaryRow {
                family: Family::ZeroSum,
                dim: "100".into(),
                algorithm: Algorithm::Sfbf,
                replications: 10,
                mean_iterations: 84.38,
                sd_iterations: 3.25,
                mean_time_s: 0.4421,
                sd_time_s: 0.01,
                mean_oracle_calls: 1234.5,
                convergence_rate: 1.0,
            }],
            ratios: vec![],
        }
    }

    #[test]
    fn csv_has_header_plus_one_line_per_row() {
        let text = emit_table(&one_row(), TableStyle::Csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("family,dim,algorithm,"));
    }

    #[test]
    fn empty_summary_is_a_contract_violation() {
        let empty = BenchmarkSummary::default();
        assert!(emit_table(&empty, TableStyle::Csv).is_err());
        assert!(emit_table(&empty, TableStyle::AlignedText).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let summary = one_row();
        let text = emit_table(&summary, TableStyle::Csv).unwrap();
        let parsed = parse_summary_csv(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        let (a, b) = (&summary.rows[0], &parsed[0]);
        assert_eq!(a.family, b.family);
        assert_eq!(a.dim, b.dim);
        assert_eq!(a.algorithm, b.algorithm);
        assert_eq!(a.mean_iterations, b.mean_iterations);
        assert_eq!(a.sd_iterations, b.sd_iterations);
        assert_eq!(a.mean_time_s, b.mean_time_s);
        assert_eq!(a.mean_oracle_calls, b.mean_oracle_calls);
        assert_eq!(a.convergence_rate, b.convergence_rate);
    }

    #[test]
    fn mean_and_sd_basics() {
        let (m, s) = mean_and_sd(&[2.0, 4.0, 6.0]);
        assert_eq!(m, 4.0);
        assert!((s - 2.0).abs() < 1e-12);
        let (m, s) = mean_and_sd(&[5.0]);
        assert_eq!((m, s), (5.0, 0.0));
    }
}
