use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::RunRecord;
use super::stats::{downsample_indices, mean_std, median, normalize_costs, wilcoxon_rank_sum};
use crate::{Error, Result};

/// Significance level of the rank-sum comparisons.
pub const ALPHA: f64 = 0.05;
/// Reference algorithm for the comparison symbols, when present.
pub const REFERENCE_ALGORITHM: &str = "abom";
/// Maximum points per curve in `curves.csv`.
pub const CURVE_POINTS: usize = 500;

/// Outcome of an algorithm against the reference on one problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "+")]
    Better,
    #[serde(rename = "≈")]
    Tie,
    #[serde(rename = "−")]
    Worse,
}

impl Significance {
    pub fn symbol(self) -> &'static str {
        match self {
            Significance::Better => "+",
            Significance::Tie => "≈",
            Significance::Worse => "−",
        }
    }
}

/// Compares `other` with `reference` (minimization). `+` means `other` is
/// significantly better, direction decided by medians.
pub fn significance(reference: &[f64], other: &[f64], alpha: f64) -> Result<(f64, Significance)> {
    let test = wilcoxon_rank_sum(other, reference)?;
    let (mo, mr) = (median(other), median(reference));
    let symbol = if test.p_value >= alpha || mo == mr {
        Significance::Tie
    } else if mo < mr {
        Significance::Better
    } else {
        Significance::Worse
    };
    Ok((test.p_value, symbol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalStats {
    pub problem: String,
    pub algorithm: String,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub best: f64,
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub problem: String,
    pub algorithm: String,
    /// `None` when a sample has fewer than two runs.
    pub p_value: Option<f64>,
    pub symbol: Significance,
}

/// Per-algorithm count of `+`, `≈` and `−` across problems.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub algorithm: String,
    pub better: usize,
    pub tie: usize,
    pub worse: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub problem: String,
    pub algorithm: String,
    /// 1-based evaluation indices of the kept points.
    pub evaluations: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub reference: String,
    pub alpha: f64,
    pub finals: Vec<FinalStats>,
    pub comparisons: Vec<Comparison>,
    pub tallies: Vec<Tally>,
    pub curves: Vec<CurveSummary>,
}

fn unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn finals(records: &[RunRecord], problem: &str, algorithm: &str) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.problem == problem && r.algorithm == algorithm)
        .map(RunRecord::final_fitness)
        .collect()
}

/// Summary statistics, significance marks and downsampled normalized curves.
pub fn compute_report(records: &[RunRecord]) -> Result<StatsReport> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no run records to report".into()));
    }
    let problems = unique(records.iter().map(|r| r.problem.as_str()));
    let algorithms = unique(records.iter().map(|r| r.algorithm.as_str()));
    let reference = if algorithms.contains(&REFERENCE_ALGORITHM) {
        REFERENCE_ALGORITHM
    } else {
        algorithms[0]
    };

    let mut report = StatsReport {
        reference: reference.to_string(),
        alpha: ALPHA,
        finals: Vec::new(),
        comparisons: Vec::new(),
        tallies: algorithms
            .iter()
            .filter(|a| **a != reference)
            .map(|a| Tally {
                algorithm: a.to_string(),
                ..Tally::default()
            })
            .collect(),
        curves: Vec::new(),
    };

    for &problem in &problems {
        let reference_finals = finals(records, problem, reference);
        for &algorithm in &algorithms {
            let values = finals(records, problem, algorithm);
            if values.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&values);
            report.finals.push(FinalStats {
                problem: problem.to_string(),
                algorithm: algorithm.to_string(),
                runs: values.len(),
                mean,
                std,
                median: median(&values),
                best: values.iter().copied().fold(f64::INFINITY, f64::min),
                worst: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
            if algorithm == reference || reference_finals.is_empty() {
                continue;
            }
            let (p_value, symbol) = match significance(&reference_finals, &values, ALPHA) {
                Ok((p, s)) => (Some(p), s),
                Err(Error::InvalidArgument(_)) => (None, Significance::Tie),
                Err(e) => return Err(e),
            };
            let tally = report
                .tallies
                .iter_mut()
                .find(|t| t.algorithm == algorithm)
                .expect("tally per non-reference algorithm");
            match symbol {
                Significance::Better => tally.better += 1,
                Significance::Tie => tally.tie += 1,
                Significance::Worse => tally.worse += 1,
            }
            report.comparisons.push(Comparison {
                problem: problem.to_string(),
                algorithm: algorithm.to_string(),
                p_value,
                symbol,
            });
        }

        let normalized = normalize_costs(records, problem)?;
        for curve in normalized.curves {
            let idx = downsample_indices(curve.mean.len(), CURVE_POINTS);
            report.curves.push(CurveSummary {
                problem: problem.to_string(),
                evaluations: idx.iter().map(|k| k + 1).collect(),
                mean: idx.iter().map(|&k| curve.mean[k]).collect(),
                std: idx.iter().map(|&k| curve.std[k]).collect(),
                algorithm: curve.algorithm,
            });
        }
    }
    Ok(report)
}

/// Writes `traces.csv`, `summary.json` and `curves.csv` into `dir`. Nothing is
/// written when `records` is empty.
pub fn emit_report(records: &[RunRecord], dir: &Path) -> Result<StatsReport> {
    let report = compute_report(records)?;
    fs::create_dir_all(dir)?;

    let mut traces = BufWriter::new(fs::File::create(dir.join("traces.csv"))?);
    writeln!(traces, "problem,algorithm,run,evaluation,best_fitness")?;
    let mut line = String::new();
    for r in records {
        for (k, v) in r.result.best_so_far.iter().enumerate() {
            line.clear();
            // `{:?}` prints the shortest round-tripping form
            writeln!(line, "{},{},{},{},{:?}", r.problem, r.algorithm, r.run, k + 1, v)
                .expect("writing to a String");
            traces.write_all(line.as_bytes())?;
        }
    }
    traces.flush()?;

    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report)?)?;

    let mut curves = BufWriter::new(fs::File::create(dir.join("curves.csv"))?);
    writeln!(curves, "problem,algorithm,evaluation,mean,std")?;
    for c in &report.curves {
        for ((e, m), s) in c.evaluations.iter().zip(&c.mean).zip(&c.std) {
            writeln!(curves, "{},{},{e},{m:?},{s:?}", c.problem, c.algorithm)?;
        }
    }
    curves.flush()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::RunResult;

    fn record(problem: &str, algorithm: &str, run: usize, final_value: f64) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            algorithm: algorithm.into(),
            run,
            seed: 0,
            budget: 3,
            result: RunResult {
                best_solution: vec![0.0],
                best_fitness: final_value,
                best_so_far: vec![final_value + 2.0, final_value + 1.0, final_value],
                losses: vec![],
                generations: 0,
                evaluations: 3,
                elapsed_seconds: 0.0,
            },
        }
    }

    #[test]
    fn symbols_follow_medians_and_alpha() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        let worse = [6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(significance(&r, &worse, ALPHA).unwrap().1, Significance::Worse);
        assert_eq!(significance(&worse, &r, ALPHA).unwrap().1, Significance::Better);
        let mixed = [1.5, 2.5, 3.5, 4.5, 0.5];
        assert_eq!(significance(&r, &mixed, ALPHA).unwrap().1, Significance::Tie);
    }

    #[test]
    fn report_counts_and_reference() {
        let mut recs = Vec::new();
        for run in 0..5 {
            recs.push(record("f", "abom", run, run as f64));
            recs.push(record("f", "rs", run, 10.0 + run as f64));
        }
        let rep = compute_report(&recs).unwrap();
        assert_eq!(rep.reference, "abom");
        assert_eq!(rep.finals.len(), 2);
        assert_eq!(rep.comparisons[0].symbol, Significance::Worse);
        assert_eq!(rep.tallies[0].worse, 1);
        assert_eq!(rep.curves.len(), 2);
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(emit_report(&[], &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn single_run_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record("f", "abom", 0, 1.0);
        emit_report(std::slice::from_ref(&rec), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("traces.csv")).unwrap();
        assert_eq!(text.lines().count() - 1, rec.result.evaluations);
        let summary: StatsReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary.finals[0].mean, 1.0);
        assert!(dir.path().join("curves.csv").exists());
    }
}
