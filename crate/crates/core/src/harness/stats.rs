//! Wilcoxon rank-sum test, min-max normalized convergence curves and small
//! descriptive helpers.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::records::RunRecord;
use crate::{Error, Result};

/// Combined sample size up to which p-values are computed exactly.
pub const EXACT_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Rank sum of the first sample, midranks for ties.
    pub rank_sum: f64,
    /// Mann-Whitney `U` of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided rank-sum test of `a` against `b`. Exact enumeration when
/// `|a| + |b| <= 16`, normal approximation with tie and continuity
/// correction otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() + b.len() <= EXACT_LIMIT {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

/// Exact null distribution of the rank sum, conditional on the observed ties.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranks = pooled_ranks(a, b)?;
    let n = a.len();
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let observed: usize = doubled[..n].iter().sum();
    let max_sum: usize = doubled.iter().sum();

    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0f64; max_sum + 1]; n + 1];
    counts[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=n).rev() {
            for s in (r..=max_sum).rev() {
                let c = counts[k - 1][s - r];
                if c != 0.0 {
                    counts[k][s] += c;
                }
            }
        }
    }
    let total: f64 = counts[n].iter().sum();
    let lower: f64 = counts[n][..=observed].iter().sum();
    let upper: f64 = counts[n][observed..].iter().sum();
    let p = (2.0 * lower.min(upper) / total).min(1.0);
    Ok(finish(&ranks, n, p, true))
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranks = pooled_ranks(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let total = n + m;
    let rank_sum: f64 = ranks[..a.len()].iter().sum();
    let mean = n * (total + 1.0) / 2.0;
    let ties = tie_term(&ranks);
    let var = n * m / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((rank_sum - mean).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(finish(&ranks, a.len(), p, false))
}

fn finish(ranks: &[f64], n: usize, p_value: f64, exact: bool) -> WilcoxonResult {
    let rank_sum: f64 = ranks[..n].iter().sum();
    WilcoxonResult {
        rank_sum,
        u: rank_sum - (n * (n + 1)) as f64 / 2.0,
        p_value,
        exact,
    }
}

/// Midranks (1-based) of `a` followed by `b` in the pooled sample.
fn pooled_ranks(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rank-sum test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("wilcoxon_rank_sum"));
    }
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mid;
        }
        start = end;
    }
    Ok(ranks)
}

/// `Σ (t³ − t)` over tie groups.
fn tie_term(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        term += t * t * t - t;
        i = j;
    }
    term
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `(c − min) / (max − min)`, or 0 when `max == min`.
pub fn normalize_value(c: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (c - min) / (max - min)
    } else {
        0.0
    }
}

/// Normalized mean ± std curve of one algorithm on one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmCurve {
    pub algorithm: String,
    pub runs: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCurves {
    pub problem: String,
    /// Smallest cost over every trace of every algorithm on the problem.
    pub min: f64,
    pub max: f64,
    pub curves: Vec<AlgorithmCurve>,
}

/// Min-max normalizes every best-so-far trace of `problem` with the global
/// extremes over all its algorithms and runs, then averages per algorithm.
/// Shorter traces are extended with their last value.
pub fn normalize_costs(records: &[RunRecord], problem: &str) -> Result<NormalizedCurves> {
    let selected: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.problem == problem && !r.result.best_so_far.is_empty())
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!("no records for problem {problem}")));
    }
    let values = selected.iter().flat_map(|r| r.result.best_so_far.iter().copied());
    let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let len = selected.iter().map(|r| r.result.best_so_far.len()).max().unwrap_or(0);

    let mut algorithms: Vec<&str> = Vec::new();
    for r in &selected {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
    }
    let curves = algorithms
        .into_iter()
        .map(|alg| {
            let traces: Vec<Vec<f64>> = selected
                .iter()
                .filter(|r| r.algorithm == alg)
                .map(|r| {
                    let t = &r.result.best_so_far;
                    (0..len)
                        .map(|k| normalize_value(t[k.min(t.len() - 1)], min, max))
                        .collect()
                })
                .collect();
            let mut mean = Vec::with_capacity(len);
            let mut std = Vec::with_capacity(len);
            let mut column = vec![0.0; traces.len()];
            for k in 0..len {
                for (c, t) in column.iter_mut().zip(&traces) {
                    *c = t[k];
                }
                let (m, s) = mean_std(&column);
                mean.push(m);
                std.push(s);
            }
            AlgorithmCurve {
                algorithm: alg.to_string(),
                runs: traces.len(),
                mean,
                std,
            }
        })
        .collect();
    Ok(NormalizedCurves {
        problem: problem.to_string(),
        min,
        max,
        curves,
    })
}

/// At most `max_points` indices into `0..len`, evenly spread, always
/// including the first and last.
pub fn downsample_indices(len: usize, max_points: usize) -> Vec<usize> {
    if len <= max_points {
        return (0..len).collect();
    }
    if max_points < 2 {
        return vec![len - 1];
    }
    let mut idx: Vec<usize> = (0..max_points)
        .map(|k| ((k as f64) * (len - 1) as f64 / (max_points - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::RunResult;

    /// Brute-force enumeration over all subsets, independent of the DP.
    fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
        let ranks = pooled_ranks(a, b).unwrap();
        let n = a.len();
        let obs: f64 = ranks[..n].iter().sum();
        let total = ranks.len();
        let (mut le, mut ge, mut count) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let s: f64 = (0..total).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            count += 1;
            if s <= obs + 1e-9 {
                le += 1;
            }
            if s >= obs - 1e-9 {
                ge += 1;
            }
        }
        (2.0 * le.min(ge) as f64 / count as f64).min(1.0)
    }

    #[test]
    fn separated_samples_exact() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!(r.exact);
        assert_eq!(r.u, 0.0);
        assert_eq!(r.rank_sum, 15.0);
        assert!((r.p_value - 2.0 / 252.0).abs() < 1e-12);
    }

    #[test]
    fn fully_tied_samples() {
        let a = [3.0; 6];
        let r = wilcoxon_rank_sum(&a, &a).unwrap();
        assert!(r.p_value >= 0.99);
        let a = [3.0; 20];
        let r = wilcoxon_rank_sum(&a, &a).unwrap();
        assert!(!r.exact);
        assert!(r.p_value >= 0.99);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let a = [1.0, 2.0, 2.0, 5.0, 7.0];
        let b = [2.0, 3.0, 5.0, 8.0, 9.0, 9.0];
        let r = wilcoxon_exact(&a, &b).unwrap();
        assert!((r.p_value - enumerate_p(&a, &b)).abs() < 1e-12);
        let r = wilcoxon_exact(&b, &a).unwrap();
        assert!((r.p_value - enumerate_p(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn normal_path_hand_value() {
        // n = m = 10, no ties, a below b: R = 55, μ = 105, σ² = 175
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b: Vec<f64> = (11..=20).map(f64::from).collect();
        let r = wilcoxon_normal(&a, &b).unwrap();
        let z = (50.0 - 0.5) / 175f64.sqrt();
        assert!((r.p_value - erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(r.p_value < 2e-4);
    }

    #[test]
    fn rejects_tiny_samples() {
        assert!(wilcoxon_rank_sum(&[1.0], &[2.0, 3.0]).is_err());
        assert!(wilcoxon_rank_sum(&[1.0, f64::NAN], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn midranks() {
        let r = pooled_ranks(&[10.0, 20.0], &[20.0, 30.0]).unwrap();
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }

    fn record(alg: &str, trace: Vec<f64>) -> RunRecord {
        RunRecord {
            problem: "p".into(),
            algorithm: alg.into(),
            run: 0,
            seed: 0,
            budget: trace.len(),
            result: RunResult {
                best_solution: vec![],
                best_fitness: *trace.last().unwrap(),
                evaluations: trace.len(),
                best_so_far: trace,
                losses: vec![],
                generations: 0,
                elapsed_seconds: 0.0,
            },
        }
    }

    #[test]
    fn normalization_endpoints() {
        let recs = vec![record("a", vec![10.0]), record("b", vec![20.0]), record("c", vec![30.0])];
        let n = normalize_costs(&recs, "p").unwrap();
        let means: Vec<f64> = n.curves.iter().map(|c| c.mean[0]).collect();
        assert_eq!(means, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_trace_normalizes_to_zero() {
        let n = normalize_costs(&[record("a", vec![4.0; 5])], "p").unwrap();
        assert_eq!(n.curves[0].mean, vec![0.0; 5]);
        assert!(normalize_costs(&[], "p").is_err());
    }

    #[test]
    fn two_algorithm_hand_normalization() {
        // global min 1, max 9
        let recs = vec![
            record("x", vec![9.0, 5.0, 1.0]),
            record("x", vec![7.0, 7.0, 3.0]),
            record("y", vec![8.0, 6.0, 6.0]),
        ];
        let n = normalize_costs(&recs, "p").unwrap();
        let x = &n.curves[0];
        let y = &n.curves[1];
        assert_eq!(x.mean, vec![0.875, 0.625, 0.125]);
        let s = (2.0f64 * 0.125f64.powi(2)).sqrt();
        assert!((x.std[0] - s).abs() < 1e-15);
        assert_eq!(y.mean, vec![0.875, 0.625, 0.625]);
        assert_eq!(y.std, vec![0.0; 3]);
    }

    #[test]
    fn downsampling() {
        assert_eq!(downsample_indices(3, 500), vec![0, 1, 2]);
        let idx = downsample_indices(20_000, 500);
        assert_eq!(idx.len(), 500);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 19_999);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn descriptive_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn normalized_values_in_unit_interval(
            traces in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 1..20), 1..6)
        ) {
            let recs: Vec<RunRecord> = traces.into_iter().enumerate().map(|(i, mut t)| {
                // best-so-far form
                for k in 1..t.len() { t[k] = t[k].min(t[k - 1]); }
                RunRecord {
                    problem: "p".into(),
                    algorithm: format!("a{}", i % 2),
                    run: i,
                    seed: 0,
                    budget: t.len(),
                    result: crate::evolution::RunResult {
                        best_solution: vec![],
                        best_fitness: *t.last().unwrap(),
                        evaluations: t.len(),
                        best_so_far: t,
                        losses: vec![],
                        generations: 0,
                        elapsed_seconds: 0.0,
                    },
                }
            }).collect();
            let n = normalize_costs(&recs, "p").unwrap();
            for c in &n.curves {
                prop_assert!(c.mean.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn p_value_is_a_probability(
            a in prop::collection::vec(-10i32..10, 2..12),
            b in prop::collection::vec(-10i32..10, 2..12),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = wilcoxon_rank_sum(&a, &b).unwrap();
            prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            let swapped = wilcoxon_rank_sum(&b, &a).unwrap();
            prop_assert!((r.p_value - swapped.p_value).abs() < 1e-12);
        }
    }
}
