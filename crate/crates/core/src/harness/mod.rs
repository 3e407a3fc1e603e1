//! Experiment orchestration: seeded (problem × algorithm × run) grids,
//! persisted run records, statistics and report files.

mod config;
mod records;
mod report;
mod stats;

pub use config::{
    build_run_config, AlgorithmKind, AlgorithmSettings, AlgorithmSpec, ExperimentConfig,
    ProblemSpec, RunConfig, DEFAULT_UAV,
};
pub use records::{load_records, RecordStore, RunRecord, RECORDS_DIR, TIMINGS_FILE};
pub use report::{
    compute_report, emit_report, significance, Comparison, CurveSummary, FinalStats,
    Significance, StatsReport, Tally, ALPHA, CURVE_POINTS, REFERENCE_ALGORITHM,
};
pub use stats::{
    downsample_indices, mean_std, median, normalize_costs, normalize_value, wilcoxon_exact,
    wilcoxon_normal, wilcoxon_rank_sum, AlgorithmCurve, NormalizedCurves, WilcoxonResult,
    EXACT_LIMIT,
};

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::run_baseline;
use crate::benchmarks::Problem;
use crate::evolution::{run_abom, RunResult};
use crate::numerics::RngStream;
use crate::Result;

/// Environment variable that overrides every configured output directory.
pub const OUTPUT_DIR_ENV: &str = "ABOM_OUTPUT_DIR";

/// `configured`, unless the override variable is set and non-empty.
pub fn effective_output_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.to_path_buf(),
    }
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// `base_seed + hash(problem, algorithm, run)`, wrapping.
pub fn cell_seed(base_seed: u64, problem: &str, algorithm: &str, run: usize) -> u64 {
    let bytes = problem
        .bytes()
        .chain([0])
        .chain(algorithm.bytes())
        .chain([0])
        .chain((run as u64).to_le_bytes());
    base_seed.wrapping_add(fnv1a(bytes))
}

/// Runs one configured algorithm on `problem` with the given seed.
pub fn run_single(problem: &Problem, config: &RunConfig, seed: u64) -> Result<RunResult> {
    let mut rng = RngStream::new(seed, 0);
    match config {
        RunConfig::Abom(c) => run_abom(problem, c, &mut rng),
        RunConfig::Baseline(c) => run_baseline(problem, c, &mut rng),
    }
}

struct Cell {
    problem: usize,
    problem_id: String,
    algorithm: String,
    run: usize,
    seed: u64,
    config: RunConfig,
}

/// Executes every cell of the grid in parallel and returns the records in
/// grid order (problem, algorithm, run). Cells whose record already exists in
/// the output directory are loaded instead of rerun. Relative scenario paths
/// resolve against `base_dir`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let problems: Vec<Problem> = config
        .problems
        .iter()
        .map(|p| p.resolve(base_dir))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (pi, problem) in problems.iter().enumerate() {
        let problem_id = problem.id();
        let budget = config.budget.unwrap_or_else(|| problem.default_budget());
        for spec in &config.algorithms {
            let label = spec.label();
            for run in 0..config.runs {
                let seed = cell_seed(config.base_seed, &problem_id, &label, run);
                let run_config = build_run_config(spec, problem, budget, config.population, seed)?;
                run_config.validate()?;
                cells.push(Cell {
                    problem: pi,
                    problem_id: problem_id.clone(),
                    algorithm: label.clone(),
                    run,
                    seed,
                    config: run_config,
                });
            }
        }
    }

    let store = RecordStore::open(&effective_output_dir(&config.output_dir))?;
    let mut slots: Vec<Option<RunRecord>> = cells
        .iter()
        .map(|c| {
            store
                .load(&c.problem_id, &c.algorithm, c.run)
                .filter(|r| r.seed == c.seed && r.budget == c.config.budget())
        })
        .collect();
    let pending: Vec<usize> = (0..cells.len()).filter(|&i| slots[i].is_none()).collect();

    let (tx, rx) = mpsc::channel::<(usize, RunRecord, f64)>();
    let written = std::thread::scope(|scope| {
        // the single writer serializes every file append
        let writer = scope.spawn(|| -> Result<Vec<(usize, RunRecord)>> {
            let mut done = Vec::new();
            for (index, record, elapsed) in rx {
                store.write(&record)?;
                store.append_timing(&record, elapsed)?;
                done.push((index, record));
            }
            Ok(done)
        });
        let outcome = pending.par_iter().try_for_each_with(tx, |tx, &i| -> Result<()> {
            let cell = &cells[i];
            let start = Instant::now();
            let result = run_single(&problems[cell.problem], &cell.config, cell.seed)?;
            let record = RunRecord {
                problem: cell.problem_id.clone(),
                algorithm: cell.algorithm.clone(),
                run: cell.run,
                seed: cell.seed,
                budget: cell.config.budget(),
                result: result.without_timing(),
            };
            // a closed channel means the writer failed; its error is reported below
            let _ = tx.send((i, record, start.elapsed().as_secs_f64()));
            Ok(())
        });
        let written = writer.join().expect("record writer panicked");
        outcome.and(written)
    })?;

    for (i, record) in written {
        slots[i] = Some(record);
    }
    Ok(slots.into_iter().map(|r| r.expect("every cell ran or was loaded")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::FunctionId;

    #[test]
    fn seeds_differ_per_cell() {
        let a = cell_seed(0, "sphere-d2", "abom", 0);
        assert_ne!(a, cell_seed(0, "sphere-d2", "abom", 1));
        assert_ne!(a, cell_seed(0, "sphere-d2", "rs", 0));
        assert_ne!(a, cell_seed(0, "sphere-d3", "abom", 0));
        assert_eq!(a.wrapping_add(5), cell_seed(5, "sphere-d2", "abom", 0));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(*b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(*b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(*b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn unresolvable_problem_fails_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(
            vec![
                ProblemSpec::function(FunctionId::Sphere, 2),
                ProblemSpec::function(FunctionId::Rosenbrock, 1),
            ],
            vec![AlgorithmKind::Rs.into()],
        );
        cfg.output_dir = dir.path().join("out");
        cfg.budget = Some(50);
        assert!(run_experiment(&cfg, None).is_err());
        assert!(!cfg.output_dir.exists());
    }
}
