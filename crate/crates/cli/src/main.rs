use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abom::adaptation::gradcheck::{run_gradcheck, GradCheckConfig};
use abom::benchmarks::FunctionId;
use abom::harness::{
    build_run_config, effective_output_dir, emit_report, load_records, run_experiment,
    run_single, AlgorithmSpec, ExperimentConfig, ProblemSpec, RunRecord, DEFAULT_UAV,
    OUTPUT_DIR_ENV,
};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abom", version, about = "Attention-based black-box optimizer and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid described by a JSON file, then write the report.
    Run {
        experiment: PathBuf,
        /// Skip report generation after the runs.
        #[arg(long)]
        no_report: bool,
    },
    /// Write traces.csv, summary.json and curves.csv from stored records.
    Report {
        records_dir: PathBuf,
        /// Report directory; defaults to the records directory.
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Single run: prints the best fitness and writes its trace.
    Solve {
        /// abom, abom_no_crossover, abom_no_mutation, abom_no_adaptation, rs, de or pso.
        #[arg(long)]
        algo: String,
        /// Function name, `uav` for the built-in scenario, or a scenario JSON path.
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 30)]
        dim: usize,
        /// Defaults to 20000 for functions and 2500 for UAV scenarios.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        population: usize,
        /// Output directory for the trace.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Finite-difference check of the analytic gradients; nonzero exit on failure.
    Gradcheck {
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_problem(name: &str, dim: usize) -> Result<ProblemSpec> {
    if name.eq_ignore_ascii_case("uav") || name.eq_ignore_ascii_case("uav-default") {
        return Ok(ProblemSpec::Uav {
            uav: DEFAULT_UAV.into(),
        });
    }
    if name.ends_with(".json") {
        return Ok(ProblemSpec::Uav { uav: name.into() });
    }
    Ok(ProblemSpec::function(name.parse::<FunctionId>()?, dim))
}

fn cmd_run(path: &Path, no_report: bool) -> Result<()> {
    let config = ExperimentConfig::load(path)
        .with_context(|| format!("reading experiment {}", path.display()))?;
    let out = effective_output_dir(&config.output_dir);
    let records = run_experiment(&config, path.parent())?;
    println!("{} run records in {}", records.len(), out.display());
    if !no_report {
        let report = emit_report(&records, &out)?;
        for t in &report.tallies {
            println!(
                "{} vs {}: +{} ≈{} −{}",
                t.algorithm, report.reference, t.better, t.tie, t.worse
            );
        }
    }
    Ok(())
}

fn cmd_report(dir: &Path, out: Option<PathBuf>) -> Result<()> {
    let records = load_records(dir).with_context(|| format!("loading records from {}", dir.display()))?;
    let out = out.unwrap_or_else(|| dir.to_path_buf());
    let report = emit_report(&records, &out)?;
    println!(
        "{} records, {} problems; report written to {}",
        records.len(),
        report.finals.iter().map(|f| &f.problem).collect::<std::collections::BTreeSet<_>>().len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    algo: &str,
    problem: &str,
    dim: usize,
    budget: Option<usize>,
    seed: u64,
    population: usize,
    out: &Path,
) -> Result<()> {
    let problem = parse_problem(problem, dim)?.resolve(None)?;
    let spec = AlgorithmSpec::Id(algo.to_string());
    let budget = budget.unwrap_or_else(|| problem.default_budget());
    let config = build_run_config(&spec, &problem, budget, population, seed)?;
    config.validate()?;
    let result = run_single(&problem, &config, seed)?;
    let record = RunRecord {
        problem: problem.id(),
        algorithm: spec.label(),
        run: 0,
        seed,
        budget,
        result,
    };
    let out = effective_output_dir(out);
    std::fs::create_dir_all(&out)?;
    let path = out.join(format!("{}__{}__seed{seed}.csv", record.problem, record.algorithm));
    let mut text = String::from("evaluation,best_fitness\n");
    for (k, v) in record.result.best_so_far.iter().enumerate() {
        text.push_str(&format!("{},{v:?}\n", k + 1));
    }
    std::fs::write(&path, text)?;
    println!("best_fitness {:?}", record.result.best_fitness);
    println!(
        "evaluations {} in {:.3} s; trace {}",
        record.result.evaluations,
        record.result.elapsed_seconds,
        path.display()
    );
    Ok(())
}

fn cmd_gradcheck(instances: Option<usize>, seed: Option<u64>) -> Result<bool> {
    let mut config = GradCheckConfig::default();
    if let Some(n) = instances {
        config.instances = n;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    let report = run_gradcheck(&config)?;
    println!(
        "{} instances, {} entries, {} failures, worst relative error {:.3e} ({}), {:.2} s",
        report.instances,
        report.entries_checked,
        report.failures,
        report.worst.as_ref().map_or(0.0, |w| w.relative_error),
        report.worst.as_ref().map_or("-".to_string(), |w| w.tensor.to_string()),
        report.elapsed_seconds
    );
    if let Some(w) = report.worst.as_ref().filter(|_| !report.passed()) {
        eprintln!("worst mismatch: {w:?}");
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            experiment,
            no_report,
        } => cmd_run(&experiment, no_report).map(|_| true),
        Command::Report { records_dir, out } => cmd_report(&records_dir, out).map(|_| true),
        Command::Solve {
            algo,
            problem,
            dim,
            budget,
            seed,
            population,
            out,
        } => cmd_solve(&algo, &problem, dim, budget, seed, population, &out).map(|_| true),
        Command::Gradcheck { instances, seed } => cmd_gradcheck(instances, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gradient check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_names() {
        assert!(matches!(parse_problem("uav", 30).unwrap(), ProblemSpec::Uav { .. }));
        assert!(matches!(parse_problem("s.json", 30).unwrap(), ProblemSpec::Uav { .. }));
        assert_eq!(
            parse_problem("rastrigin", 5).unwrap(),
            ProblemSpec::function(FunctionId::Rastrigin, 5)
        );
        assert!(parse_problem("nope", 5).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
