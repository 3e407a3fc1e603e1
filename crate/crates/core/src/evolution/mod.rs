//! The outer optimization loop: Latin hypercube initialization, then
//! reproduce → clamp → evaluate → elitism → one AdamW step per generation.

mod config;
mod run;

pub use config::{Ablation, LossPairing, OptimizerConfig};
pub use run::{Evaluator, Objective, RunResult};

use std::time::Instant;

use crate::adaptation::{
    adamw_step, adaptation_loss, backward_from_output, init_theta, AdamWState,
};
use crate::numerics::{latin_hypercube, Matrix, RngStream};
use crate::operators::{reproduce, ThetaParams};
use crate::{Error, Result};

// Stream tags for the sub-streams of one run.
const STREAM_INIT: u64 = 0;
const STREAM_THETA: u64 = 1;
const STREAM_GENERATION: u64 = 2;

/// The `n` lowest-fitness rows of parents ∪ offspring, sorted ascending.
/// Ties prefer parents, then the lower original index.
pub fn elitism_merge(
    pop: &Matrix,
    fit: &[f64],
    offspring: &Matrix,
    off_fit: &[f64],
    n: usize,
) -> Result<(Matrix, Vec<f64>)> {
    if pop.rows() != n || offspring.rows() != n || fit.len() != n || off_fit.len() != n {
        return Err(Error::shape(
            "elitism_merge",
            format!(
                "expected {n} parents and offspring, got {}/{} and {}/{}",
                pop.rows(),
                fit.len(),
                offspring.rows(),
                off_fit.len()
            ),
        ));
    }
    if pop.cols() != offspring.cols() {
        return Err(Error::shape(
            "elitism_merge",
            format!("dimension {} vs {}", pop.cols(), offspring.cols()),
        ));
    }
    let mut order: Vec<usize> = (0..2 * n).collect();
    let value = |k: usize| if k < n { fit[k] } else { off_fit[k - n] };
    // stable: parents precede offspring, indices ascending
    order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
    let mut elites = Matrix::zeros(n, pop.cols());
    let mut elite_fit = Vec::with_capacity(n);
    for (row, &k) in order.iter().take(n).enumerate() {
        let src = if k < n { pop.row(k) } else { offspring.row(k - n) };
        elites.row_mut(row).copy_from_slice(src);
        elite_fit.push(value(k));
    }
    Ok((elites, elite_fit))
}

/// Elementwise clamp into `[lower, upper]`.
pub fn clamp_to_bounds(pop: &Matrix, lower: &[f64], upper: &[f64]) -> Matrix {
    let mut out = pop.clone();
    for i in 0..out.rows() {
        for ((v, &lo), &hi) in out.row_mut(i).iter_mut().zip(lower).zip(upper) {
            *v = v.clamp(lo, hi);
        }
    }
    out
}

/// Full outcome of an optimizer run, including the parameters.
#[derive(Clone, Debug)]
pub struct AbomOutcome {
    pub result: RunResult,
    pub initial_theta: ThetaParams,
    pub final_theta: ThetaParams,
    /// Generations whose update was skipped because of non-finite gradients.
    pub skipped_updates: usize,
}

/// Runs the attention-based optimizer on `objective` and returns the run
/// record.
pub fn run_abom<O: Objective + ?Sized>(
    objective: &O,
    config: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    Ok(run_abom_detailed(objective, config, rng)?.result)
}

/// [`run_abom`] that also returns the initial and final parameters.
pub fn run_abom_detailed<O: Objective + ?Sized>(
    objective: &O,
    config: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<AbomOutcome> {
    config.validate()?;
    let start = Instant::now();
    let n = config.population;
    let dims = config.dims()?;
    let settings = config.operator_settings();
    let (lower, upper) = (&config.lower, &config.upper);

    let mut evaluator = Evaluator::new(objective, config.budget);
    let mut pop = latin_hypercube(n, lower, upper, &mut rng.fork(STREAM_INIT))?;
    let mut fit = evaluator.evaluate_rows(pop.row_iter())?;

    let mut theta = init_theta(dims, &mut rng.fork(STREAM_THETA));
    let initial_theta = theta.clone();
    let mut adam = AdamWState::new(&theta, config.adamw);
    let generations = config.generations();
    let mut losses = Vec::with_capacity(generations);
    let mut skipped_updates = 0;

    for t in 0..generations {
        let mut gen_rng = rng.fork2(STREAM_GENERATION, t as u64);
        let (raw_offspring, trace) = reproduce(&pop, &fit, &theta, &settings, &mut gen_rng)?;
        let offspring = clamp_to_bounds(&raw_offspring, lower, upper);
        let off_fit = evaluator.evaluate_rows(offspring.row_iter())?;
        let (elites, elite_fit) = elitism_merge(&pop, &fit, &offspring, &off_fit, n)?;

        let targets = pairing_targets(config.pairing, &elites, &off_fit);
        losses.push(adaptation_loss(&offspring, &targets)?);

        if !config.ablation.no_adaptation {
            // ∂/∂P̂ of Σ(clamp(P̂) − T)²; zero where the clamp was active
            let mut upstream = offspring.sub(&targets)?.scale(2.0);
            for ((g, raw), clamped) in upstream
                .as_mut_slice()
                .iter_mut()
                .zip(raw_offspring.as_slice())
                .zip(offspring.as_slice())
            {
                if raw != clamped {
                    *g = 0.0;
                }
            }
            let grads = backward_from_output(&trace, &upstream)?;
            match adamw_step(&mut theta, &grads, &mut adam) {
                Ok(()) => {}
                Err(Error::NonFinite(_)) => skipped_updates += 1,
                Err(e) => return Err(e),
            }
        }

        pop = elites;
        fit = elite_fit;
    }

    let result = evaluator.finish(generations, losses, start.elapsed().as_secs_f64());
    Ok(AbomOutcome {
        result,
        initial_theta,
        final_theta: theta,
        skipped_updates,
    })
}

/// Regression targets aligned with offspring rows.
fn pairing_targets(pairing: LossPairing, elites: &Matrix, off_fit: &[f64]) -> Matrix {
    match pairing {
        LossPairing::GenerationOrder => elites.clone(),
        LossPairing::FitnessSorted => {
            let mut order: Vec<usize> = (0..off_fit.len()).collect();
            order.sort_by(|&a, &b| off_fit[a].total_cmp(&off_fit[b]));
            let mut targets = Matrix::zeros(elites.rows(), elites.cols());
            for (rank, &row) in order.iter().enumerate() {
                targets.row_mut(row).copy_from_slice(elites.row(rank));
            }
            targets
        }
    }
}
