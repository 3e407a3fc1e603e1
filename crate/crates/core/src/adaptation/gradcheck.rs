//! Central finite-difference check of [`backward`](super::backward).
//!
//! Each instance draws parameters, a population, fitness values, dropout
//! masks and regression targets, then compares every analytic gradient entry
//! with `(L(θ + h e_k) − L(θ − h e_k)) / 2h`, where `L` is recomputed by the
//! forward pass alone with the masks frozen.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::{adaptation_loss, backward, init_theta};
use crate::numerics::{Matrix, RngStream};
use crate::operators::{forward, DropoutMasks, Dims, OperatorSettings, ThetaParams, THETA_TENSOR_NAMES};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckConfig {
    pub instances: usize,
    pub population: usize,
    pub dims: Dims,
    pub step: f64,
    pub tolerance: f64,
    /// Drop probability used for both operators' masks.
    pub dropout: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            population: 6,
            dims: Dims {
                dim: 5,
                attention: 4,
                hidden: 4,
            },
            step: 1e-5,
            tolerance: 1e-4,
            dropout: 0.5,
            seed: 2024,
        }
    }
}

/// Largest mismatch found, with its location.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradMismatch {
    pub instance: usize,
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub instances: usize,
    pub entries_checked: usize,
    pub failures: usize,
    pub worst: Option<GradMismatch>,
    pub elapsed_seconds: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

struct Instance {
    theta: ThetaParams,
    population: Matrix,
    fitness: Vec<f64>,
    masks: DropoutMasks,
    targets: Matrix,
    settings: OperatorSettings,
}

impl Instance {
    fn draw(cfg: &GradCheckConfig, index: usize) -> Result<Self> {
        let mut rng = RngStream::new(cfg.seed, index as u64);
        let dims = cfg.dims;
        let n = cfg.population;
        let uniform = |rows: usize, cols: usize, scale: f64, rng: &mut RngStream| {
            let data = (0..rows * cols)
                .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            Matrix::from_vec(rows, cols, data)
        };
        let mut theta = init_theta(dims, &mut rng);
        // nonzero biases so every path carries gradient
        theta.crossover.b_in = uniform(1, dims.hidden, 0.5, &mut rng)?;
        theta.crossover.b_out = uniform(1, dims.dim, 0.5, &mut rng)?;
        theta.mutation.b_in = uniform(1, dims.hidden, 0.5, &mut rng)?;
        theta.mutation.b_out = uniform(1, dims.dim, 0.5, &mut rng)?;
        let population = uniform(n, dims.dim, 2.0, &mut rng)?;
        let fitness: Vec<f64> = (0..n).map(|_| 10.0 * rng.random::<f64>()).collect();
        let settings = OperatorSettings {
            crossover_dropout: cfg.dropout,
            mutation_dropout: cfg.dropout,
            // alternate between standardized and raw attention inputs
            standardize_inputs: index % 2 == 0,
            ..Default::default()
        };
        let masks = DropoutMasks::sample(n, dims.hidden, &settings, &mut rng)?;
        let offspring = forward(&population, &fitness, &theta, &settings, &masks)?.offspring;
        let noise = uniform(n, dims.dim, 0.5, &mut rng)?;
        let targets = offspring.add(&noise)?;
        Ok(Self {
            theta,
            population,
            fitness,
            masks,
            targets,
            settings,
        })
    }

    fn loss(&self, theta: &ThetaParams) -> Result<f64> {
        let trace = forward(&self.population, &self.fitness, theta, &self.settings, &self.masks)?;
        adaptation_loss(&trace.offspring, &self.targets)
    }
}

/// Runs the finite-difference comparison over `cfg.instances` random
/// instances.
pub fn run_gradcheck(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let start = Instant::now();
    let mut report = GradCheckReport {
        instances: cfg.instances,
        entries_checked: 0,
        failures: 0,
        worst: None,
        elapsed_seconds: 0.0,
    };
    for index in 0..cfg.instances {
        let inst = Instance::draw(cfg, index)?;
        let trace = forward(
            &inst.population,
            &inst.fitness,
            &inst.theta,
            &inst.settings,
            &inst.masks,
        )?;
        let grads = backward(&trace, &inst.targets)?;
        let mut probe = inst.theta.clone();
        for t in 0..THETA_TENSOR_NAMES.len() {
            let len = probe.tensors()[t].len();
            for k in 0..len {
                let original = probe.tensors()[t].as_slice()[k];
                probe.tensors_mut()[t].as_mut_slice()[k] = original + cfg.step;
                let plus = inst.loss(&probe)?;
                probe.tensors_mut()[t].as_mut_slice()[k] = original - cfg.step;
                let minus = inst.loss(&probe)?;
                probe.tensors_mut()[t].as_mut_slice()[k] = original;

                let numeric = (plus - minus) / (2.0 * cfg.step);
                let analytic = grads.tensors()[t].as_slice()[k];
                let err = relative_error(analytic, numeric);
                report.entries_checked += 1;
                if !(err <= cfg.tolerance) {
                    report.failures += 1;
                }
                if report.worst.as_ref().map_or(true, |w| err > w.relative_error) {
                    report.worst = Some(GradMismatch {
                        instance: index,
                        tensor: THETA_TENSOR_NAMES[t],
                        index: k,
                        analytic,
                        numeric,
                        relative_error: err,
                    });
                }
            }
        }
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gradcheck_passes() {
        let cfg = GradCheckConfig {
            instances: 4,
            ..Default::default()
        };
        let report = run_gradcheck(&cfg).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.entries_checked, 4 * 154);
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.0001) - 1e-4 / 1.0001).abs() < 1e-12);
    }
}
