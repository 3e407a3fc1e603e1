//! Classical comparators: random search, DE/rand/1/bin and PSO with linearly
//! decaying inertia. All share the [`RunResult`] contract with the main
//! optimizer.

mod de;
mod pso;

pub use de::run_de;
pub use pso::{inertia_weight, run_pso, velocity_update};

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evolution::{run_abom, Evaluator, Objective, OptimizerConfig, RunResult};
use crate::numerics::{check_bounds, Matrix, RngStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineAlgorithm {
    RandomSearch,
    DifferentialEvolution,
    ParticleSwarm,
}

impl BaselineAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            BaselineAlgorithm::RandomSearch => "rs",
            BaselineAlgorithm::DifferentialEvolution => "de",
            BaselineAlgorithm::ParticleSwarm => "pso",
        }
    }
}

impl FromStr for BaselineAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rs" | "random_search" | "random-search" => Ok(BaselineAlgorithm::RandomSearch),
            "de" | "differential_evolution" => Ok(BaselineAlgorithm::DifferentialEvolution),
            "pso" | "particle_swarm" => Ok(BaselineAlgorithm::ParticleSwarm),
            _ => Err(Error::Unknown {
                kind: "baseline algorithm",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub algorithm: BaselineAlgorithm,
    pub population: usize,
    pub budget: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
    /// DE scale factor `F`.
    pub de_scale: f64,
    /// DE crossover rate `CR`.
    pub de_crossover: f64,
    pub pso_cognitive: f64,
    pub pso_social: f64,
    pub inertia_start: f64,
    pub inertia_end: f64,
    /// Velocity limit as a fraction of the box width per dimension.
    pub velocity_clamp: f64,
}

impl BaselineConfig {
    /// Defaults: N = 20, F = CR = 0.5, c1 = c2 = 2, inertia 0.9 → 0.4,
    /// velocity limit 20% of the box width.
    pub fn new(algorithm: BaselineAlgorithm, lower: Vec<f64>, upper: Vec<f64>, budget: usize) -> Self {
        Self {
            algorithm,
            population: 20,
            budget,
            lower,
            upper,
            seed: 0,
            de_scale: 0.5,
            de_crossover: 0.5,
            pso_cognitive: 2.0,
            pso_social: 2.0,
            inertia_start: 0.9,
            inertia_end: 0.4,
            velocity_clamp: 0.2,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Full generations after the initial population; random search has none.
    pub fn generations(&self) -> usize {
        match self.algorithm {
            BaselineAlgorithm::RandomSearch => 0,
            _ => (self.budget - self.population) / self.population,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_bounds(&self.lower, &self.upper).map_err(|e| Error::Config(e.to_string()))?;
        if self.budget == 0 {
            return Err(Error::Config("budget must be positive".into()));
        }
        if self.algorithm == BaselineAlgorithm::RandomSearch {
            return Ok(());
        }
        let min_pop = match self.algorithm {
            BaselineAlgorithm::DifferentialEvolution => 4,
            _ => 1,
        };
        if self.population < min_pop {
            return Err(Error::Config(format!(
                "{} needs population >= {min_pop}, got {}",
                self.algorithm.name(),
                self.population
            )));
        }
        if self.budget < self.population {
            return Err(Error::Config(format!(
                "budget {} smaller than population {}",
                self.budget, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.de_crossover) {
            return Err(Error::Config(format!("CR {} outside [0, 1]", self.de_crossover)));
        }
        if !(self.velocity_clamp > 0.0) {
            return Err(Error::Config("velocity clamp must be positive".into()));
        }
        Ok(())
    }
}

/// Dispatches on `config.algorithm`.
pub fn run_baseline<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    match config.algorithm {
        BaselineAlgorithm::RandomSearch => run_random_search(objective, config, rng),
        BaselineAlgorithm::DifferentialEvolution => run_de(objective, config, rng),
        BaselineAlgorithm::ParticleSwarm => run_pso(objective, config, rng),
    }
}

/// `budget` independent uniform draws over the box.
pub fn run_random_search<O: Objective + ?Sized>(
    objective: &O,
    config: &BaselineConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    config.validate()?;
    let start = Instant::now();
    let mut evaluator = Evaluator::new(objective, config.budget);
    let mut x = vec![0.0; config.dim()];
    for _ in 0..config.budget {
        fill_uniform(&mut x, &config.lower, &config.upper, rng);
        evaluator.evaluate(&x)?;
    }
    Ok(evaluator.finish(0, Vec::new(), start.elapsed().as_secs_f64()))
}

/// Ablated optimizer run; the flags live in `config.ablation`.
pub fn run_ablation<O: Objective + ?Sized>(
    objective: &O,
    config: &OptimizerConfig,
    rng: &mut RngStream,
) -> Result<RunResult> {
    run_abom(objective, config, rng)
}

fn fill_uniform(x: &mut [f64], lower: &[f64], upper: &[f64], rng: &mut RngStream) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = lo + (hi - lo) * rng.random::<f64>();
    }
}

/// `n` points drawn uniformly over the box, row-major.
fn uniform_population(n: usize, lower: &[f64], upper: &[f64], rng: &mut RngStream) -> Matrix {
    let mut m = Matrix::zeros(n, lower.len());
    for i in 0..n {
        fill_uniform(m.row_mut(i), lower, upper, rng);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{evaluate, FunctionId};
    use crate::evolution::Ablation;

    fn sphere(x: &[f64]) -> f64 {
        evaluate(FunctionId::Sphere, x)
    }

    #[test]
    fn random_search_contract() {
        let cfg = BaselineConfig::new(BaselineAlgorithm::RandomSearch, vec![-1.0; 3], vec![1.0; 3], 137);
        let r = run_random_search(&sphere, &cfg, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(r.evaluations, 137);
        assert!(r.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.best_solution.iter().all(|v| v.abs() <= 1.0));
        let constant = |_: &[f64]| 4.25;
        let r = run_random_search(&constant, &cfg, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(r.best_fitness, 4.25);
    }

    #[test]
    fn random_search_aborts_on_nan() {
        let cfg = BaselineConfig::new(BaselineAlgorithm::RandomSearch, vec![-1.0], vec![1.0], 5);
        let bad = |_: &[f64]| f64::NAN;
        assert!(run_random_search(&bad, &cfg, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn every_baseline_reproducible_and_in_box() {
        for alg in [
            BaselineAlgorithm::RandomSearch,
            BaselineAlgorithm::DifferentialEvolution,
            BaselineAlgorithm::ParticleSwarm,
        ] {
            let mut cfg = BaselineConfig::new(alg, vec![-2.0; 5], vec![3.0; 5], 400);
            cfg.population = 10;
            let inside = |x: &[f64]| {
                assert!(x.iter().all(|v| (-2.0..=3.0).contains(v)), "{alg:?} left box");
                sphere(x)
            };
            let a = run_baseline(&inside, &cfg, &mut RngStream::new(8, 1)).unwrap();
            let b = run_baseline(&inside, &cfg, &mut RngStream::new(8, 1)).unwrap();
            assert_eq!(a.without_timing(), b.without_timing());
            assert_eq!(a.evaluations, 400);
            assert!(a.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn parse_algorithm_names() {
        assert_eq!("PSO".parse::<BaselineAlgorithm>().unwrap(), BaselineAlgorithm::ParticleSwarm);
        assert_eq!("rs".parse::<BaselineAlgorithm>().unwrap(), BaselineAlgorithm::RandomSearch);
        assert!("cmaes".parse::<BaselineAlgorithm>().is_err());
    }

    #[test]
    fn ablation_no_mutation_smoke() {
        let mut cfg = OptimizerConfig::new(vec![-100.0; 5], vec![100.0; 5], 600);
        cfg.ablation = Ablation {
            no_mutation: true,
            ..Ablation::default()
        };
        let r = run_ablation(&sphere, &cfg, &mut RngStream::new(12, 0)).unwrap();
        assert_eq!(r.evaluations, 600);
        assert!(r.best_so_far.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.best_fitness.is_finite());
    }
}
