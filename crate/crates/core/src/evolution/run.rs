use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Black-box objective: one finite value per `d`-vector, lower is better.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

impl Objective for crate::benchmarks::Problem {
    fn evaluate(&self, x: &[f64]) -> f64 {
        crate::benchmarks::Problem::evaluate(self, x)
    }
}

/// Outcome of one optimizer run. Shared by every algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best_solution: Vec<f64>,
    pub best_fitness: f64,
    /// Running minimum after every evaluation; length = `evaluations`.
    pub best_so_far: Vec<f64>,
    /// Adaptation loss per generation (empty for baselines).
    pub losses: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    /// Wall-clock time; never serialized so that records are reproducible.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl RunResult {
    /// Copy with the wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> RunResult {
        RunResult {
            elapsed_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Budgeted evaluation wrapper that records the best-so-far trace.
pub struct Evaluator<'a, O: Objective + ?Sized> {
    objective: &'a O,
    budget: usize,
    best_so_far: Vec<f64>,
    best_fitness: f64,
    best_solution: Vec<f64>,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    pub fn new(objective: &'a O, budget: usize) -> Self {
        Self {
            objective,
            budget,
            best_so_far: Vec::with_capacity(budget),
            best_fitness: f64::INFINITY,
            best_solution: Vec::new(),
        }
    }

    pub fn used(&self) -> usize {
        self.best_so_far.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used()
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if self.used() >= self.budget {
            return Err(Error::InvalidArgument(format!(
                "evaluation budget of {} exhausted",
                self.budget
            )));
        }
        let value = self.objective.evaluate(x);
        if !value.is_finite() {
            return Err(Error::Objective {
                evaluation: self.used() + 1,
                value,
            });
        }
        if value < self.best_fitness {
            self.best_fitness = value;
            self.best_solution = x.to_vec();
        }
        self.best_so_far.push(self.best_fitness);
        Ok(value)
    }

    /// Evaluates every row of `rows`.
    pub fn evaluate_rows<'r>(&mut self, rows: impl Iterator<Item = &'r [f64]>) -> Result<Vec<f64>> {
        rows.map(|r| self.evaluate(r)).collect()
    }

    pub fn finish(self, generations: usize, losses: Vec<f64>, elapsed_seconds: f64) -> RunResult {
        RunResult {
            best_solution: self.best_solution,
            best_fitness: self.best_fitness,
            evaluations: self.best_so_far.len(),
            best_so_far: self.best_so_far,
            losses,
            generations,
            elapsed_seconds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_running_minimum() {
        let f = |x: &[f64]| x[0];
        let mut ev = Evaluator::new(&f, 4);
        for v in [3.0, 5.0, 1.0, 2.0] {
            ev.evaluate(&[v]).unwrap();
        }
        assert!(ev.evaluate(&[0.0]).is_err());
        let r = ev.finish(0, vec![], 0.0);
        assert_eq!(r.best_so_far, vec![3.0, 3.0, 1.0, 1.0]);
        assert_eq!(r.best_solution, vec![1.0]);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let f = |_: &[f64]| f64::NAN;
        let mut ev = Evaluator::new(&f, 4);
        assert!(matches!(
            ev.evaluate(&[0.0]),
            Err(Error::Objective { evaluation: 1, .. })
        ));
    }
}
