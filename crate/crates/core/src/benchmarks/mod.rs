//! Benchmark objectives: canonical synthetic functions and the UAV-lite
//! path-planning problem.

mod functions;
pub mod uav;

pub use functions::{evaluate, BenchmarkFunction, FunctionId, SCHWEFEL_ARGMIN};
pub use uav::{uav_path_cost, Cylinder, Region, UavScenario};

/// Any objective the harness can run: a synthetic function or a UAV scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Function(BenchmarkFunction),
    Uav { name: String, scenario: UavScenario },
}

impl Problem {
    /// Stable identifier, e.g. `sphere-d30` or `uav-default`.
    pub fn id(&self) -> String {
        match self {
            Problem::Function(f) => format!("{}-d{}", f.id, f.dim),
            Problem::Uav { name, .. } => format!("uav-{name}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Function(f) => f.dim,
            Problem::Uav { scenario, .. } => scenario.dim(),
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Problem::Function(f) => (f.lower.clone(), f.upper.clone()),
            Problem::Uav { scenario, .. } => scenario.bounds(),
        }
    }

    /// Evaluation budget used when an experiment does not set one.
    pub fn default_budget(&self) -> usize {
        match self {
            Problem::Function(_) => 20_000,
            Problem::Uav { .. } => 2_500,
        }
    }

    /// Objective value; the caller guarantees `x.len() == self.dim()`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Problem::Function(f) => evaluate(f.id, x),
            Problem::Uav { scenario, .. } => scenario
                .path_cost(x)
                .expect("decision vector length checked by the optimizer"),
        }
    }
}
