use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Canonical (unrotated, unshifted) synthetic test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    Sphere,
    Ellipsoidal,
    Rastrigin,
    Rosenbrock,
    BentCigar,
    Discus,
    SharpRidge,
    DifferentPowers,
    Schwefel,
    GriewankRosenbrock,
}

impl FunctionId {
    pub const ALL: [FunctionId; 10] = [
        FunctionId::Sphere,
        FunctionId::Ellipsoidal,
        FunctionId::Rastrigin,
        FunctionId::Rosenbrock,
        FunctionId::BentCigar,
        FunctionId::Discus,
        FunctionId::SharpRidge,
        FunctionId::DifferentPowers,
        FunctionId::Schwefel,
        FunctionId::GriewankRosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Sphere => "sphere",
            FunctionId::Ellipsoidal => "ellipsoidal",
            FunctionId::Rastrigin => "rastrigin",
            FunctionId::Rosenbrock => "rosenbrock",
            FunctionId::BentCigar => "bent_cigar",
            FunctionId::Discus => "discus",
            FunctionId::SharpRidge => "sharp_ridge",
            FunctionId::DifferentPowers => "different_powers",
            FunctionId::Schwefel => "schwefel",
            FunctionId::GriewankRosenbrock => "griewank_rosenbrock",
        }
    }

    fn min_dim(self) -> usize {
        match self {
            FunctionId::Rosenbrock | FunctionId::GriewankRosenbrock => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        FunctionId::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Unknown {
                kind: "benchmark function",
                name: s.to_string(),
            })
    }
}

/// Location of the Schwefel optimum in every coordinate.
pub const SCHWEFEL_ARGMIN: f64 = 420.968_746_359_982;
const SCHWEFEL_OFFSET: f64 = 418.982_887_272_433_8;

/// A benchmark function instance: identifier, dimension and search box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFunction {
    pub id: FunctionId,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BenchmarkFunction {
    /// Instance on the default box `[-100, 100]^dim`.
    pub fn new(id: FunctionId, dim: usize) -> Result<Self> {
        Self::with_bounds(id, dim, -100.0, 100.0)
    }

    pub fn with_bounds(id: FunctionId, dim: usize, lower: f64, upper: f64) -> Result<Self> {
        if dim < id.min_dim() {
            return Err(Error::InvalidArgument(format!(
                "{id} needs dimension >= {}, got {dim}",
                id.min_dim()
            )));
        }
        Ok(Self {
            id,
            dim,
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        })
    }

    /// Global minimum value over the function's natural domain.
    pub fn optimum_value(&self) -> f64 {
        0.0
    }

    /// Global minimizer over the function's natural domain.
    pub fn optimum_location(&self) -> Vec<f64> {
        match self.id {
            FunctionId::Rosenbrock | FunctionId::GriewankRosenbrock => vec![1.0; self.dim],
            FunctionId::Schwefel => vec![SCHWEFEL_ARGMIN; self.dim],
            _ => vec![0.0; self.dim],
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::shape(
                "evaluate",
                format!("{} expects {} coordinates, got {}", self.id, self.dim, x.len()),
            ));
        }
        Ok(evaluate(self.id, x))
    }
}

/// Evaluates function `id` at `x` (any length accepted by the function).
pub fn evaluate(id: FunctionId, x: &[f64]) -> f64 {
    let d = x.len();
    // exponent ramp t_i = i/(d-1), 0 for d = 1
    let ramp = |i: usize| if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
    match id {
        FunctionId::Sphere => x.iter().map(|v| v * v).sum(),
        FunctionId::Ellipsoidal => x
            .iter()
            .enumerate()
            .map(|(i, v)| 10f64.powf(6.0 * ramp(i)) * v * v)
            .sum(),
        FunctionId::Rastrigin => {
            10.0 * d as f64
                + x.iter()
                    .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                    .sum::<f64>()
        }
        FunctionId::Rosenbrock => x
            .windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum(),
        FunctionId::BentCigar => {
            x[0] * x[0] + 1e6 * x[1..].iter().map(|v| v * v).sum::<f64>()
        }
        FunctionId::Discus => 1e6 * x[0] * x[0] + x[1..].iter().map(|v| v * v).sum::<f64>(),
        FunctionId::SharpRidge => {
            x[0] * x[0] + 100.0 * x[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
        }
        FunctionId::DifferentPowers => x
            .iter()
            .enumerate()
            .map(|(i, v)| v.abs().powf(2.0 + 4.0 * ramp(i)))
            .sum::<f64>()
            .sqrt(),
        FunctionId::Schwefel => {
            SCHWEFEL_OFFSET * d as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
        }
        FunctionId::GriewankRosenbrock => {
            let terms: f64 = x
                .windows(2)
                .map(|w| {
                    let s = 100.0 * (w[0] * w[0] - w[1]).powi(2) + (1.0 - w[0]).powi(2);
                    s / 4000.0 - s.cos()
                })
                .sum();
            10.0 * terms / (d - 1) as f64 + 10.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use rand::Rng;

    #[test]
    fn optima_are_zero() {
        for id in FunctionId::ALL {
            let f = BenchmarkFunction::new(id, 7).unwrap();
            let v = f.evaluate(&f.optimum_location()).unwrap();
            assert!(v.abs() < 1e-9, "{id}: f(x*) = {v}");
        }
        assert_eq!(evaluate(FunctionId::Sphere, &[0.0; 5]), 0.0);
        assert_eq!(evaluate(FunctionId::Rastrigin, &[0.0; 5]), 0.0);
        assert_eq!(evaluate(FunctionId::Rosenbrock, &[1.0; 5]), 0.0);
    }

    #[test]
    fn hand_values() {
        assert_eq!(evaluate(FunctionId::Sphere, &[1.0, 2.0]), 5.0);
        assert_eq!(evaluate(FunctionId::Rosenbrock, &[0.0, 0.0]), 1.0);
        assert_eq!(evaluate(FunctionId::Ellipsoidal, &[1.0, 1.0]), 1.0 + 1e6);
        assert_eq!(evaluate(FunctionId::BentCigar, &[1.0, 1.0]), 1.0 + 1e6);
        assert_eq!(evaluate(FunctionId::Discus, &[1.0, 1.0]), 1e6 + 1.0);
        assert_eq!(evaluate(FunctionId::SharpRidge, &[1.0, 3.0, 4.0]), 1.0 + 500.0);
        assert!((evaluate(FunctionId::Rastrigin, &[0.5]) - (10.0 + 0.25 + 10.0)).abs() < 1e-12);
        // sqrt(|2|^2 + |2|^6)
        assert!((evaluate(FunctionId::DifferentPowers, &[2.0, 2.0]) - 68f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parse_names() {
        assert_eq!("bent-cigar".parse::<FunctionId>().unwrap(), FunctionId::BentCigar);
        assert_eq!("Sphere".parse::<FunctionId>().unwrap(), FunctionId::Sphere);
        assert!("ackley".parse::<FunctionId>().is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(BenchmarkFunction::new(FunctionId::Rosenbrock, 1).is_err());
        let f = BenchmarkFunction::new(FunctionId::Sphere, 3).unwrap();
        assert!(f.evaluate(&[0.0; 2]).is_err());
    }

    #[test]
    fn never_below_optimum_on_box() {
        let mut rng = RngStream::new(77, 0);
        for id in FunctionId::ALL {
            let f = BenchmarkFunction::new(id, 10).unwrap();
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..10).map(|_| rng.random_range(-100.0..=100.0)).collect();
                let v = f.evaluate(&x).unwrap();
                assert!(v.is_finite() && v >= f.optimum_value(), "{id}: {v}");
            }
        }
    }
}
