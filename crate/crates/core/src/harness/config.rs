use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaptation::AdamWConfig;
use crate::baselines::{BaselineAlgorithm, BaselineConfig};
use crate::benchmarks::{BenchmarkFunction, FunctionId, Problem, UavScenario};
use crate::evolution::{Ablation, LossPairing, OptimizerConfig};
use crate::{Error, Result};

/// Scenario name that selects the built-in UAV scenario instead of a file.
pub const DEFAULT_UAV: &str = "default";

/// One problem entry: a synthetic function or a UAV scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Function {
        function: FunctionId,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    /// Path to a scenario JSON file, or `"default"`.
    Uav { uav: String },
}

impl ProblemSpec {
    pub fn function(function: FunctionId, dim: usize) -> Self {
        ProblemSpec::Function {
            function,
            dim,
            lower: None,
            upper: None,
        }
    }

    /// Builds the problem; relative scenario paths resolve against `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<Problem> {
        match self {
            ProblemSpec::Function {
                function,
                dim,
                lower,
                upper,
            } => {
                let f = BenchmarkFunction::with_bounds(
                    *function,
                    *dim,
                    lower.unwrap_or(-100.0),
                    upper.unwrap_or(100.0),
                )?;
                Ok(Problem::Function(f))
            }
            ProblemSpec::Uav { uav } if uav == DEFAULT_UAV => Ok(Problem::Uav {
                name: DEFAULT_UAV.into(),
                scenario: UavScenario::default_lite(),
            }),
            ProblemSpec::Uav { uav } => {
                let mut path = PathBuf::from(uav);
                if path.is_relative() {
                    if let Some(base) = base {
                        path = base.join(path);
                    }
                }
                let scenario = UavScenario::load(&path).map_err(|e| {
                    Error::Config(format!("UAV scenario {}: {e}", path.display()))
                })?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| uav.clone());
                Ok(Problem::Uav { name, scenario })
            }
        }
    }
}

/// Algorithm family selected by an experiment entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Abom,
    AbomNoCrossover,
    AbomNoMutation,
    AbomNoAdaptation,
    Rs,
    De,
    Pso,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Abom,
        AlgorithmKind::AbomNoCrossover,
        AlgorithmKind::AbomNoMutation,
        AlgorithmKind::AbomNoAdaptation,
        AlgorithmKind::Rs,
        AlgorithmKind::De,
        AlgorithmKind::Pso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Abom => "abom",
            AlgorithmKind::AbomNoCrossover => "abom_no_crossover",
            AlgorithmKind::AbomNoMutation => "abom_no_mutation",
            AlgorithmKind::AbomNoAdaptation => "abom_no_adaptation",
            AlgorithmKind::Rs => "rs",
            AlgorithmKind::De => "de",
            AlgorithmKind::Pso => "pso",
        }
    }

    fn ablation(self) -> Option<Ablation> {
        let mut a = Ablation::default();
        match self {
            AlgorithmKind::Abom => {}
            AlgorithmKind::AbomNoCrossover => a.no_crossover = true,
            AlgorithmKind::AbomNoMutation => a.no_mutation = true,
            AlgorithmKind::AbomNoAdaptation => a.no_adaptation = true,
            _ => return None,
        }
        Some(a)
    }

    fn baseline(self) -> Option<BaselineAlgorithm> {
        match self {
            AlgorithmKind::Rs => Some(BaselineAlgorithm::RandomSearch),
            AlgorithmKind::De => Some(BaselineAlgorithm::DifferentialEvolution),
            AlgorithmKind::Pso => Some(BaselineAlgorithm::ParticleSwarm),
            _ => None,
        }
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

/// An algorithm entry with optional per-algorithm overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSettings {
    pub id: String,
    /// Label used in records and reports; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover_dropout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_dropout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<LossPairing>,
}

/// Either a bare id (`"pso"`) or an object with overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmSpec {
    Id(String),
    Detailed(AlgorithmSettings),
}

impl AlgorithmSpec {
    pub fn settings(&self) -> AlgorithmSettings {
        match self {
            AlgorithmSpec::Id(id) => AlgorithmSettings {
                id: id.clone(),
                ..AlgorithmSettings::default()
            },
            AlgorithmSpec::Detailed(s) => s.clone(),
        }
    }

    pub fn kind(&self) -> Result<AlgorithmKind> {
        self.settings().id.parse()
    }

    pub fn label(&self) -> String {
        let s = self.settings();
        s.name.unwrap_or(s.id)
    }
}

impl From<AlgorithmKind> for AlgorithmSpec {
    fn from(kind: AlgorithmKind) -> Self {
        AlgorithmSpec::Id(kind.name().to_string())
    }
}

/// Fully resolved configuration for one run of one algorithm.
#[derive(Clone, Debug, PartialEq)]
pub enum RunConfig {
    Abom(OptimizerConfig),
    Baseline(BaselineConfig),
}

impl RunConfig {
    pub fn budget(&self) -> usize {
        match self {
            RunConfig::Abom(c) => c.budget,
            RunConfig::Baseline(c) => c.budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::Abom(c) => c.validate(),
            RunConfig::Baseline(c) => c.validate(),
        }
    }
}

/// Builds the run configuration for `spec` on `problem`.
pub fn build_run_config(
    spec: &AlgorithmSpec,
    problem: &Problem,
    budget: usize,
    default_population: usize,
    seed: u64,
) -> Result<RunConfig> {
    let kind = spec.kind()?;
    let s = spec.settings();
    let (lower, upper) = problem.bounds();
    let population = s.population.unwrap_or(default_population);
    if let Some(ablation) = kind.ablation() {
        let mut c = OptimizerConfig::new(lower, upper, budget);
        c.population = population;
        c.seed = seed;
        c.ablation = ablation;
        if let Some(lr) = s.learning_rate {
            c.adamw = AdamWConfig {
                learning_rate: lr,
                ..AdamWConfig::default()
            };
        }
        if let Some(p) = s.crossover_dropout {
            c.crossover_dropout = p;
        }
        if let Some(p) = s.mutation_dropout {
            c.mutation_dropout = p;
        }
        if let Some(p) = s.pairing {
            c.pairing = p;
        }
        return Ok(RunConfig::Abom(c));
    }
    let alg = kind.baseline().expect("every non-optimizer kind is a baseline");
    let mut c = BaselineConfig::new(alg, lower, upper, budget);
    c.population = population;
    c.seed = seed;
    Ok(RunConfig::Baseline(c))
}

fn default_runs() -> usize {
    30
}

fn default_population() -> usize {
    20
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// A grid of (problem × algorithm × run) cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Evaluation budget; each problem's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default = "default_population")]
    pub population: usize,
}

impl ExperimentConfig {
    pub fn new(problems: Vec<ProblemSpec>, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            problems,
            algorithms,
            runs: default_runs(),
            base_seed: 0,
            output_dir: default_output_dir(),
            budget: None,
            population: default_population(),
        }
    }

    /// Parses a JSON document; relative paths inside it stay as written.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.problems.is_empty() {
            return Err(Error::Config("no problems listed".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        let mut labels = Vec::new();
        for a in &self.algorithms {
            a.kind()?;
            let label = a.label();
            if labels.contains(&label) {
                return Err(Error::Config(format!("duplicate algorithm label {label}")));
            }
            labels.push(label);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_entries() {
        let json = r#"{
            "problems": [{"function": "sphere", "dim": 10}, {"uav": "default"}],
            "algorithms": ["abom", {"id": "abom", "name": "abom_lr", "learning_rate": 0.01}, "pso"],
            "runs": 3
        }"#;
        let c = ExperimentConfig::from_json(json).unwrap();
        c.validate().unwrap();
        assert_eq!(c.runs, 3);
        assert_eq!(c.population, 20);
        assert_eq!(c.algorithms[1].label(), "abom_lr");
        let p = c.problems[1].resolve(None).unwrap();
        assert_eq!(p.id(), "uav-default");
        assert_eq!(p.dim(), 30);
    }

    #[test]
    fn unknown_algorithm_fails_validation() {
        let c = ExperimentConfig::new(
            vec![ProblemSpec::function(FunctionId::Sphere, 2)],
            vec![AlgorithmSpec::Id("cmaes".into())],
        );
        assert!(matches!(c.validate(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn zero_runs_rejected() {
        let mut c = ExperimentConfig::new(
            vec![ProblemSpec::function(FunctionId::Sphere, 2)],
            vec![AlgorithmKind::Rs.into()],
        );
        c.runs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_reach_optimizer_config() {
        let spec = AlgorithmSpec::Detailed(AlgorithmSettings {
            id: "abom_no_adaptation".into(),
            population: Some(10),
            learning_rate: Some(0.05),
            ..Default::default()
        });
        let p = ProblemSpec::function(FunctionId::Rastrigin, 4).resolve(None).unwrap();
        match build_run_config(&spec, &p, 500, 20, 7).unwrap() {
            RunConfig::Abom(c) => {
                assert_eq!(c.population, 10);
                assert_eq!(c.adamw.learning_rate, 0.05);
                assert!(c.ablation.no_adaptation);
                assert_eq!(c.seed, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_scenario_file_is_config_error() {
        let spec = ProblemSpec::Uav {
            uav: "/nonexistent/scenario.json".into(),
        };
        assert!(matches!(spec.resolve(None), Err(Error::Config(_))));
    }
}
