use serde::{Deserialize, Serialize};

use crate::adaptation::AdamWConfig;
use crate::numerics::check_bounds;
use crate::operators::{default_hidden, Dims, OperatorSettings};
use crate::{Error, Result};

/// Which offspring row is regressed onto which elite row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPairing {
    /// Offspring keep generation order; row `i` pairs with the `i`-th best
    /// elite.
    #[default]
    GenerationOrder,
    /// The `i`-th best offspring pairs with the `i`-th best elite.
    FitnessSorted,
}

/// Component switches for ablation runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    #[serde(default)]
    pub no_crossover: bool,
    #[serde(default)]
    pub no_mutation: bool,
    #[serde(default)]
    pub no_adaptation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub population: usize,
    pub budget: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `d_A`; defaults to `d`.
    pub attention_dim: Option<usize>,
    /// `d_M`; defaults to `2^floor(log2 d)`.
    pub hidden_dim: Option<usize>,
    pub crossover_dropout: f64,
    pub mutation_dropout: f64,
    pub adamw: AdamWConfig,
    pub seed: u64,
    pub ablation: Ablation,
    pub pairing: LossPairing,
    /// Feed raw (unstandardized) values to the attention scores.
    pub raw_attention_inputs: bool,
}

impl OptimizerConfig {
    /// Defaults: population 20, dropout 0.95 for both operators, AdamW with
    /// learning rate 1e-3.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, budget: usize) -> Self {
        Self {
            population: 20,
            budget,
            lower,
            upper,
            attention_dim: None,
            hidden_dim: None,
            crossover_dropout: 0.95,
            mutation_dropout: 0.95,
            adamw: AdamWConfig::default(),
            seed: 0,
            ablation: Ablation::default(),
            pairing: LossPairing::default(),
            raw_attention_inputs: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn dims(&self) -> Result<Dims> {
        let d = self.dim();
        Dims::new(
            d,
            self.attention_dim.unwrap_or(d),
            self.hidden_dim.unwrap_or_else(|| default_hidden(d)),
        )
    }

    /// Number of full generations the budget pays for after initialization.
    pub fn generations(&self) -> usize {
        (self.budget - self.population) / self.population
    }

    pub fn operator_settings(&self) -> OperatorSettings {
        OperatorSettings {
            crossover_dropout: self.crossover_dropout,
            mutation_dropout: self.mutation_dropout,
            standardize_inputs: !self.raw_attention_inputs,
            crossover_enabled: !self.ablation.no_crossover,
            mutation_enabled: !self.ablation.no_mutation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if self.budget < self.population {
            return Err(Error::Config(format!(
                "budget {} smaller than population {}",
                self.budget, self.population
            )));
        }
        check_bounds(&self.lower, &self.upper).map_err(|e| Error::Config(e.to_string()))?;
        self.dims()?;
        self.operator_settings().validate()?;
        let lr = self.adamw.learning_rate;
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {lr} invalid")));
        }
        Ok(())
    }
}
