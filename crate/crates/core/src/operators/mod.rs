//! Attention-based selection, residual MLP crossover and gene-wise
//! attention mutation, composed into one reproduction pass.
//!
//! Shapes: population `P` is `N × d`, fitness `F` has length `N`.
//!
//! ```text
//! A   = softmax_rows((P̃ Wqp)(P̃ Wkp)ᵀ + (F̃ Wqf)(F̃ Wkf)ᵀ) / √d_A)
//! P'  = P + MLP_c(A P)
//! M_i = softmax_rows((g̃_i Wqm)(g̃_i Wkm)ᵀ / √d_A)
//! p̂_i = p'_i + MLP_m(M_i p'_i)
//! ```
//!
//! `P̃`, `F̃` and `g̃` are the per-generation column z-scores of the inputs
//! (unless raw inputs are requested); the value paths `A P` and `M_i p'_i`
//! always use raw coordinates. The forward pass records a [`ForwardTrace`]
//! holding every intermediate and every dropout mask so that gradients can be
//! computed without re-running it.

mod params;

pub use params::{default_hidden, Dims, Mlp, ThetaParams, THETA_TENSORS, THETA_TENSOR_NAMES};

use serde::{Deserialize, Serialize};

use crate::numerics::{
    dropout_mask, softmax_in_place, softmax_rows, standardize_columns, ColumnStats, Matrix,
    RngStream,
};
use crate::{Error, Result};

/// Non-learnable settings of one reproduction pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSettings {
    /// Crossover hidden-unit drop probability `p_C`.
    pub crossover_dropout: f64,
    /// Mutation hidden-unit drop probability `p_M`.
    pub mutation_dropout: f64,
    /// Z-score attention inputs before computing scores.
    pub standardize_inputs: bool,
    pub crossover_enabled: bool,
    pub mutation_enabled: bool,
}

impl Default for OperatorSettings {
    fn default() -> Self {
        Self {
            crossover_dropout: 0.95,
            mutation_dropout: 0.95,
            standardize_inputs: true,
            crossover_enabled: true,
            mutation_enabled: true,
        }
    }
}

impl OperatorSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("crossover dropout", self.crossover_dropout),
            ("mutation dropout", self.mutation_dropout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Hidden-layer keep masks for one generation, one row per individual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropoutMasks {
    /// `N × d_M`
    pub crossover: Matrix,
    /// `N × d_M`
    pub mutation: Matrix,
}

impl DropoutMasks {
    /// Draws one independent mask per individual and operator: all crossover
    /// masks first, then all mutation masks.
    pub fn sample(
        n: usize,
        hidden: usize,
        settings: &OperatorSettings,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let mut draw = |rate: f64| -> Result<Matrix> {
            let mut data = Vec::with_capacity(n * hidden);
            for _ in 0..n {
                data.extend(dropout_mask(hidden, rate, rng)?);
            }
            Matrix::from_vec(n, hidden, data)
        };
        let crossover = draw(settings.crossover_dropout)?;
        let mutation = draw(settings.mutation_dropout)?;
        Ok(Self {
            crossover,
            mutation,
        })
    }

    pub fn ones(n: usize, hidden: usize) -> Self {
        Self {
            crossover: Matrix::filled(n, hidden, 1.0),
            mutation: Matrix::filled(n, hidden, 1.0),
        }
    }
}

/// Intermediates of the selection attention.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionTrace {
    /// Attention input for solutions (`P̃` or raw `P`), `N × d`.
    pub solution_input: Matrix,
    /// Attention input for fitness (`F̃` or raw `F`), length `N`.
    pub fitness_input: Vec<f64>,
    pub query: Matrix,
    pub key: Matrix,
    pub fitness_query: Matrix,
    pub fitness_key: Matrix,
    /// Row-stochastic selection matrix `A`, `N × N`.
    pub attention: Matrix,
}

/// Intermediates of a batched residual MLP.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpTrace {
    /// MLP input, `N × d`.
    pub input: Matrix,
    /// Hidden pre-activations, `N × d_M`.
    pub pre_activation: Matrix,
    /// Keep masks used, `N × d_M`.
    pub mask: Matrix,
    /// `mask ⊙ tanh(pre_activation)`.
    pub hidden: Matrix,
    /// MLP output, `N × d`.
    pub output: Matrix,
}

/// Intermediates of the gene-wise mutation.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationTrace {
    /// Score inputs `g̃` (standardized or raw `P'`), `N × d`.
    pub gene_input: Matrix,
    /// Column statistics of `P'` when inputs were standardized.
    pub gene_stats: Option<ColumnStats>,
    /// `M_i` for every individual, each `d × d`.
    pub matrices: Vec<Matrix>,
    pub mlp: MlpTrace,
}

/// Everything recorded by one [`reproduce`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub settings: OperatorSettings,
    /// Parameters the pass was run with.
    pub theta: ThetaParams,
    pub attention_dim: usize,
    pub population: Matrix,
    pub fitness: Vec<f64>,
    pub masks: DropoutMasks,
    /// Present when crossover is enabled.
    pub selection: Option<SelectionTrace>,
    pub crossover: Option<MlpTrace>,
    /// `P'`.
    pub intermediate: Matrix,
    /// Present when mutation is enabled.
    pub mutation: Option<MutationTrace>,
    /// `P̂`.
    pub offspring: Matrix,
}

fn check_population(pop: &Matrix, fit: &[f64], theta: &ThetaParams) -> Result<()> {
    theta.validate()?;
    let (n, d) = pop.shape();
    if n == 0 {
        return Err(Error::InvalidArgument("empty population".into()));
    }
    if fit.len() != n {
        return Err(Error::shape(
            "population",
            format!("{n} individuals but {} fitness values", fit.len()),
        ));
    }
    if d != theta.dims().dim {
        return Err(Error::shape(
            "population",
            format!("dimension {d} but parameters built for {}", theta.dims().dim),
        ));
    }
    if !pop.is_finite() || fit.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("population"));
    }
    Ok(())
}

fn selection_forward(
    pop: &Matrix,
    fit: &[f64],
    theta: &ThetaParams,
    standardize: bool,
) -> Result<SelectionTrace> {
    let n = pop.rows();
    let attention_dim = theta.dims().attention;
    let (solution_input, fitness_input) = if standardize {
        let (p, _) = standardize_columns(pop);
        let (f, _) = standardize_columns(&Matrix::from_vec(n, 1, fit.to_vec())?);
        (p, f.into_vec())
    } else {
        (pop.clone(), fit.to_vec())
    };
    let query = solution_input.matmul(&theta.selection_query)?;
    let key = solution_input.matmul(&theta.selection_key)?;
    let fit_col = Matrix::from_vec(n, 1, fitness_input.clone())?;
    let fitness_query = fit_col.matmul(&theta.fitness_query)?;
    let fitness_key = fit_col.matmul(&theta.fitness_key)?;
    let mut scores = query.matmul_transposed(&key)?;
    scores.add_assign(&fitness_query.matmul_transposed(&fitness_key)?)?;
    let scores = scores.scale(1.0 / (attention_dim as f64).sqrt());
    let attention = softmax_rows(&scores)?;
    Ok(SelectionTrace {
        solution_input,
        fitness_input,
        query,
        key,
        fitness_query,
        fitness_key,
        attention,
    })
}

/// Selection matrix `A` (`N × N`, row-stochastic) for a population and its
/// fitness values.
pub fn selection_matrix(
    pop: &Matrix,
    fit: &[f64],
    theta: &ThetaParams,
    settings: &OperatorSettings,
) -> Result<Matrix> {
    check_population(pop, fit, theta)?;
    Ok(selection_forward(pop, fit, theta, settings.standardize_inputs)?.attention)
}

/// Batched MLP forward with fixed keep masks.
pub fn mlp_forward(mlp: &Mlp, input: &Matrix, mask: &Matrix) -> Result<MlpTrace> {
    let mut pre_activation = input.matmul(&mlp.w_in)?;
    pre_activation.add_row_broadcast(mlp.b_in.as_slice())?;
    let hidden = pre_activation.map(f64::tanh).hadamard(mask)?;
    let mut output = hidden.matmul(&mlp.w_out)?;
    output.add_row_broadcast(mlp.b_out.as_slice())?;
    Ok(MlpTrace {
        input: input.clone(),
        pre_activation,
        mask: mask.clone(),
        hidden,
        output,
    })
}

/// Crossover with explicit keep masks: `P' = P + MLP_c(A P)`.
pub fn crossover_with_masks(
    pop: &Matrix,
    attention: &Matrix,
    mlp: &Mlp,
    masks: &Matrix,
) -> Result<(Matrix, MlpTrace)> {
    let n = pop.rows();
    if attention.shape() != (n, n) {
        return Err(Error::shape(
            "crossover",
            format!("selection matrix {:?} for {n} individuals", attention.shape()),
        ));
    }
    if masks.shape() != (n, mlp.hidden()) {
        return Err(Error::shape(
            "crossover",
            format!("mask {:?}, expected {:?}", masks.shape(), (n, mlp.hidden())),
        ));
    }
    let pool = attention.matmul(pop)?;
    let trace = mlp_forward(mlp, &pool, masks)?;
    Ok((pop.add(&trace.output)?, trace))
}

/// Crossover drawing one fresh dropout mask (rate `p_c`) per individual.
pub fn crossover(
    pop: &Matrix,
    attention: &Matrix,
    mlp: &Mlp,
    p_c: f64,
    rng: &mut RngStream,
) -> Result<(Matrix, MlpTrace)> {
    let n = pop.rows();
    let mut data = Vec::with_capacity(n * mlp.hidden());
    for _ in 0..n {
        data.extend(dropout_mask(mlp.hidden(), p_c, rng)?);
    }
    let masks = Matrix::from_vec(n, mlp.hidden(), data)?;
    crossover_with_masks(pop, attention, mlp, &masks)
}

/// Gene-wise mutation matrix `softmax_rows((g Wqm)(g Wkm)ᵀ / √d_A)` for one
/// individual, treating its `d` coordinates as scalar tokens.
pub fn mutation_matrix(gene: &[f64], gene_query: &Matrix, gene_key: &Matrix) -> Result<Matrix> {
    if gene_query.rows() != 1 || gene_key.shape() != gene_query.shape() {
        return Err(Error::shape(
            "mutation_matrix",
            format!(
                "projections {:?} and {:?}, expected 1 × d_A",
                gene_query.shape(),
                gene_key.shape()
            ),
        ));
    }
    let d = gene.len();
    let attention_dim = gene_query.cols();
    let column = Matrix::from_vec(d, 1, gene.to_vec())?;
    let query = column.matmul(gene_query)?;
    let key = column.matmul(gene_key)?;
    let mut scores = query.matmul_transposed(&key)?;
    let scale = 1.0 / (attention_dim as f64).sqrt();
    for i in 0..d {
        let row = scores.row_mut(i);
        row.iter_mut().for_each(|v| *v *= scale);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mutation_matrix"));
        }
        softmax_in_place(row);
    }
    Ok(scores)
}

/// Mutation with explicit keep masks: `p̂_i = p'_i + MLP_m(M_i p'_i)`.
pub fn mutate_with_masks(
    pop_prime: &Matrix,
    theta: &ThetaParams,
    standardize: bool,
    masks: &Matrix,
) -> Result<(Matrix, MutationTrace)> {
    let (n, d) = pop_prime.shape();
    let mlp = &theta.mutation;
    if masks.shape() != (n, mlp.hidden()) {
        return Err(Error::shape(
            "mutate",
            format!("mask {:?}, expected {:?}", masks.shape(), (n, mlp.hidden())),
        ));
    }
    let (gene_input, gene_stats) = if standardize {
        let (z, stats) = standardize_columns(pop_prime);
        (z, Some(stats))
    } else {
        (pop_prime.clone(), None)
    };
    let mut matrices = Vec::with_capacity(n);
    let mut mixed = Matrix::zeros(n, d);
    for i in 0..n {
        let m = mutation_matrix(gene_input.row(i), &theta.gene_query, &theta.gene_key)?;
        let p = pop_prime.row(i);
        for (j, out) in mixed.row_mut(i).iter_mut().enumerate() {
            *out = crate::numerics::dot(m.row(j), p);
        }
        matrices.push(m);
    }
    let mlp_trace = mlp_forward(mlp, &mixed, masks)?;
    let offspring = pop_prime.add(&mlp_trace.output)?;
    Ok((
        offspring,
        MutationTrace {
            gene_input,
            gene_stats,
            matrices,
            mlp: mlp_trace,
        },
    ))
}

/// Mutation drawing one fresh dropout mask (rate `p_m`) per individual.
pub fn mutate(
    pop_prime: &Matrix,
    theta: &ThetaParams,
    standardize: bool,
    p_m: f64,
    rng: &mut RngStream,
) -> Result<(Matrix, MutationTrace)> {
    let n = pop_prime.rows();
    let hidden = theta.mutation.hidden();
    let mut data = Vec::with_capacity(n * hidden);
    for _ in 0..n {
        data.extend(dropout_mask(hidden, p_m, rng)?);
    }
    let masks = Matrix::from_vec(n, hidden, data)?;
    mutate_with_masks(pop_prime, theta, standardize, &masks)
}

/// Full reproduction pass with the given masks. Deterministic.
pub fn forward(
    pop: &Matrix,
    fit: &[f64],
    theta: &ThetaParams,
    settings: &OperatorSettings,
    masks: &DropoutMasks,
) -> Result<ForwardTrace> {
    check_population(pop, fit, theta)?;
    let dims = theta.dims();
    let n = pop.rows();
    for m in [&masks.crossover, &masks.mutation] {
        if m.shape() != (n, dims.hidden) {
            return Err(Error::shape(
                "reproduce",
                format!("mask {:?}, expected {:?}", m.shape(), (n, dims.hidden)),
            ));
        }
    }

    let (selection, crossover_trace, intermediate) = if settings.crossover_enabled {
        let sel = selection_forward(pop, fit, theta, settings.standardize_inputs)?;
        let (p_prime, trace) =
            crossover_with_masks(pop, &sel.attention, &theta.crossover, &masks.crossover)?;
        (Some(sel), Some(trace), p_prime)
    } else {
        (None, None, pop.clone())
    };

    let (mutation_trace, offspring) = if settings.mutation_enabled {
        let (off, trace) = mutate_with_masks(
            &intermediate,
            theta,
            settings.standardize_inputs,
            &masks.mutation,
        )?;
        (Some(trace), off)
    } else {
        (None, intermediate.clone())
    };

    if !offspring.is_finite() {
        return Err(Error::NonFinite("offspring"));
    }

    Ok(ForwardTrace {
        settings: *settings,
        theta: theta.clone(),
        attention_dim: dims.attention,
        population: pop.clone(),
        fitness: fit.to_vec(),
        masks: masks.clone(),
        selection,
        crossover: crossover_trace,
        intermediate,
        mutation: mutation_trace,
        offspring,
    })
}

/// Draws fresh dropout masks from `rng` and runs selection, crossover and
/// mutation. Returns the offspring and the trace needed for backpropagation.
pub fn reproduce(
    pop: &Matrix,
    fit: &[f64],
    theta: &ThetaParams,
    settings: &OperatorSettings,
    rng: &mut RngStream,
) -> Result<(Matrix, ForwardTrace)> {
    settings.validate()?;
    let masks = DropoutMasks::sample(pop.rows(), theta.dims().hidden, settings, rng)?;
    let trace = forward(pop, fit, theta, settings, &masks)?;
    Ok((trace.offspring.clone(), trace))
}
