use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Problem and layer sizes the operator parameters are built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Search-space dimension `d`.
    pub dim: usize,
    /// Attention width `d_A`.
    pub attention: usize,
    /// MLP hidden width `d_M`.
    pub hidden: usize,
}

impl Dims {
    pub fn new(dim: usize, attention: usize, hidden: usize) -> Result<Self> {
        if dim == 0 || attention == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(format!(
                "operator dimensions must be >= 1, got d={dim} d_A={attention} d_M={hidden}"
            )));
        }
        Ok(Self {
            dim,
            attention,
            hidden,
        })
    }

    /// Default sizing: `d_A = d`, `d_M = 2^floor(log2 d)`.
    pub fn defaults_for(dim: usize) -> Result<Self> {
        Self::new(dim, dim, default_hidden(dim))
    }
}

/// Largest power of two not exceeding `dim` (1 for `dim <= 1`).
pub fn default_hidden(dim: usize) -> usize {
    if dim <= 1 {
        1
    } else {
        1 << (usize::BITS - 1 - dim.leading_zeros())
    }
}

/// Two-layer residual MLP: `out = (mask ⊙ tanh(z W_in + b_in)) W_out + b_out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `d × d_M`
    pub w_in: Matrix,
    /// `1 × d_M`
    pub b_in: Matrix,
    /// `d_M × d`
    pub w_out: Matrix,
    /// `1 × d`
    pub b_out: Matrix,
}

impl Mlp {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            w_in: Matrix::zeros(dim, hidden),
            b_in: Matrix::zeros(1, hidden),
            w_out: Matrix::zeros(hidden, dim),
            b_out: Matrix::zeros(1, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_in.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w_in.cols()
    }
}

/// Every learnable parameter of the reproduction operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    /// Selection query projection of solutions, `d × d_A`.
    pub selection_query: Matrix,
    /// Selection key projection of solutions, `d × d_A`.
    pub selection_key: Matrix,
    /// Selection query projection of fitness, `1 × d_A`.
    pub fitness_query: Matrix,
    /// Selection key projection of fitness, `1 × d_A`.
    pub fitness_key: Matrix,
    /// Gene-wise mutation query projection, `1 × d_A`.
    pub gene_query: Matrix,
    /// Gene-wise mutation key projection, `1 × d_A`.
    pub gene_key: Matrix,
    pub crossover: Mlp,
    pub mutation: Mlp,
}

/// Number of parameter tensors in [`ThetaParams`].
pub const THETA_TENSORS: usize = 14;

pub const THETA_TENSOR_NAMES: [&str; THETA_TENSORS] = [
    "selection_query",
    "selection_key",
    "fitness_query",
    "fitness_key",
    "gene_query",
    "gene_key",
    "crossover.w_in",
    "crossover.b_in",
    "crossover.w_out",
    "crossover.b_out",
    "mutation.w_in",
    "mutation.b_in",
    "mutation.w_out",
    "mutation.b_out",
];

impl ThetaParams {
    pub fn zeros(dims: Dims) -> Self {
        let Dims {
            dim,
            attention,
            hidden,
        } = dims;
        Self {
            selection_query: Matrix::zeros(dim, attention),
            selection_key: Matrix::zeros(dim, attention),
            fitness_query: Matrix::zeros(1, attention),
            fitness_key: Matrix::zeros(1, attention),
            gene_query: Matrix::zeros(1, attention),
            gene_key: Matrix::zeros(1, attention),
            crossover: Mlp::zeros(dim, hidden),
            mutation: Mlp::zeros(dim, hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims())
    }

    pub fn dims(&self) -> Dims {
        Dims {
            dim: self.selection_query.rows(),
            attention: self.selection_query.cols(),
            hidden: self.crossover.hidden(),
        }
    }

    /// Tensors in the fixed order of [`THETA_TENSOR_NAMES`].
    pub fn tensors(&self) -> [&Matrix; THETA_TENSORS] {
        [
            &self.selection_query,
            &self.selection_key,
            &self.fitness_query,
            &self.fitness_key,
            &self.gene_query,
            &self.gene_key,
            &self.crossover.w_in,
            &self.crossover.b_in,
            &self.crossover.w_out,
            &self.crossover.b_out,
            &self.mutation.w_in,
            &self.mutation.b_in,
            &self.mutation.w_out,
            &self.mutation.b_out,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; THETA_TENSORS] {
        [
            &mut self.selection_query,
            &mut self.selection_key,
            &mut self.fitness_query,
            &mut self.fitness_key,
            &mut self.gene_query,
            &mut self.gene_key,
            &mut self.crossover.w_in,
            &mut self.crossover.b_in,
            &mut self.crossover.w_out,
            &mut self.crossover.b_out,
            &mut self.mutation.w_in,
            &mut self.mutation.b_in,
            &mut self.mutation.w_out,
            &mut self.mutation.b_out,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Checks that every tensor has the shape implied by `self.dims()`.
    pub fn validate(&self) -> Result<()> {
        let expected = Self::zeros(self.dims());
        for ((name, have), want) in THETA_TENSOR_NAMES
            .iter()
            .zip(self.tensors())
            .zip(expected.tensors())
        {
            if have.shape() != want.shape() {
                return Err(Error::shape(
                    "theta",
                    format!("{name} is {:?}, expected {:?}", have.shape(), want.shape()),
                ));
            }
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        Ok(())
    }
}
