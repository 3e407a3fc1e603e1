use std::ops::{Deref, DerefMut};

use crate::numerics::{ColumnStats, Matrix};
use crate::operators::{ForwardTrace, Mlp, MlpTrace, ThetaParams};
use crate::{Error, Result};

/// Gradient of the adaptation loss with respect to every parameter tensor;
/// shapes mirror [`ThetaParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGradients(pub ThetaParams);

impl Deref for ThetaGradients {
    type Target = ThetaParams;

    fn deref(&self) -> &ThetaParams {
        &self.0
    }
}

impl DerefMut for ThetaGradients {
    fn deref_mut(&mut self) -> &mut ThetaParams {
        &mut self.0
    }
}

/// Squared Frobenius distance `Σ (P̂ − E)²`. The target is a constant.
pub fn adaptation_loss(offspring: &Matrix, targets: &Matrix) -> Result<f64> {
    if offspring.shape() != targets.shape() {
        return Err(Error::shape(
            "adaptation_loss",
            format!("{:?} vs {:?}", offspring.shape(), targets.shape()),
        ));
    }
    Ok(offspring
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Gradient of [`adaptation_loss`]`(trace.offspring, targets)` with respect to
/// the parameters, reusing the dropout masks recorded in `trace`. Row `i` of
/// `targets` is the regression target of offspring row `i`.
pub fn backward(trace: &ForwardTrace, targets: &Matrix) -> Result<ThetaGradients> {
    if trace.offspring.shape() != targets.shape() {
        return Err(Error::shape(
            "backward",
            format!(
                "offspring {:?} vs targets {:?}",
                trace.offspring.shape(),
                targets.shape()
            ),
        ));
    }
    let upstream = trace.offspring.sub(targets)?.scale(2.0);
    backward_from_output(trace, &upstream)
}

/// Backpropagates an arbitrary upstream gradient `∂L/∂P̂` through the
/// recorded reproduction pass.
pub fn backward_from_output(trace: &ForwardTrace, d_offspring: &Matrix) -> Result<ThetaGradients> {
    let theta = &trace.theta;
    let (n, d) = trace.offspring.shape();
    if d_offspring.shape() != (n, d) {
        return Err(Error::shape(
            "backward",
            format!("upstream {:?} vs offspring {:?}", d_offspring.shape(), (n, d)),
        ));
    }
    let mut grads = ThetaGradients(theta.zeros_like());
    let inv_sqrt = 1.0 / (trace.attention_dim as f64).sqrt();

    // ∂L/∂P'; the residual connection passes the upstream gradient through.
    let mut d_inter = d_offspring.clone();

    if let Some(mt) = &trace.mutation {
        let d_mixed = mlp_backward(&theta.mutation, &mt.mlp, d_offspring, &mut grads.0.mutation)?;
        let wq = theta.gene_query.as_slice();
        let wk = theta.gene_key.as_slice();
        let qk: f64 = wq.iter().zip(wk).map(|(a, b)| a * b).sum();
        let mut d_gene_input = Matrix::zeros(n, d);
        let mut d_scores = vec![0.0; d * d];
        let mut score_weight = 0.0;

        for i in 0..n {
            let m = &mt.matrices[i];
            let p = trace.intermediate.row(i);
            let du = d_mixed.row(i);
            let g = mt.gene_input.row(i);

            // u = M p
            let d_p = d_inter.row_mut(i);
            for j in 0..d {
                let row = m.row(j);
                for (dp, &mjk) in d_p.iter_mut().zip(row) {
                    *dp += mjk * du[j];
                }
            }

            // Row softmax adjoint with ∂L/∂M[j,k] = du_j p_k, folded with the
            // 1/√d_A score scale: dS[j,k] = M[j,k] du_j (p_k − u_j) / √d_A.
            let u = mt.mlp.input.row(i);
            for j in 0..d {
                let row = m.row(j);
                let c = du[j] * inv_sqrt;
                for k in 0..d {
                    d_scores[j * d + k] = row[k] * c * (p[k] - u[j]);
                }
            }

            // S = (g ⊗ wq)(g ⊗ wk)ᵀ = (wq·wk) g gᵀ.
            // ∂/∂g_j = (wq·wk)(Σ_k dS[j,k] g_k + Σ_k dS[k,j] g_k)
            // ∂/∂wq  = (gᵀ dS g) wk,  ∂/∂wk = (gᵀ dS g) wq
            let dg = d_gene_input.row_mut(i);
            let mut quad = 0.0;
            for j in 0..d {
                let row = &d_scores[j * d..(j + 1) * d];
                let r: f64 = row.iter().zip(g).map(|(s, gk)| s * gk).sum();
                quad += g[j] * r;
                dg[j] += qk * r;
                for k in 0..d {
                    dg[k] += qk * row[k] * g[j];
                }
            }
            score_weight += quad;
        }

        for (gq, &k) in grads.0.gene_query.as_mut_slice().iter_mut().zip(wk) {
            *gq += score_weight * k;
        }
        for (gk, &q) in grads.0.gene_key.as_mut_slice().iter_mut().zip(wq) {
            *gk += score_weight * q;
        }

        match &mt.gene_stats {
            Some(stats) => {
                standardize_backward(&mt.gene_input, stats, &d_gene_input, &mut d_inter)?
            }
            None => d_inter.add_assign(&d_gene_input)?,
        }
    }

    if let (Some(ct), Some(sel)) = (&trace.crossover, &trace.selection) {
        let d_pool = mlp_backward(&theta.crossover, ct, &d_inter, &mut grads.0.crossover)?;
        // pool = A P with P constant
        let d_attention = d_pool.matmul_transposed(&trace.population)?;
        let mut d_scores = Matrix::zeros(n, n);
        for i in 0..n {
            let a = sel.attention.row(i);
            let da = d_attention.row(i);
            let inner: f64 = a.iter().zip(da).map(|(x, y)| x * y).sum();
            for (j, out) in d_scores.row_mut(i).iter_mut().enumerate() {
                *out = a[j] * (da[j] - inner) * inv_sqrt;
            }
        }
        let d_query = d_scores.matmul(&sel.key)?;
        let d_key = d_scores.transpose_matmul(&sel.query)?;
        grads.0.selection_query = sel.solution_input.transpose_matmul(&d_query)?;
        grads.0.selection_key = sel.solution_input.transpose_matmul(&d_key)?;

        let d_fit_query = d_scores.matmul(&sel.fitness_key)?;
        let d_fit_key = d_scores.transpose_matmul(&sel.fitness_query)?;
        let f = Matrix::from_vec(n, 1, sel.fitness_input.clone())?;
        grads.0.fitness_query = f.transpose_matmul(&d_fit_query)?;
        grads.0.fitness_key = f.transpose_matmul(&d_fit_key)?;
    }

    Ok(grads)
}

/// Accumulates parameter gradients of one batched MLP into `grads` and
/// returns the gradient with respect to its input.
fn mlp_backward(mlp: &Mlp, trace: &MlpTrace, d_out: &Matrix, grads: &mut Mlp) -> Result<Matrix> {
    grads.b_out = Matrix::row_vector(&d_out.column_sums());
    grads.w_out = trace.hidden.transpose_matmul(d_out)?;
    let d_hidden = d_out.matmul_transposed(&mlp.w_out)?;
    let mut d_pre = d_hidden;
    for ((g, &pre), &mask) in d_pre
        .as_mut_slice()
        .iter_mut()
        .zip(trace.pre_activation.as_slice())
        .zip(trace.mask.as_slice())
    {
        let t = pre.tanh();
        *g *= mask * (1.0 - t * t);
    }
    grads.b_in = Matrix::row_vector(&d_pre.column_sums());
    grads.w_in = trace.input.transpose_matmul(&d_pre)?;
    d_pre.matmul_transposed(&mlp.w_in)
}

/// Adjoint of per-column z-scoring `z = (x − mean) / std` (population std),
/// accumulated into `d_x`. Degenerate columns were mapped to the constant 0
/// and receive no gradient.
fn standardize_backward(
    z: &Matrix,
    stats: &ColumnStats,
    d_z: &Matrix,
    d_x: &mut Matrix,
) -> Result<()> {
    let (n, d) = z.shape();
    let nf = n as f64;
    for j in 0..d {
        if stats.is_degenerate(j) {
            continue;
        }
        let mut mean_dz = 0.0;
        let mut mean_dz_z = 0.0;
        for i in 0..n {
            mean_dz += d_z[(i, j)];
            mean_dz_z += d_z[(i, j)] * z[(i, j)];
        }
        mean_dz /= nf;
        mean_dz_z /= nf;
        let inv_std = 1.0 / stats.std[j];
        for i in 0..n {
            d_x[(i, j)] += inv_std * (d_z[(i, j)] - mean_dz - z[(i, j)] * mean_dz_z);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::init_theta;
    use crate::numerics::RngStream;
    use crate::operators::{forward, DropoutMasks, Dims, OperatorSettings};
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut RngStream) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn instance(seed: u64) -> (ForwardTrace, Matrix) {
        let mut rng = RngStream::new(seed, 0);
        let dims = Dims::new(4, 3, 4).unwrap();
        let mut theta = init_theta(dims, &mut rng);
        theta.mutation.b_out = random_matrix(1, 4, 0.5, &mut rng);
        let pop = random_matrix(5, 4, 2.0, &mut rng);
        let fit: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let settings = OperatorSettings {
            crossover_dropout: 0.3,
            mutation_dropout: 0.3,
            ..Default::default()
        };
        let masks = DropoutMasks::sample(5, 4, &settings, &mut rng).unwrap();
        let trace = forward(&pop, &fit, &theta, &settings, &masks).unwrap();
        let targets = random_matrix(5, 4, 2.0, &mut rng);
        (trace, targets)
    }

    #[test]
    fn loss_of_identical_matrices_is_zero() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(adaptation_loss(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn loss_of_unit_residuals() {
        let e = Matrix::zeros(2, 3);
        let p = Matrix::filled(2, 3, 1.0);
        assert_eq!(adaptation_loss(&p, &e).unwrap(), 6.0);
    }

    #[test]
    fn loss_matches_double_loop() {
        let mut rng = RngStream::new(2, 2);
        let p = random_matrix(3, 2, 3.0, &mut rng);
        let e = random_matrix(3, 2, 3.0, &mut rng);
        let mut want = 0.0;
        for i in 0..3 {
            for j in 0..2 {
                want += (p[(i, j)] - e[(i, j)]).powi(2);
            }
        }
        assert_eq!(adaptation_loss(&p, &e).unwrap(), want);
        assert!(adaptation_loss(&p, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let (trace, _) = instance(1);
        let grads = backward(&trace, &trace.offspring).unwrap();
        for t in grads.tensors() {
            assert!(t.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn output_bias_gradient_is_summed_residual() {
        let (trace, targets) = instance(2);
        let grads = backward(&trace, &targets).unwrap();
        let (n, d) = targets.shape();
        for j in 0..d {
            let want: f64 = (0..n)
                .map(|i| 2.0 * (trace.offspring[(i, j)] - targets[(i, j)]))
                .sum();
            assert!((grads.mutation.b_out[(0, j)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_rejects_wrong_target_shape() {
        let (trace, _) = instance(3);
        assert!(backward(&trace, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn standardize_adjoint_matches_finite_differences() {
        use crate::numerics::standardize_columns;
        let mut rng = RngStream::new(4, 4);
        let x = random_matrix(6, 3, 2.0, &mut rng);
        let w = random_matrix(6, 3, 1.0, &mut rng);
        let objective = |x: &Matrix| -> f64 {
            let (z, _) = standardize_columns(x);
            z.hadamard(&w).unwrap().as_slice().iter().sum()
        };
        let (z, stats) = standardize_columns(&x);
        let mut analytic = Matrix::zeros(6, 3);
        standardize_backward(&z, &stats, &w, &mut analytic).unwrap();
        let h = 1e-6;
        for i in 0..6 {
            for j in 0..3 {
                let mut xp = x.clone();
                xp[(i, j)] += h;
                let mut xm = x.clone();
                xm[(i, j)] -= h;
                let fd = (objective(&xp) - objective(&xm)) / (2.0 * h);
                assert!((fd - analytic[(i, j)]).abs() < 1e-6, "{fd} vs {}", analytic[(i, j)]);
            }
        }
    }
}
