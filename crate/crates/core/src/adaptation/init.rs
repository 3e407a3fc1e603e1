use rand::Rng;

use crate::numerics::RngStream;
use crate::operators::{Dims, ThetaParams};

/// Fresh parameters: every weight matrix uniform in `±1/√fan_in` (fan-in is
/// the number of rows), every bias zero. Weights are drawn tensor by tensor
/// in [`ThetaParams::tensors`] order.
pub fn init_theta(dims: Dims, rng: &mut RngStream) -> ThetaParams {
    let mut theta = ThetaParams::zeros(dims);
    let is_bias = |t: usize| matches!(t, 7 | 9 | 11 | 13);
    for (t, tensor) in theta.tensors_mut().into_iter().enumerate() {
        if is_bias(t) {
            continue;
        }
        let bound = 1.0 / (tensor.rows() as f64).sqrt();
        for v in tensor.as_mut_slice() {
            *v = rng.random_range(-bound..=bound);
        }
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::THETA_TENSOR_NAMES;

    #[test]
    fn biases_start_at_zero() {
        let theta = init_theta(Dims::new(6, 4, 8).unwrap(), &mut RngStream::new(1, 0));
        for (name, t) in THETA_TENSOR_NAMES.iter().zip(theta.tensors()) {
            if name.contains(".b_") {
                assert!(t.as_slice().iter().all(|&v| v == 0.0), "{name} not zero");
            } else {
                assert!(t.as_slice().iter().any(|&v| v != 0.0), "{name} all zero");
            }
        }
    }

    #[test]
    fn same_seed_same_theta() {
        let dims = Dims::new(5, 5, 4).unwrap();
        let a = init_theta(dims, &mut RngStream::new(3, 1));
        let b = init_theta(dims, &mut RngStream::new(3, 1));
        assert_eq!(a, b);
        let c = init_theta(dims, &mut RngStream::new(4, 1));
        assert_ne!(a, c);
    }

    #[test]
    fn fan_in_sixteen_bounds() {
        // 16 x 625 = 10^4 weights, U(-0.25, 0.25): sd of the mean is ~1.4e-3.
        let theta = init_theta(Dims::new(16, 625, 1).unwrap(), &mut RngStream::new(9, 0));
        let w = theta.selection_query.as_slice();
        assert_eq!(w.len(), 10_000);
        assert!(w.iter().all(|v| v.abs() <= 0.25));
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
        let max = w.iter().cloned().fold(f64::MIN, f64::max);
        let min = w.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max > 0.24 && min < -0.24);
    }
}
