//! Finite-difference verification of the analytic gradients.

use super::{DenseNet, Gradients, NnError};

/// A scalar loss over a net's output vector, with its analytic gradient.
pub trait ScalarLoss {
    fn value(&self, output: &[f64]) -> f64;
    fn gradient(&self, output: &[f64]) -> Vec<f64>;
}

/// L = sum(y_i)
pub struct SumLoss;

impl ScalarLoss for SumLoss {
    fn value(&self, output: &[f64]) -> f64 {
        output.iter().sum()
    }
    fn gradient(&self, output: &[f64]) -> Vec<f64> {
        vec![1.0; output.len()]
    }
}

/// L = 1/2 * sum((y_i - t_i)^2)
pub struct SquaredErrorLoss {
    pub target: Vec<f64>,
}

impl ScalarLoss for SquaredErrorLoss {
    fn value(&self, output: &[f64]) -> f64 {
        output
            .iter()
            .zip(&self.target)
            .map(|(y, t)| 0.5 * (y - t) * (y - t))
            .sum()
    }
    fn gradient(&self, output: &[f64]) -> Vec<f64> {
        output.iter().zip(&self.target).map(|(y, t)| y - t).collect()
    }
}

/// Central-difference gradients of `loss(forward(input))` with respect to
/// every parameter. Independent of the backward pass; used as its oracle.
pub fn numeric_gradients(
    net: &DenseNet,
    input: &[f64],
    loss: &dyn ScalarLoss,
    eps: f64,
) -> Result<Gradients, NnError> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(NnError::Config(format!("eps {eps} outside (0, 1e-2]")));
    }
    let mut grads = Gradients::zeros_like(net);
    let mut probe = net.clone();
    let n = net.parameter_count();
    for idx in 0..n {
        let original = *probe.param_mut(idx).unwrap();
        *probe.param_mut(idx).unwrap() = original + eps;
        let plus = loss.value(&probe.forward(input)?);
        *probe.param_mut(idx).unwrap() = original - eps;
        let minus = loss.value(&probe.forward(input)?);
        *probe.param_mut(idx).unwrap() = original;
        let g = (plus - minus) / (2.0 * eps);
        // Write into the mirrored buffer at the same flat position.
        let mut offset = idx;
        for k in 0..grads.weights.len() {
            if offset < grads.weights[k].len() {
                grads.weights[k][offset] = g;
                break;
            }
            offset -= grads.weights[k].len();
            if offset < grads.biases[k].len() {
                grads.biases[k][offset] = g;
                break;
            }
            offset -= grads.biases[k].len();
        }
    }
    Ok(grads)
}

/// max over parameters of |analytic - numeric| / max(1, |numeric|)
pub fn max_relative_error(analytic: &Gradients, numeric: &Gradients) -> f64 {
    let mut worst = 0.0f64;
    for (aw, nw) in analytic.weights.iter().zip(&numeric.weights) {
        for (a, n) in aw.iter().zip(nw) {
            worst = worst.max((a - n).abs() / n.abs().max(1.0));
        }
    }
    for (ab, nb) in analytic.biases.iter().zip(&numeric.biases) {
        for (a, n) in ab.iter().zip(nb) {
            worst = worst.max((a - n).abs() / n.abs().max(1.0));
        }
    }
    worst
}

/// Compares backprop against central differences; returns the worst
/// per-parameter relative error.
pub fn finite_difference_check(
    net: &DenseNet,
    input: &[f64],
    loss: &dyn ScalarLoss,
    eps: f64,
) -> Result<f64, NnError> {
    let (output, tape) = net.forward_recorded(input)?;
    let analytic = net.backward(&tape, &loss.gradient(&output))?;
    let numeric = numeric_gradients(net, input, loss, eps)?;
    Ok(max_relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseNet, LayerSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_scalar_net_is_exact() {
        let mut net = DenseNet::zeros(&[LayerSpec::new(2, 1, Activation::Linear)]).unwrap();
        net.layers_mut()[0].weights.copy_from_slice(&[0.7, -1.3]);
        let err = finite_difference_check(&net, &[0.4, 0.9], &SumLoss, 1e-5).unwrap();
        assert!(err < 1e-8, "linear check should be near-exact, got {err}");
    }

    #[test]
    fn tanh_two_layer_net_under_1e4() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = DenseNet::seeded(
            &[
                LayerSpec::new(3, 5, Activation::Tanh),
                LayerSpec::new(5, 2, Activation::Tanh),
            ],
            &mut rng,
        )
        .unwrap();
        let input: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = SquaredErrorLoss {
            target: vec![0.3, -0.2],
        };
        let err = finite_difference_check(&net, &input, &loss, 1e-5).unwrap();
        assert!(err < 1e-4, "tanh net relative error {err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::seeded(
            &[
                LayerSpec::new(2, 4, Activation::Tanh),
                LayerSpec::new(4, 1, Activation::Linear),
            ],
            &mut rng,
        )
        .unwrap();
        let input = [0.5, -0.25];
        let (out, tape) = net.forward_recorded(&input).unwrap();
        let mut analytic = net.backward(&tape, &SumLoss.gradient(&out)).unwrap();
        analytic.weights[0][1] += 1.0;
        let numeric = numeric_gradients(&net, &input, &SumLoss, 1e-5).unwrap();
        let err = max_relative_error(&analytic, &numeric);
        assert!(err > 0.1, "injected fault must be visible, got {err}");
    }

    #[test]
    fn eps_bounds_enforced() {
        let net = DenseNet::zeros(&[LayerSpec::new(1, 1, Activation::Linear)]).unwrap();
        assert!(numeric_gradients(&net, &[1.0], &SumLoss, 0.0).is_err());
        assert!(numeric_gradients(&net, &[1.0], &SumLoss, 0.1).is_err());
    }
}
