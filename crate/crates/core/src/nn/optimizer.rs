//! SGD and Adam parameter updates.

use super::{DenseNet, Gradients, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// First/second moment buffers, allocated lazily on the first Adam step.
    first_moment: Option<Gradients>,
    second_moment: Option<Gradients>,
    step_count: u64,
}

impl Optimizer {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: None,
            second_moment: None,
            step_count: 0,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            ..Self::sgd(learning_rate)
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update in place. Rejects non-finite gradients without
    /// touching the parameters.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NnError> {
        if !grads.is_finite() {
            return Err(NnError::NonFinite("gradient contains NaN/Inf".into()));
        }
        if grads.weights.len() != net.layers().len() {
            return Err(NnError::Shape(
                "gradients not aligned with net layout".into(),
            ));
        }
        for (k, layer) in net.layers().iter().enumerate() {
            if grads.weights[k].len() != layer.weights.len()
                || grads.biases[k].len() != layer.bias.len()
            {
                return Err(NnError::Shape(format!(
                    "gradient buffers for layer {k} do not mirror parameter shapes"
                )));
            }
        }

        self.step_count += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.learning_rate;
                for (k, layer) in net.layers_mut().iter_mut().enumerate() {
                    for (w, g) in layer.weights.iter_mut().zip(&grads.weights[k]) {
                        *w -= lr * g;
                    }
                    for (b, g) in layer.bias.iter_mut().zip(&grads.biases[k]) {
                        *b -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.first_moment.is_none() {
                    self.first_moment = Some(Gradients::zeros_like(net));
                    self.second_moment = Some(Gradients::zeros_like(net));
                }
                let m = self.first_moment.as_mut().unwrap();
                let v = self.second_moment.as_mut().unwrap();
                let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);
                let t = self.step_count as i32;
                let bc1 = 1.0 - b1.powi(t);
                let bc2 = 1.0 - b2.powi(t);
                for (k, layer) in net.layers_mut().iter_mut().enumerate() {
                    adam_update(&mut m.weights[k], &mut v.weights[k], &grads.weights[k],
                        &mut layer.weights, b1, b2, bc1, bc2, eps, lr);
                    adam_update(&mut m.biases[k], &mut v.biases[k], &grads.biases[k],
                        &mut layer.bias, b1, b2, bc1, bc2, eps, lr);
                }
            }
        }

        if !net.all_finite() {
            return Err(NnError::NonFinite(
                "parameters became non-finite after update".into(),
            ));
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn adam_update(
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    p: &mut [f64],
    b1: f64,
    b2: f64,
    bc1: f64,
    bc2: f64,
    eps: f64,
    lr: f64,
) {
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseNet, LayerSpec};

    fn scalar_net(w: f64) -> DenseNet {
        let mut net = DenseNet::zeros(&[LayerSpec::new(1, 1, Activation::Linear)]).unwrap();
        net.layers_mut()[0].weights[0] = w;
        net
    }

    fn scalar_grads(net: &DenseNet, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(net);
        grads.weights[0][0] = g;
        grads
    }

    #[test]
    fn sgd_arithmetic() {
        let mut net = scalar_net(1.0);
        let grads = scalar_grads(&net, 2.0);
        let mut opt = Optimizer::sgd(0.1);
        opt.step(&mut net, &grads).unwrap();
        assert!((net.layers()[0].weights[0] - 0.8).abs() < 1e-15);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn sgd_zero_gradient_is_fixed_point() {
        let mut net = scalar_net(1.25);
        let grads = scalar_grads(&net, 0.0);
        let mut opt = Optimizer::sgd(0.1);
        opt.step(&mut net, &grads).unwrap();
        assert_eq!(net.layers()[0].weights[0].to_bits(), 1.25f64.to_bits());
    }

    #[test]
    fn adam_first_step_matches_hand_rolled_oracle() {
        // Oracle: direct evaluation of the bias-corrected update formulas
        // for a single scalar step.
        let g = 3.0f64;
        let (lr, b1, b2, eps) = (1e-3, 0.9, 0.999, 1e-8);
        let m = (1.0 - b1) * g;
        let v = (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1);
        let v_hat = v / (1.0 - b2);
        let expected = 1.0 - lr * m_hat / (v_hat.sqrt() + eps);
        // The corrected first step is approximately -lr * sign(g).
        assert!((expected - (1.0 - lr * g / (g.abs() + eps))).abs() < 1e-12);

        let mut net = scalar_net(1.0);
        let grads = scalar_grads(&net, g);
        let mut opt = Optimizer::adam(lr);
        opt.step(&mut net, &grads).unwrap();
        assert!((net.layers()[0].weights[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_rejected_without_update() {
        let mut net = scalar_net(1.0);
        let grads = scalar_grads(&net, f64::NAN);
        let mut opt = Optimizer::adam(1e-3);
        let err = opt.step(&mut net, &grads);
        assert!(matches!(err, Err(super::super::NnError::NonFinite(_))));
        assert_eq!(net.layers()[0].weights[0], 1.0);
    }

    #[test]
    fn misaligned_gradients_rejected() {
        let mut net = scalar_net(1.0);
        let other = DenseNet::zeros(&[LayerSpec::new(2, 2, Activation::Linear)]).unwrap();
        let grads = Gradients::zeros_like(&other);
        let mut opt = Optimizer::sgd(0.1);
        assert!(opt.step(&mut net, &grads).is_err());
    }
}
