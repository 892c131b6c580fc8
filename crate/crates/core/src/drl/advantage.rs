//! Generalized advantage estimation and DQN TD targets.

use super::{DrlError, Experience};
use crate::nn::DenseNet;

/// Exponentially weighted advantages over one trajectory.
///
/// delta_t = r_t + gamma * V_{t+1} - V_t, with `values` carrying one
/// trailing bootstrap entry (length T+1). Advantages follow the backward
/// recursion A_t = delta_t + gamma * lambda * A_{t+1}.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<Vec<f64>, DrlError> {
    if values.len() != rewards.len() + 1 {
        return Err(DrlError::Invalid(format!(
            "values length {} must be rewards length {} plus one bootstrap entry",
            values.len(),
            rewards.len()
        )));
    }
    let t_len = rewards.len();
    let mut advantages = vec![0.0; t_len];
    let mut acc = 0.0;
    for t in (0..t_len).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        advantages[t] = acc;
    }
    Ok(advantages)
}

/// y = r + gamma * max_a Q_target(s', a) for non-terminal transitions,
/// y = r for terminal ones.
pub fn dqn_td_targets(
    batch: &[&Experience],
    target: &DenseNet,
    gamma: f64,
) -> Result<Vec<f64>, DrlError> {
    if batch.is_empty() {
        return Err(DrlError::Invalid("empty batch".into()));
    }
    let mut out = Vec::with_capacity(batch.len());
    for e in batch {
        if e.done {
            out.push(e.reward);
        } else {
            let q_next = target.forward(&e.next_state)?;
            let best = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.push(e.reward + gamma * best);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseNet, LayerSpec};
    use crate::stream;
    use rand::Rng;

    /// Brute-force double sum: A_t = sum_{l>=0} (gamma*lambda)^l * delta_{t+l}.
    fn gae_brute_force(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
        let t_len = rewards.len();
        let deltas: Vec<f64> = (0..t_len)
            .map(|t| rewards[t] + gamma * values[t + 1] - values[t])
            .collect();
        (0..t_len)
            .map(|t| {
                let mut acc = 0.0;
                for (l, d) in deltas[t..].iter().enumerate() {
                    acc += (gamma * lambda).powi(l as i32) * d;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn lambda_zero_collapses_to_td_residual() {
        let rewards = [1.0, -2.0, 0.5];
        let values = [0.3, 0.7, -0.1, 0.9];
        let adv = gae_advantages(&rewards, &values, 0.9, 0.0).unwrap();
        for t in 0..3 {
            let delta = rewards[t] + 0.9 * values[t + 1] - values[t];
            assert_eq!(adv[t], delta);
        }
    }

    #[test]
    fn lambda_one_gamma_one_telescopes_to_mc_return() {
        let rewards = [1.0, 2.0, 3.0, -1.0];
        let values = [0.5, -0.5, 0.25, 0.75, 2.0];
        let adv = gae_advantages(&rewards, &values, 1.0, 1.0).unwrap();
        for t in 0..4 {
            let ret: f64 = rewards[t..].iter().sum::<f64>() + values[4];
            let expect = ret - values[t];
            assert!((adv[t] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force_double_sum() {
        let rewards = [0.4, -1.1, 2.2];
        let values = [1.0, 0.0, -0.5, 0.25];
        let adv = gae_advantages(&rewards, &values, 0.9, 0.5).unwrap();
        let oracle = gae_brute_force(&rewards, &values, 0.9, 0.5);
        for (a, b) in adv.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn random_sequences_match_oracle() {
        let mut rng = stream::substream(17, &[0xae]);
        for _ in 0..200 {
            let t_len = rng.random_range(1..12usize);
            let rewards: Vec<f64> = (0..t_len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let values: Vec<f64> = (0..=t_len).map(|_| rng.random_range(-3.0..3.0)).collect();
            let gamma = rng.random_range(0.0..1.0);
            let lambda = rng.random_range(0.0..=1.0);
            let adv = gae_advantages(&rewards, &values, gamma, lambda).unwrap();
            let oracle = gae_brute_force(&rewards, &values, gamma, lambda);
            for (a, b) in adv.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(gae_advantages(&[1.0], &[0.0], 0.9, 0.9).is_err());
        assert!(gae_advantages(&[1.0], &[0.0, 0.0, 0.0], 0.9, 0.9).is_err());
    }

    fn exp_with(reward: f64, next: Vec<f64>, done: bool) -> Experience {
        Experience {
            state: vec![0.0, 0.0],
            action: 0,
            power_dbm: 0.0,
            reward,
            next_state: next,
            done,
        }
    }

    #[test]
    fn terminal_target_is_reward() {
        let net = DenseNet::zeros(&[LayerSpec::new(2, 2, Activation::Linear)]).unwrap();
        let e = exp_with(1.0, vec![0.0, 0.0], true);
        let y = dqn_td_targets(&[&e], &net, 0.9).unwrap();
        assert_eq!(y, vec![1.0]);
    }

    #[test]
    fn zero_gamma_is_myopic() {
        let mut net = DenseNet::zeros(&[LayerSpec::new(2, 2, Activation::Linear)]).unwrap();
        net.layers_mut()[0].bias.copy_from_slice(&[5.0, 7.0]);
        let e1 = exp_with(0.25, vec![1.0, 1.0], false);
        let e2 = exp_with(-0.5, vec![0.0, 1.0], false);
        let y = dqn_td_targets(&[&e1, &e2], &net, 0.0).unwrap();
        assert_eq!(y, vec![0.25, -0.5]);
    }

    #[test]
    fn nonterminal_uses_target_max() {
        let mut net = DenseNet::zeros(&[LayerSpec::new(2, 2, Activation::Linear)]).unwrap();
        net.layers_mut()[0].bias.copy_from_slice(&[5.0, 7.0]);
        let e = exp_with(1.0, vec![0.0, 0.0], false);
        let y = dqn_td_targets(&[&e], &net, 0.5).unwrap();
        assert!((y[0] - (1.0 + 0.5 * 7.0)).abs() < 1e-15);
    }
}
