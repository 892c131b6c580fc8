//! Action sampling: Boltzmann exploration over Q-values and the squashed
//! Gaussian power policy.

use super::DrlError;
use rand::Rng;

/// Softmax distribution over Q-values at temperature tau, computed with
/// max-subtraction for numerical stability.
pub fn boltzmann_probabilities(q_values: &[f64], tau: f64) -> Result<Vec<f64>, DrlError> {
    if !(tau > 0.0) {
        return Err(DrlError::Invalid(format!("temperature {tau} must be > 0")));
    }
    if q_values.is_empty() {
        return Err(DrlError::Invalid("empty q-value vector".into()));
    }
    if q_values.iter().any(|q| !q.is_finite()) {
        return Err(DrlError::Invalid("non-finite q-value".into()));
    }
    let max = q_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q_values.iter().map(|q| ((q - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Samples an action index from the Boltzmann distribution.
pub fn boltzmann_sample(
    q_values: &[f64],
    tau: f64,
    rng: &mut impl Rng,
) -> Result<usize, DrlError> {
    let probs = boltzmann_probabilities(q_values, tau)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(probs.len() - 1)
}

const LOG_STD_MIN: f64 = -4.0;
const LOG_STD_MAX: f64 = 1.0;
const SQUASH_EPS: f64 = 1e-9;

/// Smoothly bounds the raw log-std head into [LOG_STD_MIN, LOG_STD_MAX].
#[inline]
pub(crate) fn bound_log_std(raw: f64) -> f64 {
    let s = 1.0 / (1.0 + (-raw).exp());
    LOG_STD_MIN + (LOG_STD_MAX - LOG_STD_MIN) * s
}

/// d(bounded log-std)/d(raw)
#[inline]
pub(crate) fn bound_log_std_grad(raw: f64) -> f64 {
    let s = 1.0 / (1.0 + (-raw).exp());
    (LOG_STD_MAX - LOG_STD_MIN) * s * (1.0 - s)
}

#[derive(Debug, Clone, Copy)]
pub struct PowerSample {
    pub power_dbm: f64,
    pub log_prob: f64,
    /// Pre-squash Gaussian draw, kept for the policy-gradient update.
    pub pre_squash: f64,
}

#[inline]
fn squash_to_bounds(z: f64, min_dbm: f64, max_dbm: f64) -> f64 {
    let u = z.tanh();
    (min_dbm + (u + 1.0) * 0.5 * (max_dbm - min_dbm)).clamp(min_dbm, max_dbm)
}

/// Log-density of the squashed, affinely mapped power sample, as a function
/// of the Gaussian head (mean, bounded log-std) and the pre-squash draw z.
pub fn power_log_prob(mean: f64, log_std: f64, z: f64, min_dbm: f64, max_dbm: f64) -> f64 {
    let std = log_std.exp();
    let normalized = (z - mean) / std;
    let log_normal = -0.5 * normalized * normalized - log_std - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let u = z.tanh();
    log_normal - (1.0 - u * u + SQUASH_EPS).ln() - ((max_dbm - min_dbm) * 0.5).ln()
}

/// Score-function gradients of `power_log_prob` with respect to the mean
/// and the bounded log-std, holding the sampled z fixed. The squash
/// correction term does not depend on the parameters once z is fixed.
pub fn power_log_prob_grads(mean: f64, log_std: f64, z: f64) -> (f64, f64) {
    let std = log_std.exp();
    let g_mean = (z - mean) / (std * std);
    let g_log_std = ((z - mean) * (z - mean)) / (std * std) - 1.0;
    (g_mean, g_log_std)
}

/// Draws a power level from the squashed Gaussian policy. The sample is
/// squashed through tanh and affinely mapped into [min_dbm, max_dbm]; the
/// log-probability accounts for both transformations.
pub fn sample_power(
    mean: f64,
    log_std: f64,
    min_dbm: f64,
    max_dbm: f64,
    rng: &mut impl Rng,
) -> PowerSample {
    let std = log_std.exp();
    let noise: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
    let z = mean + std * noise;
    let power_dbm = squash_to_bounds(z, min_dbm, max_dbm);
    PowerSample {
        power_dbm,
        log_prob: power_log_prob(mean, log_std, z, min_dbm, max_dbm),
        pre_squash: z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{self, tag};

    #[test]
    fn symmetric_q_gives_half_half() {
        let p = boltzmann_probabilities(&[0.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_zero_matches_softmax_oracle() {
        // Direct evaluation: [e/(e+1), 1/(e+1)].
        let p = boltzmann_probabilities(&[1.0, 0.0], 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((p[0] - 0.7311).abs() < 5e-5);
    }

    #[test]
    fn near_zero_temperature_is_argmax() {
        let q = [0.3, 2.0, -1.0, 1.9];
        let mut rng = stream::substream(5, &[tag::EXPLORE]);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[boltzmann_sample(&q, 1e-6, &mut rng).unwrap()] += 1;
        }
        let empirical_argmax = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| **c)
            .unwrap()
            .0;
        assert_eq!(empirical_argmax, 1);
        assert_eq!(counts[1], 10_000, "tau -> 0 must put all mass on argmax");
    }

    #[test]
    fn normalization_and_shift_invariance() {
        let mut rng = stream::substream(6, &[tag::EXPLORE]);
        use rand::Rng;
        for _ in 0..200 {
            let n = rng.random_range(2..8usize);
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let tau = rng.random_range(0.05..5.0);
            let p = boltzmann_probabilities(&q, tau).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = q.iter().map(|v| v + 123.456).collect();
            let ps = boltzmann_probabilities(&shifted, tau).unwrap();
            for (a, b) in p.iter().zip(&ps) {
                assert!((a - b).abs() < 1e-12);
            }
            // Scaling q and tau jointly leaves the distribution unchanged.
            let c = rng.random_range(0.1..10.0);
            let scaled: Vec<f64> = q.iter().map(|v| v * c).collect();
            let pc = boltzmann_probabilities(&scaled, tau * c).unwrap();
            for (a, b) in p.iter().zip(&pc) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nonpositive_temperature_rejected() {
        assert!(boltzmann_probabilities(&[1.0], 0.0).is_err());
        assert!(boltzmann_probabilities(&[1.0], -1.0).is_err());
    }

    #[test]
    fn degenerate_std_returns_squashed_mean() {
        let mut rng = stream::substream(7, &[tag::POWER]);
        let mean = 0.4;
        let log_std = (1e-6f64).ln();
        let s = sample_power(mean, log_std, -10.0, 23.0, &mut rng);
        let expected = -10.0 + (mean.tanh() + 1.0) * 0.5 * 33.0;
        assert!(
            (s.power_dbm - expected).abs() < 1e-3,
            "{} vs {}",
            s.power_dbm,
            expected
        );
    }

    #[test]
    fn mean_at_midpoint_with_symmetric_bounds() {
        // Mean 0 squashes to the bound midpoint; over many draws the sample
        // mean stays near it.
        let mut rng = stream::substream(8, &[tag::POWER]);
        let mut acc = 0.0;
        let n = 10_000;
        for _ in 0..n {
            acc += sample_power(0.0, (0.3f64).ln(), -10.0, 30.0, &mut rng).power_dbm;
        }
        let mean = acc / n as f64;
        assert!((mean - 10.0).abs() < 0.5, "sample mean {mean} should be near 10");
    }

    #[test]
    fn samples_always_within_bounds() {
        let mut rng = stream::substream(9, &[tag::POWER]);
        for _ in 0..5_000 {
            let s = sample_power(3.0, (2.0f64).ln(), -10.0, 23.0, &mut rng);
            assert!((-10.0..=23.0).contains(&s.power_dbm));
        }
    }

    #[test]
    fn log_prob_grads_match_finite_differences() {
        let (mean, log_std, z) = (0.3, -0.5, 0.9);
        let (g_mean, g_log_std) = power_log_prob_grads(mean, log_std, z);
        let eps = 1e-6;
        let fd_mean = (power_log_prob(mean + eps, log_std, z, -10.0, 23.0)
            - power_log_prob(mean - eps, log_std, z, -10.0, 23.0))
            / (2.0 * eps);
        let fd_log_std = (power_log_prob(mean, log_std + eps, z, -10.0, 23.0)
            - power_log_prob(mean, log_std - eps, z, -10.0, 23.0))
            / (2.0 * eps);
        assert!((g_mean - fd_mean).abs() < 1e-6, "{g_mean} vs {fd_mean}");
        assert!(
            (g_log_std - fd_log_std).abs() < 1e-6,
            "{g_log_std} vs {fd_log_std}"
        );
    }
}
