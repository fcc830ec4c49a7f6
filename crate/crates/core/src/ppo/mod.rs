//! Clipped-surrogate PPO for a pair of same-architecture actor and critic
//! networks, plus the 10-episode evaluation protocol used to score
//! candidates.

mod gae;
mod rollout;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use gae::{compute_gae, normalize_advantages, AdvantageSet};
pub use rollout::{collect_rollout, sample_categorical, EnvRunner, ObservationNormalizer, RolloutBuffer};
pub use train::{
    evaluate, evaluate_policy, train_candidate, ActorCritic, CurvePoint, EvalOptions, Evaluation,
    TrainingOutcome, ACTOR_HEAD, CRITIC_HEAD,
};

use crate::hybridnet::{adam_step, AdamState, Gradients, NetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    /// Weight of the value loss.
    pub value_coef: f64,
    /// Weight of the entropy bonus.
    pub entropy_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    /// Linearly decay the learning rate to zero over training.
    pub anneal_lr: bool,
    pub adam_epsilon: f64,
    pub rollout_length: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub total_timesteps: usize,
    pub max_grad_norm: f64,
    pub normalize_observations: bool,
    pub eval_episodes: usize,
    /// Sample actions during evaluation instead of taking the argmax.
    pub stochastic_eval: bool,
    /// Shot count for bitstring readouts during evaluation (analytic when unset).
    pub eval_shots: Option<u32>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 2.5e-4,
            anneal_lr: false,
            adam_epsilon: 1e-5,
            rollout_length: 1024,
            epochs: 4,
            minibatch_size: 256,
            total_timesteps: 20_000,
            max_grad_norm: 0.5,
            normalize_observations: false,
            eval_episodes: 10,
            stochastic_eval: false,
            eval_shots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid PPO config: {0}")]
pub struct ConfigError(pub String);

impl PpoConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(m.into()));
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return err("clip_epsilon must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return err("gamma must lie in (0, 1]");
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return err("gae_lambda must lie in (0, 1]");
        }
        if !(self.learning_rate > 0.0) || !(self.adam_epsilon > 0.0) {
            return err("learning_rate and adam_epsilon must be positive");
        }
        if !(self.value_coef >= 0.0) || !(self.entropy_coef >= 0.0) || !(self.max_grad_norm > 0.0) {
            return err("value_coef and entropy_coef must be non-negative, max_grad_norm positive");
        }
        if self.rollout_length == 0 || self.epochs == 0 || self.minibatch_size == 0 || self.eval_episodes == 0 {
            return err("rollout_length, epochs, minibatch_size and eval_episodes must be positive");
        }
        if self.eval_shots == Some(0) {
            return err("eval_shots must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PpoError {
    #[error(transparent)]
    Network(#[from] NetError),
    #[error("loss became non-finite")]
    NonFiniteLoss,
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|l| libm::exp(l - max)).sum();
    let lse = max + libm::log(sum);
    logits.iter().map(|l| l - lse).collect()
}

/// Entropy of the categorical distribution with the given log-probabilities.
pub fn categorical_entropy(log_probs: &[f64]) -> f64 {
    -log_probs.iter().map(|lp| libm::exp(*lp) * lp).sum::<f64>()
}

/// `r * A`.
pub fn unclipped_objective(ratio: f64, advantage: f64) -> f64 {
    ratio * advantage
}

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    unclipped_objective(ratio, advantage).min(clipped)
}

/// Derivative of [`clipped_objective`] with respect to the ratio.
fn clipped_objective_slope(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    if ratio * advantage <= clipped {
        advantage
    } else {
        0.0
    }
}

/// Adam state for both networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub actor: AdamState,
    pub critic: AdamState,
}

impl Optimizers {
    pub fn new(agent: &ActorCritic, config: &PpoConfig) -> Self {
        Self {
            actor: AdamState::new(&agent.actor, config.learning_rate).with_epsilon(config.adam_epsilon),
            critic: AdamState::new(&agent.critic, config.learning_rate).with_epsilon(config.adam_epsilon),
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.actor.learning_rate = lr;
        self.critic.learning_rate = lr;
    }
}

/// Means over every minibatch of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Several epochs of shuffled minibatch steps on
/// `-L_clip + c1 * L_vf - c2 * S`, with global gradient-norm clipping.
pub fn ppo_update(
    agent: &mut ActorCritic,
    optimizers: &mut Optimizers,
    buffer: &RolloutBuffer,
    advantages: &AdvantageSet,
    config: &PpoConfig,
    rng: &mut dyn RngCore,
) -> Result<UpdateStats, PpoError> {
    let n = buffer.len();
    let mut stats = UpdateStats::default();
    if n == 0 {
        return Ok(stats);
    }
    let adv = normalize_advantages(&advantages.advantages);
    let mut order: Vec<usize> = (0..n).collect();
    let mut batches = 0usize;

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.minibatch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut actor_grads = Gradients::zeros(&agent.actor);
            let mut critic_grads = Gradients::zeros(&agent.critic);
            let mut batch_stats = UpdateStats::default();

            for &i in batch {
                let obs = &buffer.observations[i];
                let (logits, actor_tape) = agent.actor.forward(obs)?;
                let (value, critic_tape) = agent.critic.forward(obs)?;

                let logp = log_softmax(&logits);
                let action = buffer.actions[i];
                let ratio = libm::exp(logp[action] - buffer.log_probs[i]);
                let a = adv[i];
                let objective = clipped_objective(ratio, a, config.clip_epsilon);
                let entropy = categorical_entropy(&logp);
                let value_err = value[0] - advantages.returns[i];

                batch_stats.policy_loss -= objective * scale;
                batch_stats.value_loss += value_err * value_err * scale;
                batch_stats.entropy += entropy * scale;
                if (ratio - 1.0).abs() > config.clip_epsilon {
                    batch_stats.clip_fraction += scale;
                }

                // d(-objective)/d logits, via d log p_a / d l_j = [a == j] - p_j
                let d_logp = -clipped_objective_slope(ratio, a, config.clip_epsilon) * ratio;
                let grad_logits: Vec<f64> = logp
                    .iter()
                    .enumerate()
                    .map(|(j, lp)| {
                        let p = libm::exp(*lp);
                        let indicator = if j == action { 1.0 } else { 0.0 };
                        let d_entropy = -p * (lp + entropy);
                        scale * (d_logp * (indicator - p) - config.entropy_coef * d_entropy)
                    })
                    .collect();
                agent.actor.backward_into(&actor_tape, &grad_logits, &mut actor_grads)?;
                let grad_value = [scale * config.value_coef * 2.0 * value_err];
                agent.critic.backward_into(&critic_tape, &grad_value, &mut critic_grads)?;
            }

            let loss = batch_stats.policy_loss + config.value_coef * batch_stats.value_loss
                - config.entropy_coef * batch_stats.entropy;
            if !loss.is_finite() || !actor_grads.is_finite() || !critic_grads.is_finite() {
                return Err(PpoError::NonFiniteLoss);
            }

            let norm = libm::sqrt(actor_grads.squared_norm() + critic_grads.squared_norm());
            if norm > config.max_grad_norm {
                let factor = config.max_grad_norm / (norm + 1e-6);
                actor_grads.scale(factor);
                critic_grads.scale(factor);
            }
            adam_step(&mut agent.actor, &actor_grads, &mut optimizers.actor);
            adam_step(&mut agent.critic, &critic_grads, &mut optimizers.critic);

            stats.policy_loss += batch_stats.policy_loss;
            stats.value_loss += batch_stats.value_loss;
            stats.entropy += batch_stats.entropy;
            stats.clip_fraction += batch_stats.clip_fraction;
            batches += 1;
        }
    }

    let b = batches as f64;
    stats.policy_loss /= b;
    stats.value_loss /= b;
    stats.entropy /= b;
    stats.clip_fraction /= b;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_objective(1.0, 0.7, 0.2), 0.7);
        assert_eq!(clipped_objective(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_objective(0.5, -1.0, 0.2), -0.8);
    }

    #[test]
    fn slope_zero_only_when_clipped_branch_wins() {
        assert_eq!(clipped_objective_slope(1.5, 1.0, 0.2), 0.0);
        assert_eq!(clipped_objective_slope(0.5, 1.0, 0.2), 1.0);
        assert_eq!(clipped_objective_slope(0.5, -1.0, 0.2), 0.0);
        assert_eq!(clipped_objective_slope(1.5, -1.0, 0.2), -1.0);
        assert_eq!(clipped_objective_slope(1.1, 2.0, 0.2), 2.0);
    }

    #[test]
    fn entropy_bounds() {
        assert!((categorical_entropy(&log_softmax(&[0.3, 0.3])) - LN_2).abs() < 1e-15);
        let e = categorical_entropy(&log_softmax(&[10.0, -10.0]));
        assert!(e > 0.0 && e < LN_2);
    }

    #[test]
    fn log_softmax_is_stable() {
        let lp = log_softmax(&[1000.0, 1000.0]);
        assert!((lp[0] + LN_2).abs() < 1e-12);
    }

    #[test]
    fn default_config_is_valid() {
        PpoConfig::default().validate().unwrap();
        let bad = PpoConfig {
            clip_epsilon: 1.5,
            ..PpoConfig::default()
        };
        assert!(bad.validate().unwrap_err().0.contains("clip_epsilon"));
    }
}
