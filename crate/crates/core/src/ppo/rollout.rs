use alloc::vec::Vec;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{log_softmax, PpoError};
use crate::cartpole::Environment;
use crate::hybridnet::HybridNetwork;

/// Running mean/variance used to standardize observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
}

impl ObservationNormalizer {
    pub const CLIP: f64 = 10.0;

    pub fn new(dim: usize) -> Self {
        Self {
            mean: alloc::vec![0.0; dim],
            var: alloc::vec![1.0; dim],
            count: 1e-4,
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        let count = self.count + 1.0;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            let mean = self.mean[i] + delta / count;
            // parallel-variance merge of the old statistics with one sample
            let m2 = self.var[i] * self.count + delta * delta * self.count / count;
            self.mean[i] = mean;
            self.var[i] = m2 / count;
        }
        self.count = count;
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| ((v - self.mean[i]) / libm::sqrt(self.var[i] + 1e-8)).clamp(-Self::CLIP, Self::CLIP))
            .collect()
    }
}

/// One rollout of on-policy experience.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    /// Log-probability of the taken action under the acting policy.
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Whether the episode ended after this step.
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// Critic value of the observation following the last step.
    pub bootstrap_value: f64,
    /// Returns of episodes that finished during this rollout.
    pub episode_returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// An environment plus the state needed to continue episodes across rollouts.
#[derive(Debug, Clone)]
pub struct EnvRunner<E> {
    pub env: E,
    observation: Option<Vec<f64>>,
    episode_return: f64,
    pub normalizer: Option<ObservationNormalizer>,
}

impl<E: Environment> EnvRunner<E> {
    pub fn new(env: E, normalize: bool) -> Self {
        let dim = env.observation_dim();
        Self {
            env,
            observation: None,
            episode_return: 0.0,
            normalizer: normalize.then(|| ObservationNormalizer::new(dim)),
        }
    }

    fn current(&mut self, rng: &mut dyn RngCore) -> Vec<f64> {
        if self.observation.is_none() {
            self.observation = Some(self.env.reset(rng));
        }
        let raw = self.observation.clone().unwrap_or_default();
        match &mut self.normalizer {
            Some(norm) => {
                norm.update(&raw);
                norm.normalize(&raw)
            }
            None => raw,
        }
    }

    fn peek(&self) -> Vec<f64> {
        let raw = self.observation.clone().unwrap_or_default();
        match &self.normalizer {
            Some(norm) => norm.normalize(&raw),
            None => raw,
        }
    }
}

/// Samples an index from the categorical distribution given by `logits`.
pub fn sample_categorical(logits: &[f64], rng: &mut dyn RngCore) -> (usize, f64) {
    let logp = log_softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, lp) in logp.iter().enumerate() {
        acc += libm::exp(*lp);
        if u < acc {
            return (i, *lp);
        }
    }
    let last = logp.len() - 1;
    (last, logp[last])
}

/// Runs the stochastic policy for `steps` environment steps, resetting
/// episodes as they end.
pub fn collect_rollout<E: Environment>(
    actor: &HybridNetwork,
    critic: &HybridNetwork,
    runner: &mut EnvRunner<E>,
    steps: usize,
    rng: &mut dyn RngCore,
) -> Result<RolloutBuffer, PpoError> {
    let mut buf = RolloutBuffer::default();
    for _ in 0..steps {
        let obs = runner.current(rng);
        let (logits, _) = actor.forward(&obs)?;
        let (value, _) = critic.forward(&obs)?;
        let (action, log_prob) = sample_categorical(&logits, rng);
        let (next, reward, done) = runner.env.step(action);
        runner.episode_return += reward;
        if done {
            buf.episode_returns.push(runner.episode_return);
            runner.episode_return = 0.0;
            runner.observation = Some(runner.env.reset(rng));
        } else {
            runner.observation = Some(next);
        }
        buf.observations.push(obs);
        buf.actions.push(action);
        buf.log_probs.push(log_prob);
        buf.rewards.push(reward);
        buf.dones.push(done);
        buf.values.push(value[0]);
    }
    let last = runner.peek();
    buf.bootstrap_value = if last.is_empty() {
        0.0
    } else {
        critic.forward(&last)?.0[0]
    };
    Ok(buf)
}
