use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    collect_rollout, compute_gae, ppo_update, sample_categorical, EnvRunner, ObservationNormalizer,
    Optimizers, PpoConfig, PpoError,
};
use crate::cartpole::{Action, CartPoleEnv, CartState, ACTION_COUNT, OBSERVATION_DIM};
use crate::dna::{resolve_plan, Genome, PlanError};
use crate::hybridnet::{build_network, HybridNetwork, ACTOR_HEAD_GAIN, CRITIC_HEAD_GAIN};

/// Output width of the policy network (one logit per action).
pub const ACTOR_HEAD: usize = ACTION_COUNT;
/// Output width of the value network.
pub const CRITIC_HEAD: usize = 1;

/// Actor and critic built from the same genome.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: HybridNetwork,
    pub critic: HybridNetwork,
    /// Frozen observation statistics, when normalization was enabled.
    pub normalizer: Option<ObservationNormalizer>,
}

impl ActorCritic {
    /// Resolves both plans and initializes the networks from `rng`.
    pub fn build(genome: &Genome, rng: &mut dyn RngCore) -> Result<Self, PlanError> {
        let actor_plan = resolve_plan(genome, OBSERVATION_DIM, ACTOR_HEAD)?;
        let critic_plan = resolve_plan(genome, OBSERVATION_DIM, CRITIC_HEAD)?;
        let actor = build_network(&actor_plan, ACTOR_HEAD_GAIN, rng);
        let critic = build_network(&critic_plan, CRITIC_HEAD_GAIN, rng);
        Ok(Self {
            actor,
            critic,
            normalizer: None,
        })
    }

    fn prepare(&self, observation: &[f64]) -> Vec<f64> {
        match &self.normalizer {
            Some(n) => n.normalize(observation),
            None => observation.to_vec(),
        }
    }

    /// Action logits for a raw observation.
    pub fn logits(
        &self,
        observation: &[f64],
        shots: Option<(u32, &mut dyn RngCore)>,
    ) -> Result<Vec<f64>, PpoError> {
        Ok(self.actor.predict(&self.prepare(observation), shots)?)
    }
}

/// One row of a training curve, emitted after every update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub timestep: usize,
    /// Mean return of episodes that ended during the rollout.
    pub episodic_return: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub agent: ActorCritic,
    pub curve: Vec<CurvePoint>,
    pub timesteps: usize,
    /// Set when training hit a numerical failure; the candidate scores 0.
    pub failure: Option<String>,
}

/// Trains actor and critic for `config.total_timesteps` environment steps.
/// The result depends only on `(genome, config, seed)`.
pub fn train_candidate(genome: &Genome, config: &PpoConfig, seed: u64) -> Result<TrainingOutcome, PlanError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agent = ActorCritic::build(genome, &mut rng)?;
    let mut optimizers = Optimizers::new(&agent, config);
    let mut runner = EnvRunner::new(CartPoleEnv::new(), config.normalize_observations);
    let mut curve = Vec::new();
    let mut timesteps = 0;
    let updates = config.total_timesteps.div_ceil(config.rollout_length);

    let mut failure = None;
    for update in 0..updates {
        if config.anneal_lr {
            let frac = 1.0 - update as f64 / updates as f64;
            optimizers.set_learning_rate(frac * config.learning_rate);
        }
        let steps = config.rollout_length.min(config.total_timesteps - timesteps);
        let result = collect_rollout(&agent.actor, &agent.critic, &mut runner, steps, &mut rng).and_then(|buffer| {
            let advantages = compute_gae(&buffer, config.gamma, config.gae_lambda);
            let stats = ppo_update(&mut agent, &mut optimizers, &buffer, &advantages, config, &mut rng)?;
            Ok((buffer, stats))
        });
        match result {
            Ok((buffer, stats)) => {
                timesteps += steps;
                let episodic_return = (!buffer.episode_returns.is_empty()).then(|| {
                    buffer.episode_returns.iter().sum::<f64>() / buffer.episode_returns.len() as f64
                });
                curve.push(CurvePoint {
                    timestep: timesteps,
                    episodic_return,
                    policy_loss: stats.policy_loss,
                    value_loss: stats.value_loss,
                    entropy: stats.entropy,
                    clip_fraction: stats.clip_fraction,
                });
            }
            Err(e) => {
                failure = Some(format!("{e} at timestep {timesteps}"));
                break;
            }
        }
    }

    agent.normalizer = runner.normalizer;
    Ok(TrainingOutcome {
        agent,
        curve,
        timesteps,
        failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub episodes: usize,
    /// Sample from the policy instead of taking the argmax logit.
    pub stochastic: bool,
    /// Sample bitstring readouts with this many shots.
    pub shots: Option<u32>,
}

impl EvalOptions {
    pub fn from_config(config: &PpoConfig) -> Self {
        Self {
            episodes: config.eval_episodes,
            stochastic: config.stochastic_eval,
            shots: config.eval_shots,
        }
    }
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            episodes: 10,
            stochastic: false,
            shots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean: f64,
    pub episodes: Vec<f64>,
}

impl Evaluation {
    pub fn perfect_episodes(&self) -> usize {
        self.episodes.iter().filter(|r| **r >= 500.0).count()
    }
}

/// Runs full episodes with `policy` and averages their returns.
pub fn evaluate_policy<F>(mut policy: F, episodes: usize, rng: &mut dyn RngCore) -> Result<Evaluation, PpoError>
where
    F: FnMut(&[f64], &mut dyn RngCore) -> Result<Action, PpoError>,
{
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = CartState::reset(rng);
        let mut total = 0.0;
        loop {
            let action = policy(&state.observation(), rng)?;
            let (next, reward, done) = state.step(action).expect("episode checked for termination");
            total += reward;
            state = next;
            if done {
                break;
            }
        }
        returns.push(total);
    }
    let mean = if returns.is_empty() {
        0.0
    } else {
        returns.iter().sum::<f64>() / returns.len() as f64
    };
    Ok(Evaluation {
        mean,
        episodes: returns,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Scores the actor over `options.episodes` episodes.
pub fn evaluate(agent: &ActorCritic, options: EvalOptions, rng: &mut dyn RngCore) -> Result<Evaluation, PpoError> {
    evaluate_policy(
        |obs, rng| {
            let logits = match options.shots {
                Some(shots) => agent.logits(obs, Some((shots, &mut *rng)))?,
                None => agent.logits(obs, None)?,
            };
            let index = if options.stochastic {
                sample_categorical(&logits, rng).0
            } else {
                argmax(&logits)
            };
            Ok(Action::from_index(index))
        },
        options.episodes,
        rng,
    )
}
