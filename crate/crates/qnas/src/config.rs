//! Flat key/value run configuration (TOML syntax).
//!
//! Every key is optional; missing keys take the library defaults. The file
//! mirrors [`SearchConfig`] and [`PpoConfig`] field names without nesting:
//!
//! ```toml
//! population_size = 3
//! sample_size = 2
//! cycles = 5
//! total_timesteps = 500
//! ```

use std::path::Path;

use qnas_core::evolution::SearchConfig;
use qnas_core::ppo::PpoConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] qnas_core::evolution::SearchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatConfig {
    pub population_size: usize,
    pub sample_size: usize,
    pub cycles: usize,
    pub quantum_probability: f64,
    pub sample_with_replacement: bool,
    pub seed: u64,

    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub anneal_lr: bool,
    pub adam_epsilon: f64,
    pub rollout_length: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub total_timesteps: usize,
    pub max_grad_norm: f64,
    pub normalize_observations: bool,
    pub eval_episodes: usize,
    pub stochastic_eval: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_shots: Option<u32>,
}

impl Default for FlatConfig {
    fn default() -> Self {
        SearchConfig::default().into()
    }
}

impl From<SearchConfig> for FlatConfig {
    fn from(c: SearchConfig) -> Self {
        let p = c.ppo;
        Self {
            population_size: c.population_size,
            sample_size: c.sample_size,
            cycles: c.cycles,
            quantum_probability: c.quantum_probability,
            sample_with_replacement: c.sample_with_replacement,
            seed: c.seed,
            clip_epsilon: p.clip_epsilon,
            value_coef: p.value_coef,
            entropy_coef: p.entropy_coef,
            gamma: p.gamma,
            gae_lambda: p.gae_lambda,
            learning_rate: p.learning_rate,
            anneal_lr: p.anneal_lr,
            adam_epsilon: p.adam_epsilon,
            rollout_length: p.rollout_length,
            epochs: p.epochs,
            minibatch_size: p.minibatch_size,
            total_timesteps: p.total_timesteps,
            max_grad_norm: p.max_grad_norm,
            normalize_observations: p.normalize_observations,
            eval_episodes: p.eval_episodes,
            stochastic_eval: p.stochastic_eval,
            eval_shots: p.eval_shots,
        }
    }
}

impl From<FlatConfig> for SearchConfig {
    fn from(f: FlatConfig) -> Self {
        SearchConfig {
            population_size: f.population_size,
            sample_size: f.sample_size,
            cycles: f.cycles,
            quantum_probability: f.quantum_probability,
            sample_with_replacement: f.sample_with_replacement,
            seed: f.seed,
            ppo: PpoConfig {
                clip_epsilon: f.clip_epsilon,
                value_coef: f.value_coef,
                entropy_coef: f.entropy_coef,
                gamma: f.gamma,
                gae_lambda: f.gae_lambda,
                learning_rate: f.learning_rate,
                anneal_lr: f.anneal_lr,
                adam_epsilon: f.adam_epsilon,
                rollout_length: f.rollout_length,
                epochs: f.epochs,
                minibatch_size: f.minibatch_size,
                total_timesteps: f.total_timesteps,
                max_grad_norm: f.max_grad_norm,
                normalize_observations: f.normalize_observations,
                eval_episodes: f.eval_episodes,
                stochastic_eval: f.stochastic_eval,
                eval_shots: f.eval_shots,
            },
        }
    }
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<SearchConfig, ConfigFileError> {
    let flat: FlatConfig = toml::from_str(text)?;
    let config = SearchConfig::from(flat);
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SearchConfig, ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Every field written out, defaults included.
pub fn render_config(config: &SearchConfig) -> String {
    toml::to_string(&FlatConfig::from(config.clone())).expect("flat config always serializes")
}

/// SHA-256 (hex) of the rendered config.
pub fn config_hash(config: &SearchConfig) -> String {
    hex::encode(Sha256::digest(render_config(config).as_bytes()))
}
