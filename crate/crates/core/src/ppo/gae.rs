use alloc::vec;
use alloc::vec::Vec;

use super::RolloutBuffer;

/// GAE advantages and the matching value targets.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    /// `advantages + values`.
    pub returns: Vec<f64>,
}

/// `A_t = sum_l (gamma lambda)^l delta_{t+l}`, truncated at episode ends.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> AdvantageSet {
    let n = buffer.len();
    let mut advantages = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n {
            buffer.values[t + 1]
        } else {
            buffer.bootstrap_value
        };
        let live = if buffer.dones[t] { 0.0 } else { 1.0 };
        let delta = buffer.rewards[t] + gamma * next_value * live - buffer.values[t];
        running = delta + gamma * lambda * live * running;
        advantages[t] = running;
    }
    let returns = advantages
        .iter()
        .zip(&buffer.values)
        .map(|(a, v)| a + v)
        .collect();
    AdvantageSet {
        advantages,
        returns,
    }
}

/// Rescales to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(advantages: &[f64]) -> Vec<f64> {
    let n = advantages.len() as f64;
    if advantages.is_empty() {
        return Vec::new();
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var) + 1e-8;
    advantages.iter().map(|a| (a - mean) / std).collect()
}
