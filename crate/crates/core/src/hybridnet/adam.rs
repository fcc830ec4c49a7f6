use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Gradients, HybridNetwork};

/// Adam moments for every parameter block of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &HybridNetwork, learning_rate: f64) -> Self {
        let shapes: Vec<Vec<f64>> = net.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: shapes.clone(),
            second: shapes,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// One bias-corrected Adam update over dense and quantum parameters alike.
pub fn adam_step(net: &mut HybridNetwork, grads: &Gradients, state: &mut AdamState) {
    state.step += 1;
    let t = state.step as f64;
    let correction1 = 1.0 - libm::pow(state.beta1, t);
    let correction2 = 1.0 - libm::pow(state.beta2, t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);

    for (((params, g), m), v) in net
        .param_blocks_mut()
        .into_iter()
        .zip(&grads.blocks)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        assert_eq!(params.len(), g.len(), "gradient block shape mismatch");
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            params[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
}
