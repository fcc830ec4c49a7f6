//! Trainable hybrid networks built from a [`NetworkPlan`]: dense layers and
//! variational circuits in one stage sequence, with exact reverse-mode
//! gradients and Adam updates.
//!
//! Parameters are exposed as a flat list of blocks in stage order: a dense
//! stage contributes `weight` (`out x in`, row-major) then `bias`, a quantum
//! stage contributes its `angles` block.

mod adam;
mod init;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{SQRT_2, TAU};

use rand::{Rng, RngCore};

pub use adam::{adam_step, AdamState};
pub use init::orthogonal;

use crate::dna::{Activation, NetworkPlan, ReadoutMode, Shots};
use crate::qsim::{quantum_backward, quantum_forward, CircuitShape, QsimError, QuantumWeights};

/// Gain of hidden dense layers.
pub const HIDDEN_GAIN: f64 = SQRT_2;
pub const ACTOR_HEAD_GAIN: f64 = 0.01;
pub const CRITIC_HEAD_GAIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("stage {stage} produced a non-finite value")]
    NonFiniteActivation { stage: usize },
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("parameter block {block} has {got} values, expected {expected}")]
    BlockShape {
        block: usize,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} parameter blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error(transparent)]
    Quantum(#[from] QsimError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_width: usize,
    pub out_width: usize,
    /// Row-major `out_width x in_width`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Option<Activation>,
}

impl DenseLayer {
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut pre = self.bias.clone();
        for (o, z) in pre.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_width..(o + 1) * self.in_width];
            *z += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        let post = pre.iter().map(|&z| activate(self.activation, z)).collect();
        (pre, post)
    }
}

fn activate(activation: Option<Activation>, z: f64) -> f64 {
    match activation {
        None => z,
        Some(Activation::Tanh) => libm::tanh(z),
        Some(Activation::Relu) => z.max(0.0),
    }
}

fn activation_slope(activation: Option<Activation>, pre: f64, post: f64) -> f64 {
    match activation {
        None => 1.0,
        Some(Activation::Tanh) => 1.0 - post * post,
        Some(Activation::Relu) => {
            if pre > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStage {
    pub shape: CircuitShape,
    pub readout: ReadoutMode,
    pub weights: QuantumWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkStage {
    Dense(DenseLayer),
    Quantum(QuantumStage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridNetwork {
    pub plan: NetworkPlan,
    pub stages: Vec<NetworkStage>,
}

/// Intermediates recorded by [`HybridNetwork::forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    /// Input of every stage.
    inputs: Vec<Vec<f64>>,
    /// Dense pre-activations (empty for quantum stages).
    pre: Vec<Vec<f64>>,
    /// Output of every stage.
    outputs: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradients in parameter-block order, plus the gradient wrt the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros(net: &HybridNetwork) -> Self {
        Self {
            blocks: net.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect(),
            input: vec![0.0; net.plan.input_dim],
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.blocks.iter().flatten().map(|g| g * g).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.blocks.iter_mut().flatten().for_each(|g| *g *= factor);
        self.input.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|g| g.is_finite())
    }
}

/// Name and shape of one parameter block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

/// Builds a network for `plan`. Dense weights are orthogonal with gain
/// [`HIDDEN_GAIN`] (`head_gain` on the last stage), biases zero; circuit
/// angles are uniform in `[0, 2pi)`.
pub fn build_network<R: Rng + ?Sized>(plan: &NetworkPlan, head_gain: f64, rng: &mut R) -> HybridNetwork {
    let last = plan.stages.len() - 1;
    let stages = plan
        .stages
        .iter()
        .enumerate()
        .map(|(i, stage)| match (CircuitShape::from_gene(&stage.gene), stage.readout) {
            (Some(shape), Some(readout)) => {
                let angles = (0..shape.weight_count())
                    .map(|_| rng.random::<f64>() * TAU)
                    .collect();
                NetworkStage::Quantum(QuantumStage {
                    shape,
                    readout,
                    weights: QuantumWeights { shape, angles },
                })
            }
            _ => {
                let activation = match stage.gene {
                    crate::dna::LayerGene::Classical { activation, .. } => activation,
                    crate::dna::LayerGene::Quantum { .. } => None,
                };
                let gain = if i == last { head_gain } else { HIDDEN_GAIN };
                NetworkStage::Dense(DenseLayer {
                    in_width: stage.in_width,
                    out_width: stage.out_width,
                    weights: orthogonal(stage.out_width, stage.in_width, gain, rng),
                    bias: vec![0.0; stage.out_width],
                    activation,
                })
            }
        })
        .collect();
    HybridNetwork {
        plan: plan.clone(),
        stages,
    }
}

impl HybridNetwork {
    pub fn input_dim(&self) -> usize {
        self.plan.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.plan.head_width
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for stage in &self.stages {
            match stage {
                NetworkStage::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.bias.as_slice());
                }
                NetworkStage::Quantum(q) => out.push(q.weights.angles.as_slice()),
            }
        }
        out
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for stage in &mut self.stages {
            match stage {
                NetworkStage::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                NetworkStage::Quantum(q) => out.push(q.weights.angles.as_mut_slice()),
            }
        }
        out
    }

    pub fn block_info(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        for (i, stage) in self.stages.iter().enumerate() {
            match stage {
                NetworkStage::Dense(d) => {
                    out.push(BlockInfo {
                        name: format!("stage{i}.weight"),
                        shape: vec![d.out_width, d.in_width],
                    });
                    out.push(BlockInfo {
                        name: format!("stage{i}.bias"),
                        shape: vec![d.out_width],
                    });
                }
                NetworkStage::Quantum(q) => {
                    let mut shape = vec![q.shape.reps, q.shape.qubits];
                    if q.shape.entangler.angles_per_qubit() > 1 {
                        shape.push(q.shape.entangler.angles_per_qubit());
                    }
                    out.push(BlockInfo {
                        name: format!("stage{i}.angles"),
                        shape,
                    });
                }
            }
        }
        out
    }

    /// Replaces every parameter block, checking shapes first.
    pub fn load_blocks(&mut self, blocks: &[Vec<f64>]) -> Result<(), NetError> {
        let mut targets = self.param_blocks_mut();
        if targets.len() != blocks.len() {
            return Err(NetError::BlockCount {
                expected: targets.len(),
                got: blocks.len(),
            });
        }
        for (block, (dst, src)) in targets.iter().zip(blocks).enumerate() {
            if dst.len() != src.len() {
                return Err(NetError::BlockShape {
                    block,
                    expected: dst.len(),
                    got: src.len(),
                });
            }
        }
        for (dst, src) in targets.iter_mut().zip(blocks) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.param_blocks().iter().map(|b| b.len()).sum()
    }

    pub fn dense_parameter_count(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match s {
                NetworkStage::Dense(d) => d.weights.len() + d.bias.len(),
                NetworkStage::Quantum(_) => 0,
            })
            .sum()
    }

    pub fn quantum_parameter_count(&self) -> usize {
        self.parameter_count() - self.dense_parameter_count()
    }

    /// Analytic forward pass recording everything [`Self::backward`] needs.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape), NetError> {
        self.run(x, None, None)
    }

    /// Forward pass without a tape, sampling bitstring readouts with `shots`
    /// when given.
    pub fn predict(&self, x: &[f64], shots: Option<(u32, &mut dyn RngCore)>) -> Result<Vec<f64>, NetError> {
        let (out, _) = match shots {
            Some((count, rng)) => self.run(x, Some(count), Some(rng))?,
            None => self.run(x, None, None)?,
        };
        Ok(out)
    }

    fn run(
        &self,
        x: &[f64],
        shots: Option<u32>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Vec<f64>, Tape), NetError> {
        if x.len() != self.plan.input_dim {
            return Err(NetError::InputLength {
                expected: self.plan.input_dim,
                got: x.len(),
            });
        }
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.stages.len()),
            pre: Vec::with_capacity(self.stages.len()),
            outputs: Vec::with_capacity(self.stages.len()),
        };
        let mut current = x.to_vec();
        for (index, stage) in self.stages.iter().enumerate() {
            let (pre, out) = match stage {
                NetworkStage::Dense(d) => d.forward(&current),
                NetworkStage::Quantum(q) => {
                    let mode = match shots {
                        Some(count) => q.readout.with_shots(Shots::Sampled(count)),
                        None => q.readout,
                    };
                    let out = quantum_forward(q.shape, mode, &current, &q.weights, rng.as_mut().map(|r| &mut **r as &mut dyn RngCore))?;
                    (Vec::new(), out)
                }
            };
            if out.iter().any(|v| !v.is_finite()) {
                return Err(NetError::NonFiniteActivation { stage: index });
            }
            tape.inputs.push(core::mem::replace(&mut current, out.clone()));
            tape.pre.push(pre);
            tape.outputs.push(out);
        }
        Ok((current, tape))
    }

    /// Reverse-mode gradients for `grad_output` (dL/d output).
    pub fn backward(&self, tape: &Tape, grad_output: &[f64]) -> Result<Gradients, NetError> {
        let mut grads = Gradients::zeros(self);
        self.backward_into(tape, grad_output, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Self::backward`] but accumulates into `grads`; the input
    /// gradient is overwritten.
    pub fn backward_into(&self, tape: &Tape, grad_output: &[f64], grads: &mut Gradients) -> Result<(), NetError> {
        let mut upstream = grad_output.to_vec();
        let mut block = grads.blocks.len();
        for (index, stage) in self.stages.iter().enumerate().rev() {
            let input = &tape.inputs[index];
            match stage {
                NetworkStage::Dense(d) => {
                    block -= 2;
                    let pre = &tape.pre[index];
                    let post = &tape.outputs[index];
                    let dz: Vec<f64> = (0..d.out_width)
                        .map(|o| upstream[o] * activation_slope(d.activation, pre[o], post[o]))
                        .collect();
                    let mut dx = vec![0.0; d.in_width];
                    {
                        let (w_blocks, b_blocks) = grads.blocks.split_at_mut(block + 1);
                        let dw = &mut w_blocks[block];
                        let db = &mut b_blocks[0];
                        for (o, &g) in dz.iter().enumerate() {
                            db[o] += g;
                            if g == 0.0 {
                                continue;
                            }
                            let row = o * d.in_width;
                            for i in 0..d.in_width {
                                dw[row + i] += g * input[i];
                                dx[i] += g * d.weights[row + i];
                            }
                        }
                    }
                    upstream = dx;
                }
                NetworkStage::Quantum(q) => {
                    block -= 1;
                    let g = quantum_backward(q.shape, q.readout, input, &q.weights, &upstream)?;
                    for (acc, v) in grads.blocks[block].iter_mut().zip(&g.dw) {
                        *acc += v;
                    }
                    upstream = g.dx;
                }
            }
        }
        grads.input = upstream;
        Ok(())
    }
}
