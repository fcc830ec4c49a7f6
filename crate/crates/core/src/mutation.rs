//! The ten mutation operators and the neighbor repair pass that keeps
//! mutated genomes resolvable.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dna::{
    validate, Activation, Entangler, Genome, LayerGene, MAX_LAYERS, MAX_NEURONS, MAX_QUBITS,
    MIN_NEURONS, MIN_QUBITS,
};

/// Largest neuron delta drawn by the alter-layer operators.
pub const MAX_NEURON_DELTA: usize = 8;
/// Largest qubit delta drawn by the alter-layer operators.
pub const MAX_QUBIT_DELTA: usize = 2;
/// Repetition counts reachable by mutation.
pub const MAX_REPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutationKind {
    AddClassical,
    RemoveClassical,
    AddQuantum,
    RemoveQuantum,
    AlterLayerAdd,
    AlterLayerRemove,
    ChangeReps,
    ChangeEntanglement,
    ChangeActivation,
    Identity,
}

impl MutationKind {
    pub const ALL: [MutationKind; 10] = [
        MutationKind::AddClassical,
        MutationKind::RemoveClassical,
        MutationKind::AddQuantum,
        MutationKind::RemoveQuantum,
        MutationKind::AlterLayerAdd,
        MutationKind::AlterLayerRemove,
        MutationKind::ChangeReps,
        MutationKind::ChangeEntanglement,
        MutationKind::ChangeActivation,
        MutationKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::AddClassical => "add_classical",
            MutationKind::RemoveClassical => "remove_classical",
            MutationKind::AddQuantum => "add_quantum",
            MutationKind::RemoveQuantum => "remove_quantum",
            MutationKind::AlterLayerAdd => "alter_layer_add",
            MutationKind::AlterLayerRemove => "alter_layer_remove",
            MutationKind::ChangeReps => "change_reps",
            MutationKind::ChangeEntanglement => "change_entanglement",
            MutationKind::ChangeActivation => "change_activation",
            MutationKind::Identity => "identity",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mutation kind")]
pub struct UnknownMutationKind;

impl FromStr for MutationKind {
    type Err = UnknownMutationKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MutationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(UnknownMutationKind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("mutation has no legal target in this genome")]
    Inapplicable,
    #[error("genome cannot satisfy the layer constraints")]
    IrreparableGenome,
}

/// A concrete edit with every random choice already made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    Insert { position: usize, gene: LayerGene },
    Remove { position: usize },
    Resize { position: usize, delta: isize },
    SetReps { position: usize, reps: usize },
    FlipEntangler { position: usize },
    FlipActivation { position: usize },
    Nothing,
}

/// Draws a fresh classical gene from the search space.
pub fn random_classical_gene<R: Rng + ?Sized>(rng: &mut R) -> LayerGene {
    LayerGene::Classical {
        width: rng.random_range(MIN_NEURONS..=MAX_NEURONS),
        activation: Some(random_activation(rng)),
    }
}

/// Draws a fresh quantum gene from the search space (before repair).
pub fn random_quantum_gene<R: Rng + ?Sized>(rng: &mut R) -> LayerGene {
    let qubits = rng.random_range(MIN_QUBITS..=MAX_QUBITS);
    let reps = rng.random_range(1..=MAX_REPS);
    let entangler = if rng.random_bool(0.5) {
        Entangler::Basic
    } else {
        Entangler::Strong
    };
    LayerGene::Quantum {
        qubits,
        entangler,
        reps,
    }
}

fn random_activation<R: Rng + ?Sized>(rng: &mut R) -> Activation {
    if rng.random_bool(0.5) {
        Activation::Tanh
    } else {
        Activation::Relu
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, candidates: &[usize]) -> Result<usize, MutationError> {
    if candidates.is_empty() {
        Err(MutationError::Inapplicable)
    } else {
        Ok(candidates[rng.random_range(0..candidates.len())])
    }
}

fn positions(g: &Genome, pred: impl Fn(usize, &LayerGene) -> bool) -> Vec<usize> {
    g.genes
        .iter()
        .enumerate()
        .filter(|(i, gene)| pred(*i, gene))
        .map(|(i, _)| i)
        .collect()
}

/// Chooses the concrete edit for `kind`, consuming randomness only from `rng`.
pub fn draw_edit<R: Rng + ?Sized>(
    g: &Genome,
    kind: MutationKind,
    rng: &mut R,
) -> Result<Edit, MutationError> {
    let len = g.len();
    let last = len.saturating_sub(1);
    let edit = match kind {
        MutationKind::AddClassical | MutationKind::AddQuantum => {
            if len >= MAX_LAYERS {
                return Err(MutationError::Inapplicable);
            }
            let position = rng.random_range(0..=len);
            let gene = if kind == MutationKind::AddClassical {
                random_classical_gene(rng)
            } else {
                random_quantum_gene(rng)
            };
            Edit::Insert { position, gene }
        }
        MutationKind::RemoveClassical => {
            if len < 2 {
                return Err(MutationError::Inapplicable);
            }
            Edit::Remove {
                position: pick(rng, &positions(g, |_, gene| gene.is_classical()))?,
            }
        }
        MutationKind::RemoveQuantum => {
            if len < 2 {
                return Err(MutationError::Inapplicable);
            }
            Edit::Remove {
                position: pick(rng, &positions(g, |_, gene| gene.is_quantum()))?,
            }
        }
        MutationKind::AlterLayerAdd => {
            let position = pick(
                rng,
                &positions(g, |i, gene| match *gene {
                    LayerGene::Classical { width, .. } => i != last && width < MAX_NEURONS,
                    LayerGene::Quantum { qubits, .. } => qubits < MAX_QUBITS,
                }),
            )?;
            let delta = match g.genes[position] {
                LayerGene::Classical { .. } => rng.random_range(1..=MAX_NEURON_DELTA),
                LayerGene::Quantum { .. } => rng.random_range(1..=MAX_QUBIT_DELTA),
            };
            Edit::Resize {
                position,
                delta: delta as isize,
            }
        }
        MutationKind::AlterLayerRemove => {
            let position = pick(
                rng,
                &positions(g, |i, gene| match *gene {
                    LayerGene::Classical { width, .. } => i != last && width > MIN_NEURONS,
                    LayerGene::Quantum { qubits, .. } => qubits > MIN_QUBITS,
                }),
            )?;
            let delta = match g.genes[position] {
                LayerGene::Classical { .. } => rng.random_range(1..=MAX_NEURON_DELTA),
                LayerGene::Quantum { .. } => rng.random_range(1..=MAX_QUBIT_DELTA),
            };
            Edit::Resize {
                position,
                delta: -(delta as isize),
            }
        }
        MutationKind::ChangeReps => {
            let position = pick(rng, &positions(g, |_, gene| gene.is_quantum()))?;
            let LayerGene::Quantum { reps: current, .. } = g.genes[position] else {
                unreachable!()
            };
            let choices: Vec<usize> = (1..=MAX_REPS).filter(|&r| r != current).collect();
            Edit::SetReps {
                position,
                reps: choices[rng.random_range(0..choices.len())],
            }
        }
        MutationKind::ChangeEntanglement => Edit::FlipEntangler {
            position: pick(rng, &positions(g, |_, gene| gene.is_quantum()))?,
        },
        MutationKind::ChangeActivation => Edit::FlipActivation {
            position: pick(
                rng,
                &positions(g, |i, gene| {
                    i != last
                        && matches!(
                            gene,
                            LayerGene::Classical {
                                activation: Some(_),
                                ..
                            }
                        )
                }),
            )?,
        },
        MutationKind::Identity => Edit::Nothing,
    };
    Ok(edit)
}

/// Applies an edit verbatim; the result generally needs [`repair`].
pub fn apply_edit(g: &Genome, edit: Edit) -> Result<Genome, MutationError> {
    let mut genes = g.genes.clone();
    match edit {
        Edit::Insert { position, gene } => {
            if genes.len() >= MAX_LAYERS || position > genes.len() {
                return Err(MutationError::Inapplicable);
            }
            let appended = position == genes.len();
            genes.insert(position, gene);
            // the old tail becomes an inner layer with the new gene's width
            if appended && position > 0 {
                let (inherited_width, inherited) = match gene {
                    LayerGene::Classical { width, activation } => (Some(width), activation),
                    LayerGene::Quantum { .. } => (None, None),
                };
                if let LayerGene::Classical { width, activation } = &mut genes[position - 1] {
                    if let Some(w) = inherited_width {
                        *width = w;
                    }
                    if activation.is_none() {
                        *activation = inherited.or(Some(Activation::Tanh));
                    }
                }
                if let LayerGene::Classical { activation, .. } = &mut genes[position] {
                    *activation = None;
                }
            }
        }
        Edit::Remove { position } => {
            if position >= genes.len() || genes.len() < 2 {
                return Err(MutationError::Inapplicable);
            }
            genes.remove(position);
        }
        Edit::Resize { position, delta } => match genes.get_mut(position) {
            Some(LayerGene::Classical { width, .. }) => {
                *width = (*width as isize + delta).clamp(MIN_NEURONS as isize, MAX_NEURONS as isize)
                    as usize;
            }
            Some(LayerGene::Quantum { qubits, .. }) => {
                *qubits = (*qubits as isize + delta).clamp(MIN_QUBITS as isize, MAX_QUBITS as isize)
                    as usize;
            }
            None => return Err(MutationError::Inapplicable),
        },
        Edit::SetReps { position, reps } => match genes.get_mut(position) {
            Some(LayerGene::Quantum { reps: r, .. }) => *r = reps.max(1),
            _ => return Err(MutationError::Inapplicable),
        },
        Edit::FlipEntangler { position } => match genes.get_mut(position) {
            Some(LayerGene::Quantum { entangler, .. }) => *entangler = entangler.flipped(),
            _ => return Err(MutationError::Inapplicable),
        },
        Edit::FlipActivation { position } => match genes.get_mut(position) {
            Some(LayerGene::Classical {
                activation: Some(act),
                ..
            }) => *act = act.flipped(),
            _ => return Err(MutationError::Inapplicable),
        },
        Edit::Nothing => {}
    }
    Ok(Genome { genes })
}

/// Deterministically adjusts neighbors so the genome satisfies every layer
/// constraint and resolves for `input_dim` inputs.
///
/// * values are clamped to their bounds and a trailing classical gene becomes `C 1`
/// * a quantum gene in first position takes `input_dim` qubits
/// * a classical gene feeding a quantum gene takes that gene's qubit count
/// * a quantum gene fed by a quantum gene has at most its predecessor's qubits
/// * inner classical genes carry an activation (tanh when missing), the last one none
pub fn repair(g: &Genome, input_dim: usize) -> Result<Genome, MutationError> {
    let mut genes = g.genes.clone();
    if genes.is_empty() || genes.len() > MAX_LAYERS {
        return Err(MutationError::IrreparableGenome);
    }
    let last = genes.len() - 1;

    for (i, gene) in genes.iter_mut().enumerate() {
        match gene {
            LayerGene::Classical { width, activation } => {
                if i == last {
                    // the head width is set per network at plan resolution
                    *width = 1;
                    *activation = None;
                } else {
                    *width = (*width).clamp(MIN_NEURONS, MAX_NEURONS);
                    if activation.is_none() {
                        *activation = Some(Activation::Tanh);
                    }
                }
            }
            LayerGene::Quantum { qubits, reps, .. } => {
                *qubits = (*qubits).clamp(MIN_QUBITS, MAX_QUBITS);
                *reps = (*reps).max(1);
            }
        }
    }

    for i in 0..genes.len() {
        let LayerGene::Quantum { qubits, .. } = genes[i] else {
            continue;
        };
        let required = if i == 0 {
            if !(MIN_QUBITS..=MAX_QUBITS).contains(&input_dim) {
                return Err(MutationError::IrreparableGenome);
            }
            input_dim
        } else {
            match &mut genes[i - 1] {
                LayerGene::Classical { width, .. } => {
                    *width = qubits;
                    qubits
                }
                LayerGene::Quantum { qubits: prev, .. } => qubits.min(*prev),
            }
        };
        if let LayerGene::Quantum { qubits, .. } = &mut genes[i] {
            *qubits = required;
        }
    }

    let out = Genome { genes };
    if !validate(&out).is_empty() {
        return Err(MutationError::IrreparableGenome);
    }
    Ok(out)
}

/// Applies one mutation kind followed by [`repair`]. `Identity` returns the
/// genome untouched.
pub fn apply_kind<R: Rng + ?Sized>(
    g: &Genome,
    kind: MutationKind,
    input_dim: usize,
    rng: &mut R,
) -> Result<Genome, MutationError> {
    let edit = draw_edit(g, kind, rng)?;
    if edit == Edit::Nothing {
        return Ok(g.clone());
    }
    repair(&apply_edit(g, edit)?, input_dim)
}

/// Draws mutation kinds uniformly until one applies; `Identity` always does.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, input_dim: usize, rng: &mut R) -> (Genome, MutationKind) {
    loop {
        let kind = MutationKind::ALL[rng.random_range(0..MutationKind::ALL.len())];
        if let Ok(child) = apply_kind(g, kind, input_dim, rng) {
            return (child, kind);
        }
    }
}
