//! Statevector simulation of the variational layers: angle encoding, the
//! basic and strong entangling ansatzes, both readouts, shot sampling and
//! parameter-shift gradients.
//!
//! Basis index bit order: qubit 0 is the most significant bit.

mod ansatz;
mod gradient;
mod readout;
mod state;

pub use ansatz::{
    apply_basic_entangler, apply_strong_entangler, encode_inputs, strong_ring_range, Circuit,
    CircuitShape, GateOp, QuantumWeights, RotationAxis,
};
pub use gradient::{quantum_backward, QuantumGradients, PARAMETER_SHIFT};
pub use readout::{quantum_forward, read_bitstrings, read_expectation, ReadoutVector};
pub use state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum QsimError {
    #[error("expected {expected} inputs, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weights have {got} angles, circuit needs {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("cannot measure {k} of {n} qubits")]
    KOutOfRange { k: usize, n: usize },
    #[error("sampled readouts are not differentiable")]
    ShotsNotDifferentiable,
    #[error("sampled readout needs a random stream")]
    MissingRng,
    #[error("shot count must be positive")]
    ZeroShots,
}
