use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{QsimError, StateVector};
use crate::dna::{Entangler, LayerGene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitShape {
    pub qubits: usize,
    pub entangler: Entangler,
    pub reps: usize,
}

impl CircuitShape {
    pub fn from_gene(gene: &LayerGene) -> Option<Self> {
        match *gene {
            LayerGene::Quantum {
                qubits,
                entangler,
                reps,
            } => Some(Self {
                qubits,
                entangler,
                reps,
            }),
            LayerGene::Classical { .. } => None,
        }
    }

    /// Trainable angles: `reps * n` (basic) or `reps * n * 3` (strong).
    pub fn weight_count(&self) -> usize {
        self.reps * self.qubits * self.entangler.angles_per_qubit()
    }
}

/// Ansatz angles in row-major `[rep][qubit]` (basic) or
/// `[rep][qubit][phi, theta, omega]` (strong) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumWeights {
    pub shape: CircuitShape,
    pub angles: Vec<f64>,
}

impl QuantumWeights {
    pub fn new(shape: CircuitShape, angles: Vec<f64>) -> Result<Self, QsimError> {
        if angles.len() != shape.weight_count() {
            return Err(QsimError::ShapeMismatch {
                expected: shape.weight_count(),
                got: angles.len(),
            });
        }
        Ok(Self { shape, angles })
    }

    pub fn zeros(shape: CircuitShape) -> Self {
        Self {
            shape,
            angles: alloc::vec![0.0; shape.weight_count()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOp {
    /// Rotation by `angles[param]`.
    Rotation {
        axis: RotationAxis,
        qubit: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

/// CNOT offset used by repetition `rep` of the strong ansatz.
pub fn strong_ring_range(rep: usize, qubits: usize) -> usize {
    if qubits > 2 {
        rep % (qubits - 1) + 1
    } else {
        1
    }
}

fn push_ring(ops: &mut Vec<GateOp>, qubits: usize, range: usize) {
    match qubits {
        0 | 1 => {}
        2 => ops.push(GateOp::Cnot {
            control: 0,
            target: 1,
        }),
        n => ops.extend((0..n).map(|i| GateOp::Cnot {
            control: i,
            target: (i + range) % n,
        })),
    }
}

/// Gate list of an encoding + ansatz circuit over the parameter vector
/// `[inputs..., weights...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub shape: CircuitShape,
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(shape: CircuitShape) -> Self {
        let n = shape.qubits;
        let mut ops = Vec::new();
        ops.extend((0..n).map(|i| GateOp::Rotation {
            axis: RotationAxis::X,
            qubit: i,
            param: i,
        }));
        ops.extend(ansatz_ops(shape, n));
        Self { shape, ops }
    }

    pub fn param_count(&self) -> usize {
        self.shape.qubits + self.shape.weight_count()
    }

    /// Runs `ops[start..]` on `state`.
    pub fn run_from(&self, state: &mut StateVector, start: usize, angles: &[f64]) {
        for op in &self.ops[start..] {
            apply_op(state, *op, angles);
        }
    }

    pub fn run(&self, angles: &[f64]) -> StateVector {
        let mut state = StateVector::zero(self.shape.qubits);
        self.run_from(&mut state, 0, angles);
        state
    }
}

/// Ansatz gates with weight parameters numbered from `offset`.
fn ansatz_ops(shape: CircuitShape, offset: usize) -> Vec<GateOp> {
    let n = shape.qubits;
    let mut ops = Vec::new();
    for rep in 0..shape.reps {
        match shape.entangler {
            Entangler::Basic => {
                ops.extend((0..n).map(|i| GateOp::Rotation {
                    axis: RotationAxis::X,
                    qubit: i,
                    param: offset + rep * n + i,
                }));
                push_ring(&mut ops, n, 1);
            }
            Entangler::Strong => {
                for i in 0..n {
                    let base = offset + (rep * n + i) * 3;
                    // Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)
                    ops.push(GateOp::Rotation {
                        axis: RotationAxis::Z,
                        qubit: i,
                        param: base,
                    });
                    ops.push(GateOp::Rotation {
                        axis: RotationAxis::Y,
                        qubit: i,
                        param: base + 1,
                    });
                    ops.push(GateOp::Rotation {
                        axis: RotationAxis::Z,
                        qubit: i,
                        param: base + 2,
                    });
                }
                push_ring(&mut ops, n, strong_ring_range(rep, n));
            }
        }
    }
    ops
}

#[inline]
pub(crate) fn apply_op(state: &mut StateVector, op: GateOp, angles: &[f64]) {
    match op {
        GateOp::Rotation { axis, qubit, param } => {
            let theta = angles[param];
            match axis {
                RotationAxis::X => state.apply_rx(qubit, theta),
                RotationAxis::Y => state.apply_ry(qubit, theta),
                RotationAxis::Z => state.apply_rz(qubit, theta),
            }
        }
        GateOp::Cnot { control, target } => state.apply_cnot(control, target),
    }
}

/// `RX(x_i)` on qubit `i` of `|0...0>`.
pub fn encode_inputs(qubits: usize, x: &[f64]) -> Result<StateVector, QsimError> {
    if x.len() != qubits {
        return Err(QsimError::LengthMismatch {
            expected: qubits,
            got: x.len(),
        });
    }
    let mut state = StateVector::zero(qubits);
    for (i, &angle) in x.iter().enumerate() {
        state.apply_rx(i, angle);
    }
    Ok(state)
}

fn apply_entangler(
    mut state: StateVector,
    w: &QuantumWeights,
    entangler: Entangler,
) -> Result<StateVector, QsimError> {
    let shape = w.shape;
    if shape.entangler != entangler || shape.qubits != state.qubits() {
        return Err(QsimError::ShapeMismatch {
            expected: CircuitShape {
                qubits: state.qubits(),
                ..shape
            }
            .weight_count(),
            got: w.angles.len(),
        });
    }
    if w.angles.len() != shape.weight_count() {
        return Err(QsimError::ShapeMismatch {
            expected: shape.weight_count(),
            got: w.angles.len(),
        });
    }
    for op in ansatz_ops(shape, 0) {
        apply_op(&mut state, op, &w.angles);
    }
    Ok(state)
}

/// Per repetition: `RX(w[r][i])` on every qubit, then a CNOT ring.
pub fn apply_basic_entangler(state: StateVector, w: &QuantumWeights) -> Result<StateVector, QsimError> {
    apply_entangler(state, w, Entangler::Basic)
}

/// Per repetition: `Rot(phi, theta, omega)` on every qubit, then a CNOT
/// ring with offset [`strong_ring_range`].
pub fn apply_strong_entangler(state: StateVector, w: &QuantumWeights) -> Result<StateVector, QsimError> {
    apply_entangler(state, w, Entangler::Strong)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    fn shape(qubits: usize, entangler: Entangler, reps: usize) -> CircuitShape {
        CircuitShape {
            qubits,
            entangler,
            reps,
        }
    }

    #[test]
    fn zero_inputs_encode_ground_state() {
        let s = encode_inputs(2, &[0.0, 0.0]).unwrap();
        assert_eq!(s.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            encode_inputs(3, &[0.0]),
            Err(QsimError::LengthMismatch {
                expected: 3,
                got: 1
            })
        );
    }

    #[test]
    fn basic_zero_weights_keep_ground_state() {
        let w = QuantumWeights::zeros(shape(3, Entangler::Basic, 2));
        let s = apply_basic_entangler(StateVector::zero(3), &w).unwrap();
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basic_pi_on_first_qubit_lands_on_11() {
        let w = QuantumWeights::new(shape(2, Entangler::Basic, 1), vec![PI, 0.0]).unwrap();
        let s = apply_basic_entangler(StateVector::zero(2), &w).unwrap();
        assert!((s.probabilities()[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strong_theta_pi_lands_on_11() {
        let mut angles = vec![0.0; 6];
        angles[1] = PI;
        let w = QuantumWeights::new(shape(2, Entangler::Strong, 1), angles).unwrap();
        let s = apply_strong_entangler(StateVector::zero(2), &w).unwrap();
        assert!((s.probabilities()[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strong_zero_weights_global_phase_only() {
        let w = QuantumWeights::zeros(shape(4, Entangler::Strong, 3));
        let s = apply_strong_entangler(StateVector::zero(4), &w).unwrap();
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ring_ranges() {
        assert_eq!(strong_ring_range(0, 2), 1);
        assert_eq!(strong_ring_range(1, 2), 1);
        assert_eq!(
            (0..5).map(|r| strong_ring_range(r, 4)).collect::<Vec<_>>(),
            vec![1, 2, 3, 1, 2]
        );
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let w = QuantumWeights::zeros(shape(2, Entangler::Strong, 1));
        assert!(matches!(
            apply_basic_entangler(StateVector::zero(2), &w),
            Err(QsimError::ShapeMismatch { .. })
        ));
        assert!(QuantumWeights::new(shape(2, Entangler::Basic, 2), vec![0.0; 3]).is_err());
    }

    #[test]
    fn weight_counts() {
        assert_eq!(shape(2, Entangler::Strong, 3).weight_count(), 18);
        assert_eq!(shape(4, Entangler::Basic, 2).weight_count(), 8);
    }
}
