use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use super::ansatz::apply_op;
use super::{Circuit, CircuitShape, GateOp, QsimError, QuantumWeights, StateVector};
use crate::dna::{ReadoutMode, Shots};

/// Shift applied to each rotation angle.
pub const PARAMETER_SHIFT: f64 = FRAC_PI_2;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGradients {
    /// One entry per encoded input.
    pub dx: Vec<f64>,
    /// Same layout as [`QuantumWeights::angles`].
    pub dw: Vec<f64>,
}

/// Diagonal observable `D` with `sum_j upstream_j * f_j = sum_i D_i |a_i|^2`.
fn contracted_observable(qubits: usize, mode: ReadoutMode, upstream: &[f64]) -> Result<Vec<f64>, QsimError> {
    let dim = 1usize << qubits;
    match mode {
        ReadoutMode::Bitstring {
            shots: Shots::Sampled(_),
        } => Err(QsimError::ShotsNotDifferentiable),
        ReadoutMode::Bitstring {
            shots: Shots::Analytic,
        } => {
            if upstream.len() != dim {
                return Err(QsimError::LengthMismatch {
                    expected: dim,
                    got: upstream.len(),
                });
            }
            Ok(upstream.to_vec())
        }
        ReadoutMode::Expectation { measured } => {
            if measured == 0 || measured > qubits {
                return Err(QsimError::KOutOfRange { k: measured, n: qubits });
            }
            if upstream.len() != measured {
                return Err(QsimError::LengthMismatch {
                    expected: measured,
                    got: upstream.len(),
                });
            }
            Ok((0..dim)
                .map(|i| {
                    upstream
                        .iter()
                        .enumerate()
                        .map(|(q, u)| if i >> (qubits - 1 - q) & 1 == 0 { *u } else { -*u })
                        .sum()
                })
                .collect())
        }
    }
}

fn observe(state: &StateVector, diag: &[f64]) -> f64 {
    state
        .amplitudes()
        .iter()
        .zip(diag)
        .map(|(a, d)| d * a.norm_sqr())
        .sum()
}

/// Gradients of `sum_j upstream_j * output_j` with respect to every encoding
/// angle and ansatz weight, each from two circuit evaluations at `+-pi/2`.
pub fn quantum_backward(
    shape: CircuitShape,
    mode: ReadoutMode,
    x: &[f64],
    w: &QuantumWeights,
    upstream: &[f64],
) -> Result<QuantumGradients, QsimError> {
    let diag = contracted_observable(shape.qubits, mode, upstream)?;
    if x.len() != shape.qubits {
        return Err(QsimError::LengthMismatch {
            expected: shape.qubits,
            got: x.len(),
        });
    }
    if w.shape != shape || w.angles.len() != shape.weight_count() {
        return Err(QsimError::ShapeMismatch {
            expected: shape.weight_count(),
            got: w.angles.len(),
        });
    }

    let circuit = Circuit::new(shape);
    let mut angles = Vec::with_capacity(circuit.param_count());
    angles.extend_from_slice(x);
    angles.extend_from_slice(&w.angles);
    let mut grads = vec![0.0; angles.len()];

    // prefix holds the state before ops[k]
    let mut prefix = StateVector::zero(shape.qubits);
    let mut shifted = angles.clone();
    for (k, op) in circuit.ops.iter().enumerate() {
        if let GateOp::Rotation { param, .. } = *op {
            let mut evaluate = |delta: f64| {
                shifted[param] = angles[param] + delta;
                let mut state = prefix.clone();
                apply_op(&mut state, *op, &shifted);
                circuit.run_from(&mut state, k + 1, &angles);
                shifted[param] = angles[param];
                observe(&state, &diag)
            };
            let plus = evaluate(PARAMETER_SHIFT);
            let minus = evaluate(-PARAMETER_SHIFT);
            grads[param] += 0.5 * (plus - minus);
        }
        apply_op(&mut prefix, *op, &angles);
    }

    let dw = grads.split_off(shape.qubits);
    Ok(QuantumGradients { dx: grads, dw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dna::Entangler;
    use core::f64::consts::PI;

    #[test]
    fn single_rx_expectation_derivative() {
        // one qubit, no ansatz: <Z> = cos(x)
        let shape = CircuitShape {
            qubits: 1,
            entangler: Entangler::Basic,
            reps: 0,
        };
        let w = QuantumWeights::zeros(shape);
        let mode = ReadoutMode::Expectation { measured: 1 };
        let at_zero = quantum_backward(shape, mode, &[0.0], &w, &[1.0]).unwrap();
        assert!(at_zero.dx[0].abs() < 1e-15);
        let at_half_pi = quantum_backward(shape, mode, &[PI / 2.0], &w, &[1.0]).unwrap();
        assert!((at_half_pi.dx[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_readout_rejected() {
        let shape = CircuitShape {
            qubits: 2,
            entangler: Entangler::Strong,
            reps: 1,
        };
        let w = QuantumWeights::zeros(shape);
        let mode = ReadoutMode::Bitstring {
            shots: Shots::Sampled(1024),
        };
        assert_eq!(
            quantum_backward(shape, mode, &[0.0, 0.0], &w, &[0.0; 4]),
            Err(QsimError::ShotsNotDifferentiable)
        );
    }

    #[test]
    fn gradient_shapes() {
        let shape = CircuitShape {
            qubits: 2,
            entangler: Entangler::Strong,
            reps: 3,
        };
        let w = QuantumWeights::zeros(shape);
        let mode = ReadoutMode::Bitstring {
            shots: Shots::Analytic,
        };
        let g = quantum_backward(shape, mode, &[0.1, 0.2], &w, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(g.dx.len(), 2);
        assert_eq!(g.dw.len(), 18);
    }
}
