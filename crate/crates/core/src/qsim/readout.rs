use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Circuit, CircuitShape, QsimError, QuantumWeights, StateVector};
use crate::dna::{ReadoutMode, Shots};

/// Expectation values (`k` entries in `[-1, 1]`) or bitstring probabilities
/// (`2^n` entries summing to 1).
pub type ReadoutVector = Vec<f64>;

/// `<Z_i>` for qubits `0..k`.
pub fn read_expectation(s: &StateVector, k: usize) -> Result<ReadoutVector, QsimError> {
    if k == 0 || k > s.qubits() {
        return Err(QsimError::KOutOfRange { k, n: s.qubits() });
    }
    Ok((0..k).map(|q| s.expectation_z(q)).collect())
}

/// Exact probabilities, or empirical frequencies over `shots` samples drawn
/// from `rng`.
pub fn read_bitstrings(
    s: &StateVector,
    shots: Shots,
    rng: Option<&mut dyn RngCore>,
) -> Result<ReadoutVector, QsimError> {
    let probs = s.probabilities();
    match shots {
        Shots::Analytic => Ok(probs),
        Shots::Sampled(0) => Err(QsimError::ZeroShots),
        Shots::Sampled(count) => {
            let rng = rng.ok_or(QsimError::MissingRng)?;
            Ok(sample_frequencies(&probs, count, rng))
        }
    }
}

fn sample_frequencies(probs: &[f64], shots: u32, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u32; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .map(|c| f64::from(c) / f64::from(shots))
        .collect()
}

/// Encodes `x`, applies the ansatz with weights `w`, and reads out per `mode`.
pub fn quantum_forward(
    shape: CircuitShape,
    mode: ReadoutMode,
    x: &[f64],
    w: &QuantumWeights,
    rng: Option<&mut dyn RngCore>,
) -> Result<ReadoutVector, QsimError> {
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
    let state = circuit.run(&angles);
    readout(&state, mode, rng)
}

pub(crate) fn readout(
    state: &StateVector,
    mode: ReadoutMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<ReadoutVector, QsimError> {
    match mode {
        ReadoutMode::Expectation { measured } => read_expectation(state, measured),
        ReadoutMode::Bitstring { shots } => read_bitstrings(state, shots, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dna::Entangler;
    use crate::qsim::encode_inputs;
    use core::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn expectation_of_ground_and_flipped() {
        let mut s = StateVector::zero(2);
        assert_eq!(read_expectation(&s, 2).unwrap(), vec![1.0, 1.0]);
        s.apply_rx(0, PI);
        let e = read_expectation(&s, 2).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
        assert_eq!(
            read_expectation(&s, 3),
            Err(QsimError::KOutOfRange { k: 3, n: 2 })
        );
        assert!(read_expectation(&s, 0).is_err());
    }

    #[test]
    fn analytic_bitstrings() {
        let s = StateVector::zero(2);
        assert_eq!(
            read_bitstrings(&s, Shots::Analytic, None).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let s = encode_inputs(2, &[PI / 2.0, PI / 2.0]).unwrap();
        for p in read_bitstrings(&s, Shots::Analytic, None).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_bitstrings_are_frequencies() {
        let s = encode_inputs(3, &[0.3, 1.1, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = read_bitstrings(&s, Shots::Sampled(1024), Some(&mut rng)).unwrap();
        assert_eq!(f.len(), 8);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for v in &f {
            assert_eq!((v * 1024.0).fract(), 0.0);
        }
        assert_eq!(
            read_bitstrings(&s, Shots::Sampled(16), None),
            Err(QsimError::MissingRng)
        );
        assert_eq!(
            read_bitstrings(&s, Shots::Sampled(0), Some(&mut rng)),
            Err(QsimError::ZeroShots)
        );
    }

    #[test]
    fn forward_with_zero_parameters() {
        let shape = CircuitShape {
            qubits: 3,
            entangler: Entangler::Strong,
            reps: 2,
        };
        let w = QuantumWeights::zeros(shape);
        let e = quantum_forward(
            shape,
            ReadoutMode::Expectation { measured: 3 },
            &[0.0; 3],
            &w,
            None,
        )
        .unwrap();
        assert_eq!(e, vec![1.0, 1.0, 1.0]);
        let b = quantum_forward(
            shape,
            ReadoutMode::Bitstring {
                shots: Shots::Analytic,
            },
            &[0.0; 3],
            &w,
            None,
        )
        .unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!(b[1..].iter().all(|p| p.abs() < 1e-15));
    }
}
