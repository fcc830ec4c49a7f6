use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amplitudes }
    }

    /// Panics unless `amplitudes.len()` is a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        assert!(amplitudes.len().is_power_of_two(), "amplitude count must be 2^n");
        let qubits = amplitudes.len().trailing_zeros() as usize;
        Self { qubits, amplitudes }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    #[inline]
    fn mask(&self, qubit: usize) -> usize {
        debug_assert!(qubit < self.qubits);
        1 << (self.qubits - 1 - qubit)
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn apply_rx(&mut self, qubit: usize, theta: f64) {
        let (s, c) = libm::sincos(theta / 2.0);
        let mask = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            // -i s a
            self.amplitudes[i] = Complex64::new(c * a0.re + s * a1.im, c * a0.im - s * a1.re);
            self.amplitudes[j] = Complex64::new(c * a1.re + s * a0.im, c * a1.im - s * a0.re);
        }
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = libm::sincos(theta / 2.0);
        let mask = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = a0 * c - a1 * s;
            self.amplitudes[j] = a0 * s + a1 * c;
        }
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let (s, c) = libm::sincos(theta / 2.0);
        let lower = Complex64::new(c, -s);
        let upper = Complex64::new(c, s);
        let mask = self.mask(qubit);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & mask == 0 { lower } else { upper };
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        debug_assert_ne!(control, target);
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    /// `|amplitude|^2` per basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<Z>` on one qubit.
    pub fn expectation_z(&self, qubit: usize) -> f64 {
        let mask = self.mask(qubit);
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }
}
