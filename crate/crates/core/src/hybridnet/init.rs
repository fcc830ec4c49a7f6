use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng;

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(TAU * u2)
}

/// Row-major `rows x cols` matrix with orthonormal rows or columns
/// (whichever is the shorter side), scaled by `gain`.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let tall = rows.max(cols);
    let narrow = rows.min(cols);
    // columns of a tall x narrow gaussian matrix, orthonormalized in place
    let mut basis: Vec<Vec<f64>> = (0..narrow)
        .map(|_| (0..tall).map(|_| standard_normal(rng)).collect())
        .collect();
    for j in 0..narrow {
        loop {
            for k in 0..j {
                let dot: f64 = basis[j].iter().zip(&basis[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = basis.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                    *a -= dot * b;
                }
            }
            let norm = libm::sqrt(basis[j].iter().map(|a| a * a).sum::<f64>());
            if norm > 1e-10 {
                basis[j].iter_mut().for_each(|a| *a /= norm);
                break;
            }
            basis[j] = (0..tall).map(|_| standard_normal(rng)).collect();
        }
    }

    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain
                * if rows >= cols {
                    basis[c][r]
                } else {
                    basis[r][c]
                };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gram(m: &[f64], rows: usize, cols: usize, by_rows: bool) -> Vec<f64> {
        let n = if by_rows { rows } else { cols };
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = if by_rows {
                    (0..cols).map(|c| m[a * cols + c] * m[b * cols + c]).sum()
                } else {
                    (0..rows).map(|r| m[r * cols + a] * m[r * cols + b]).sum()
                };
            }
        }
        g
    }

    #[test]
    fn orthonormal_columns_and_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (rows, cols, by_rows) in [(8, 3, false), (3, 8, true), (5, 5, false)] {
            let m = orthogonal(rows, cols, 1.0, &mut rng);
            let g = gram(&m, rows, cols, by_rows);
            let n = if by_rows { rows } else { cols };
            for a in 0..n {
                for b in 0..n {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((g[a * n + b] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gain_scales() {
        let m = orthogonal(1, 4, 0.01, &mut ChaCha8Rng::seed_from_u64(1));
        let norm = libm::sqrt(m.iter().map(|a| a * a).sum::<f64>());
        assert!((norm - 0.01).abs() < 1e-14);
    }
}
