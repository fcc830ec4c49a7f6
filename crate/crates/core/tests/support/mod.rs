//! Brute-force reference implementations shared by the integration tests.
//! None of these call into the library's simulator, dynamics or GAE code.

#![allow(dead_code)]

use std::f64::consts::PI;

use qnas_core::dna::Entangler;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub const ZERO: C = C { re: 0.0, im: 0.0 };
    pub const ONE: C = C { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        C { re, im }
    }

    pub fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }

    pub fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

pub type Matrix = Vec<Vec<C>>;

pub fn rx(t: f64) -> [[C; 2]; 2] {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
}

pub fn ry(t: f64) -> [[C; 2]; 2] {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
}

pub fn rz(t: f64) -> [[C; 2]; 2] {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[C::new(c, -s), C::ZERO], [C::ZERO, C::new(c, s)]]
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![C::ZERO; n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j].mul(b[k][l]);
                }
            }
        }
    }
    out
}

fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { C::ONE } else { C::ZERO }).collect())
        .collect()
}

/// `I ⊗ .. ⊗ g ⊗ .. ⊗ I` with qubit 0 as the leftmost (most significant) factor.
pub fn single_qubit_unitary(n: usize, qubit: usize, g: [[C; 2]; 2]) -> Matrix {
    let gate: Matrix = g.iter().map(|row| row.to_vec()).collect();
    let mut out = vec![vec![C::ONE]];
    for q in 0..n {
        let factor = if q == qubit { gate.clone() } else { identity(2) };
        out = kron(&out, &factor);
    }
    out
}

fn to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

fn from_bits(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, b| acc * 2 + *b as usize)
}

/// Permutation matrix of CNOT(control → target).
pub fn cnot_unitary(n: usize, control: usize, target: usize) -> Matrix {
    let dim = 1 << n;
    let mut out = vec![vec![C::ZERO; dim]; dim];
    for col in 0..dim {
        let mut bits = to_bits(col, n);
        if bits[control] == 1 {
            bits[target] ^= 1;
        }
        out[from_bits(&bits)][col] = C::ONE;
    }
    out
}

pub fn apply(m: &Matrix, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(C::ZERO, |acc, (a, b)| acc.add(a.mul(*b))))
        .collect()
}

fn ring(n: usize, range: usize) -> Vec<(usize, usize)> {
    if n == 2 {
        vec![(0, 1)]
    } else {
        (0..n).map(|i| (i, (i + range) % n)).collect()
    }
}

/// Final state of `RX(x)` encoding followed by the ansatz, built gate by gate
/// from dense `2^n x 2^n` matrices. `w` is laid out `[rep][qubit]` (basic) or
/// `[rep][qubit][phi, theta, omega]` (strong).
pub fn dense_circuit(n: usize, entangler: Entangler, reps: usize, x: &[f64], w: &[f64]) -> Vec<C> {
    let mut v = vec![C::ZERO; 1 << n];
    v[0] = C::ONE;
    for (q, &angle) in x.iter().enumerate() {
        v = apply(&single_qubit_unitary(n, q, rx(angle)), &v);
    }
    for r in 0..reps {
        match entangler {
            Entangler::Basic => {
                for q in 0..n {
                    v = apply(&single_qubit_unitary(n, q, rx(w[r * n + q])), &v);
                }
                for (c, t) in ring(n, 1) {
                    v = apply(&cnot_unitary(n, c, t), &v);
                }
            }
            Entangler::Strong => {
                for q in 0..n {
                    let k = (r * n + q) * 3;
                    let (phi, theta, omega) = (w[k], w[k + 1], w[k + 2]);
                    v = apply(&single_qubit_unitary(n, q, rz(phi)), &v);
                    v = apply(&single_qubit_unitary(n, q, ry(theta)), &v);
                    v = apply(&single_qubit_unitary(n, q, rz(omega)), &v);
                }
                let range = if n > 2 { r % (n - 1) + 1 } else { 1 };
                for (c, t) in ring(n, range) {
                    v = apply(&cnot_unitary(n, c, t), &v);
                }
            }
        }
    }
    v
}

pub fn probabilities(v: &[C]) -> Vec<f64> {
    v.iter().map(|a| a.abs2()).collect()
}

/// `sum_b (-1)^{b_i} |amp(b)|^2` for qubits `0..k`.
pub fn expectations(v: &[C], n: usize, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| {
            v.iter()
                .enumerate()
                .map(|(b, a)| if to_bits(b, n)[i] == 1 { -a.abs2() } else { a.abs2() })
                .sum()
        })
        .collect()
}

/// GAE as the explicit double sum
/// `A_t = sum_l (gamma lambda)^l prod_{k<l} (1 - done_{t+k}) delta_{t+l}`.
pub fn gae_double_sum(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let next_value = |t: usize| if t + 1 < n { values[t + 1] } else { bootstrap };
    let delta: Vec<f64> = (0..n)
        .map(|t| {
            let alive = if dones[t] { 0.0 } else { 1.0 };
            rewards[t] + gamma * next_value(t) * alive - values[t]
        })
        .collect();
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            for l in 0..(n - t) {
                let mut weight = (gamma * lambda).powi(l as i32);
                for k in 0..l {
                    if dones[t + k] {
                        weight = 0.0;
                    }
                }
                total += weight * delta[t + l];
            }
            total
        })
        .collect()
}

/// Cart-pole state `[x, x_dot, theta, theta_dot]` after one Euler step,
/// written out from the reference environment's equations.
pub fn cartpole_step(s: [f64; 4], push_right: bool) -> [f64; 4] {
    let gravity = 9.8;
    let masscart = 1.0;
    let masspole = 0.1;
    let total_mass = masspole + masscart;
    let length = 0.5;
    let polemass_length = masspole * length;
    let force_mag = 10.0;
    let tau = 0.02;

    let [x, x_dot, theta, theta_dot] = s;
    let force = if push_right { force_mag } else { -force_mag };
    let costheta = theta.cos();
    let sintheta = theta.sin();
    let temp = (force + polemass_length * theta_dot.powi(2) * sintheta) / total_mass;
    let thetaacc =
        (gravity * sintheta - costheta * temp) / (length * (4.0 / 3.0 - masspole * costheta.powi(2) / total_mass));
    let xacc = temp - polemass_length * thetaacc * costheta / total_mass;
    [x + tau * x_dot, x_dot + tau * xacc, theta + tau * theta_dot, theta_dot + tau * thetaacc]
}

pub fn cartpole_terminal(s: [f64; 4]) -> bool {
    s[0] < -2.4 || s[0] > 2.4 || s[2] < -12.0 * 2.0 * PI / 360.0 || s[2] > 12.0 * 2.0 * PI / 360.0
}

/// Pinned 50-step action script (`R` = push right).
pub const CARTPOLE_SCRIPT: &str = "RLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLRLLRLR";

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Classical-only, quantum-middle, quantum-first and quantum→quantum nets.
pub const GRADIENT_BATTERY: [&str; 4] = [
    "C 6, T, C 5, R, C 1",
    "C 3, T, Q 3 F 2, C 4, T, C 1",
    "Q 4 L 2, C 5, T, C 1",
    "C 3, T, Q 3 F 1, Q 2 L 2, C 1",
];

/// Largest absolute gap between `backward` and central differences
/// (`h = 1e-5`) of `sum_j c_j out_j`, over every parameter and input.
pub fn finite_difference_gap(dna: &str, seed: u64) -> f64 {
    use qnas_core::dna::{parse_genome, resolve_plan};
    use qnas_core::hybridnet::build_network;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = resolve_plan(&parse_genome(dna).unwrap(), 4, 2).unwrap();
    let mut net = build_network(&plan, 1.0, &mut rng);
    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (_, tape) = net.forward(&x).unwrap();
    let grads = net.backward(&tape, &c).unwrap();
    let loss = |net: &qnas_core::hybridnet::HybridNetwork, x: &[f64]| {
        let (out, _) = net.forward(x).unwrap();
        out.iter().zip(&c).map(|(o, w)| o * w).sum::<f64>()
    };

    let mut gap: f64 = 0.0;
    let blocks = net.param_blocks().len();
    for b in 0..blocks {
        for i in 0..grads.blocks[b].len() {
            let orig = net.param_blocks()[b][i];
            net.param_blocks_mut()[b][i] = orig + h;
            let plus = loss(&net, &x);
            net.param_blocks_mut()[b][i] = orig - h;
            let minus = loss(&net, &x);
            net.param_blocks_mut()[b][i] = orig;
            gap = gap.max(((plus - minus) / (2.0 * h) - grads.blocks[b][i]).abs());
        }
    }
    for i in 0..x.len() {
        let (mut plus, mut minus) = (x.clone(), x.clone());
        plus[i] += h;
        minus[i] -= h;
        gap = gap.max(((loss(&net, &plus) - loss(&net, &minus)) / (2.0 * h) - grads.input[i]).abs());
    }
    gap
}

/// Deterministic fitness from the genome's shape; counts calls per DNA.
#[derive(Default)]
pub struct StubTrainer {
    pub calls: std::cell::RefCell<std::collections::BTreeMap<String, usize>>,
}

impl StubTrainer {
    pub fn fitness(genome: &qnas_core::dna::Genome) -> f64 {
        let units = genome.total_units() as f64;
        let quantum = genome.quantum_layer_count() as f64;
        (units * 3.0 + quantum * 40.0 + genome.len() as f64).min(500.0)
    }

    pub fn total_calls(&self) -> usize {
        self.calls.borrow().values().sum()
    }
}

impl qnas_core::evolution::Trainer for StubTrainer {
    fn train(&self, job: &qnas_core::evolution::TrainJob) -> qnas_core::evolution::TrainReport {
        *self.calls.borrow_mut().entry(job.genome.to_string()).or_insert(0) += 1;
        let score = Self::fitness(&job.genome);
        qnas_core::evolution::TrainReport {
            episode_scores: vec![score; 3],
            curve: Vec::new(),
            timesteps: 0,
            failure: None,
        }
    }
}

pub fn stub_search_config(population: usize, sample: usize, cycles: usize, seed: u64) -> qnas_core::evolution::SearchConfig {
    qnas_core::evolution::SearchConfig {
        population_size: population,
        sample_size: sample,
        cycles,
        seed,
        ..Default::default()
    }
}
