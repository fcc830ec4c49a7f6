mod support;

use qnas_core::dna::{parse_genome, resolve_plan, Entangler};
use qnas_core::hybridnet::{adam_step, build_network, AdamState, NetworkStage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{dense_circuit, finite_difference_gap, probabilities, GRADIENT_BATTERY};

fn dense(w: &[f64], b: &[f64], x: &[f64], act: fn(f64) -> f64) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(o, bias)| act(bias + (0..x.len()).map(|i| w[o * x.len() + i] * x[i]).sum::<f64>()))
        .collect()
}

#[test]
fn gradient_battery_matches_finite_differences() {
    for dna in GRADIENT_BATTERY.iter().chain(&["C 2, T, Q 2 F 3, C 9, R, C 1"]) {
        for seed in 0..3 {
            let gap = finite_difference_gap(dna, seed);
            assert!(gap < 1e-4, "{dna} seed {seed}: gap {gap}");
        }
    }
}

#[test]
fn hybrid_forward_matches_module_composition() {
    let genome = parse_genome("C 2, T, Q 2 F 3, C 9, R, C 1").unwrap();
    let plan = resolve_plan(&genome, 4, 2).unwrap();
    let net = build_network(&plan, 0.01, &mut ChaCha8Rng::seed_from_u64(17));
    let p = net.param_blocks();
    assert_eq!(p.len(), 7);
    assert_eq!(p[2].len(), 18);

    let x = [0.03, -0.4, 0.07, 0.9];
    let h1 = dense(p[0], p[1], &x, f64::tanh);
    let q = probabilities(&dense_circuit(2, Entangler::Strong, 3, &h1, p[2]));
    let h3 = dense(p[3], p[4], &q, |z| z.max(0.0));
    let want = dense(p[5], p[6], &h3, |z| z);

    let (got, _) = net.forward(&x).unwrap();
    assert_eq!(got.len(), 2);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

#[test]
fn parameter_count_matches_formula() {
    for (dna, expected) in [
        ("C 6, T, C 5, R, C 1", (4 * 6 + 6) + (6 * 5 + 5) + (5 * 2 + 2)),
        ("C 3, T, Q 3 F 2, C 4, T, C 1", (4 * 3 + 3) + 2 * 3 * 3 + (8 * 4 + 4) + (4 * 2 + 2)),
        ("Q 4 L 2, C 5, T, C 1", 2 * 4 + (16 * 5 + 5) + (5 * 2 + 2)),
        ("C 3, T, Q 3 F 1, Q 2 L 2, C 1", (4 * 3 + 3) + 3 * 3 + 2 * 2 + (4 * 2 + 2)),
    ] {
        let plan = resolve_plan(&parse_genome(dna).unwrap(), 4, 2).unwrap();
        let net = build_network(&plan, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(net.parameter_count(), expected, "{dna}");
        let quantum: usize = net
            .stages
            .iter()
            .filter_map(|s| match s {
                NetworkStage::Quantum(q) => Some(q.weights.angles.len()),
                NetworkStage::Dense(_) => None,
            })
            .sum();
        assert_eq!(net.quantum_parameter_count(), quantum);
    }
}

#[test]
fn adam_fits_a_sine() {
    let plan = resolve_plan(&parse_genome(GRADIENT_BATTERY[0]).unwrap(), 1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut net = build_network(&plan, 1.0, &mut rng);
    let xs: Vec<f64> = (0..32).map(|i| -3.0 + 6.0 * f64::from(i) / 31.0).collect();

    let loss_and_grads = |net: &qnas_core::hybridnet::HybridNetwork| {
        let mut total = 0.0;
        let mut grads = qnas_core::hybridnet::Gradients::zeros(net);
        for &x in &xs {
            let (out, tape) = net.forward(&[x]).unwrap();
            let err = out[0] - x.sin();
            total += err * err / xs.len() as f64;
            net.backward_into(&tape, &[2.0 * err / xs.len() as f64], &mut grads).unwrap();
        }
        (total, grads)
    };

    let (initial, _) = loss_and_grads(&net);
    let mut adam = AdamState::new(&net, 0.01);
    for _ in 0..200 {
        let (_, grads) = loss_and_grads(&net);
        adam_step(&mut net, &grads, &mut adam);
    }
    let (last, _) = loss_and_grads(&net);
    assert_eq!(adam.step, 200);
    assert!(last <= 0.1 * initial, "loss {initial} -> {last}");
}

#[test]
fn same_seed_builds_identical_networks() {
    let plan = resolve_plan(&parse_genome("Q 4 L 2, C 5, T, C 1").unwrap(), 4, 2).unwrap();
    let a = build_network(&plan, 0.01, &mut ChaCha8Rng::seed_from_u64(4));
    let b = build_network(&plan, 0.01, &mut ChaCha8Rng::seed_from_u64(4));
    assert_eq!(a, b);
    let x: Vec<f64> = (0..4).map(|_| ChaCha8Rng::seed_from_u64(1).random()).collect();
    assert_eq!(a.forward(&x).unwrap().0, b.forward(&x).unwrap().0);
}
