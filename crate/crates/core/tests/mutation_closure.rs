use qnas_core::dna::{parse_genome, resolve_plan, validate, Activation, Entangler, Genome, LayerGene};
use qnas_core::evolution::random_genome;
use qnas_core::mutation::{mutate, repair, MutationKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: [&str; 4] = [
    "C 50, T, C 13, R, C 2, T, Q 2 F 3, C 9, R, C 55, T, C 29, R, C 42, R, C 38, R, C 1",
    "C 37, T, C 41, T, C 2, R, C 24, T, C 5, T, C 1",
    "Q 4 L 2, C 5, T, C 1",
    "C 3, T, Q 3 F 1, Q 2 L 2, C 1",
];

fn assert_buildable(g: &Genome) {
    assert!(validate(g).is_empty(), "{g}: {:?}", validate(g));
    assert!(resolve_plan(g, 4, 2).is_ok(), "{g}");
    assert!(resolve_plan(g, 4, 1).is_ok(), "{g}");
    assert_eq!(repair(g, 4).as_ref(), Ok(g), "repair must fix valid children");
}

#[test]
fn ten_thousand_mutations_stay_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut kinds = std::collections::BTreeSet::new();
    let mut lineages: Vec<Genome> = SEEDS.iter().map(|s| parse_genome(s).unwrap()).collect();
    for i in 0..10_000 {
        let slot = i % lineages.len();
        let (child, kind) = mutate(&lineages[slot], 4, &mut rng);
        assert_buildable(&child);
        kinds.insert(kind.name());
        lineages[slot] = child;
    }
    assert_eq!(kinds.len(), MutationKind::ALL.len());
}

#[test]
fn random_genomes_are_valid_and_varied() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut multi_quantum = 0;
    for _ in 0..10_000 {
        let g = random_genome(&mut rng, 0.25);
        assert_buildable(&g);
        assert!((1..=10).contains(&g.len()));
        if g.quantum_layer_count() >= 2 {
            multi_quantum += 1;
        }
    }
    assert!(multi_quantum > 0);
}

#[test]
fn repair_is_idempotent() {
    let classical = |width, activation| LayerGene::Classical { width, activation };
    let quantum = |qubits, entangler, reps| LayerGene::Quantum { qubits, entangler, reps };
    let broken = [
        vec![classical(1, None), classical(100, None), quantum(12, Entangler::Strong, 0), classical(3, None)],
        vec![quantum(3, Entangler::Basic, 1), classical(2, None)],
        vec![
            classical(9, None),
            quantum(1, Entangler::Strong, 2),
            quantum(5, Entangler::Basic, 1),
            classical(8, Some(Activation::Relu)),
        ],
    ];
    for genes in broken {
        let raw = Genome::new(genes);
        let once = repair(&raw, 4).unwrap_or_else(|e| panic!("{raw}: {e}"));
        assert_buildable(&once);
        assert_eq!(repair(&once, 4).unwrap(), once, "{raw}");
    }
}

#[test]
fn identical_seeds_give_identical_children() {
    for s in SEEDS {
        let g = parse_genome(s).unwrap();
        for seed in 0..50 {
            let a = mutate(&g, 4, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = mutate(&g, 4, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
        }
    }
}
