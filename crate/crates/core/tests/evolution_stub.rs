mod support;

use std::collections::VecDeque;

use qnas_core::dna::parse_genome;
use qnas_core::evolution::{
    report_stats, run_search, run_search_until, score_or_reuse, History, Lineage, SearchState, TrainJob, TrainReport,
    Trainer,
};
use support::{stub_search_config, StubTrainer};

#[test]
fn eviction_is_fifo_and_parents_win_their_sample() {
    let trainer = StubTrainer::default();
    let mut state = SearchState::new(stub_search_config(10, 4, 200, 3)).unwrap();
    state.initialize(&trainer);
    let mut queue: VecDeque<usize> = (0..10).collect();

    for _ in 0..200 {
        let record = state.evolve_step(&trainer);
        state.cycle += 1;

        assert_eq!(record.sampled.len(), 4);
        let entries = state.history.entries();
        let winner = record
            .sampled
            .iter()
            .map(|&b| &entries[b])
            .max_by(|a, b| a.score.total_cmp(&b.score).then(a.birth.cmp(&b.birth)))
            .unwrap();
        assert_eq!(record.parent, winner.dna);
        assert!(record.sampled.iter().all(|b| queue.contains(b)));

        assert_eq!(record.evicted.birth, queue.pop_front().unwrap());
        queue.push_back(record.child.birth);
        let births: Vec<usize> = state.population.members().map(|c| c.birth).collect();
        assert_eq!(births, Vec::from(queue.clone()));
        assert_eq!(state.population.len(), 10);
    }
}

#[test]
fn oldest_member_is_evicted_even_when_best() {
    let trainer = StubTrainer::default();
    let mut state = SearchState::new(stub_search_config(5, 5, 30, 8)).unwrap();
    state.initialize(&trainer);
    for _ in 0..30 {
        let oldest = state.population.get(0).unwrap().clone();
        let record = state.evolve_step(&trainer);
        assert_eq!(record.evicted, oldest);
    }
}

#[test]
fn each_unique_dna_is_trained_once() {
    let trainer = StubTrainer::default();
    let mut state = SearchState::new(stub_search_config(8, 4, 200, 11)).unwrap();
    run_search(&mut state, &trainer, |_| Ok::<(), ()>(())).unwrap();

    let calls = trainer.calls.borrow();
    assert!(calls.values().all(|&n| n == 1));
    assert_eq!(calls.len(), state.history.unique_count());
    assert_eq!(state.history.trained_count(), state.history.unique_count());
    assert_eq!(state.history.len(), 208);
    assert!(state.history.len() > state.history.unique_count());
    for c in state.history.entries() {
        assert_eq!(c.score, StubTrainer::fitness(&c.genome));
        assert_eq!(c.score, c.episode_scores.iter().sum::<f64>() / c.episode_scores.len() as f64);
        assert_eq!(c.dna, c.genome.to_string());
        let first = state.history.first(&c.dna).unwrap();
        assert_eq!(c.reused, first.birth != c.birth);
    }
}

#[test]
fn activation_change_is_a_new_model() {
    let trainer = StubTrainer::default();
    let mut history = History::new();
    let lineage = |birth| Lineage {
        birth,
        parent: None,
        mutation: None,
        train_seed: 0,
        eval_seed: 0,
    };
    for (birth, dna) in ["C 8, T, C 1", "C 8, R, C 1", "C 8, T, C 1"].iter().enumerate() {
        score_or_reuse(parse_genome(dna).unwrap(), lineage(birth), &trainer, &mut history);
    }
    assert_eq!(trainer.total_calls(), 2);
    assert!(history.entries()[2].reused);
    assert_eq!(history.entries()[2].train_timesteps, 0);
}

struct Exploding;

impl Trainer for Exploding {
    fn train(&self, _: &TrainJob) -> TrainReport {
        TrainReport::failed("loss became NaN".into(), 10, Vec::new(), 512)
    }
}

#[test]
fn failed_training_scores_zero_and_is_indexed() {
    let mut history = History::new();
    let lineage = Lineage {
        birth: 0,
        parent: None,
        mutation: None,
        train_seed: 1,
        eval_seed: 2,
    };
    let c = score_or_reuse(parse_genome("C 8, T, C 1").unwrap(), lineage.clone(), &Exploding, &mut history);
    assert_eq!(c.score, 0.0);
    assert_eq!(c.failure.as_deref(), Some("loss became NaN"));
    assert!(history.first("C 8, T, C 1").is_some());
    let again = score_or_reuse(
        parse_genome("C 8, T, C 1").unwrap(),
        Lineage { birth: 1, ..lineage },
        &Exploding,
        &mut history,
    );
    assert!(again.reused);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let config = stub_search_config(6, 3, 60, 21);
    let mut full = SearchState::new(config.clone()).unwrap();
    run_search(&mut full, &StubTrainer::default(), |_| Ok::<(), ()>(())).unwrap();

    for stop in [0, 1, 17, 59] {
        let mut first = SearchState::new(config.clone()).unwrap();
        run_search_until(&mut first, &StubTrainer::default(), stop, |_| Ok::<(), ()>(())).unwrap();
        assert_eq!(first.cycle, stop);
        let mut resumed = SearchState::restore(first.snapshot()).unwrap();
        run_search(&mut resumed, &StubTrainer::default(), |_| Ok::<(), ()>(())).unwrap();
        assert_eq!(resumed.history, full.history, "stop at {stop}");
        assert_eq!(resumed.snapshot(), full.snapshot());
    }
}

#[test]
fn best_so_far_never_decreases() {
    let mut state = SearchState::new(stub_search_config(10, 5, 200, 4)).unwrap();
    run_search(&mut state, &StubTrainer::default(), |_| Ok::<(), ()>(())).unwrap();
    let report = report_stats(&state.history).unwrap();
    assert_eq!(report.series.len(), 210);
    for pair in report.series.windows(2) {
        assert!(pair[1].best_so_far >= pair[0].best_so_far);
    }
    let best = state.history.entries().iter().map(|c| c.score).fold(f64::MIN, f64::max);
    assert_eq!(report.series.last().unwrap().best_so_far, best);
    assert_eq!(report.leaderboard.len(), report.unique);
    assert_eq!(report.leaderboard[0].score, best);
    assert_eq!(report.partition.values().sum::<usize>(), report.unique);
}
