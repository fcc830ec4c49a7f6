//! Regularized (aging) evolution with score reuse keyed by canonical DNA.
//!
//! The population is a FIFO queue: every cycle the best of a random sample
//! is mutated, the child is appended and the oldest member leaves, whatever
//! its score. Every candidate ever scored is appended to the history, whose
//! index lets a repeated DNA skip training.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cartpole::OBSERVATION_DIM;
use crate::dna::{Genome, MAX_LAYERS};
use crate::mutation::{mutate, random_classical_gene, random_quantum_gene, repair, MutationKind};
use crate::ppo::{evaluate, train_candidate, CurvePoint, EvalOptions, PpoConfig};

pub const DEFAULT_POPULATION_SIZE: usize = 25;
pub const DEFAULT_SAMPLE_SIZE: usize = 8;
pub const DEFAULT_CYCLES: usize = 1000;
pub const DEFAULT_QUANTUM_PROBABILITY: f64 = 0.25;
pub const MIN_RANDOM_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// `P`
    pub population_size: usize,
    /// `S`
    pub sample_size: usize,
    /// `C`
    pub cycles: usize,
    /// Chance that a gene of a random initial genome is quantum.
    pub quantum_probability: f64,
    pub sample_with_replacement: bool,
    pub seed: u64,
    pub ppo: PpoConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            population_size: DEFAULT_POPULATION_SIZE,
            sample_size: DEFAULT_SAMPLE_SIZE,
            cycles: DEFAULT_CYCLES,
            quantum_probability: DEFAULT_QUANTUM_PROBABILITY,
            sample_with_replacement: false,
            seed: 0,
            ppo: PpoConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("history is empty")]
    EmptyHistory,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population_size == 0 {
            return Err(SearchError::InvalidConfig("population_size must be at least 1".into()));
        }
        if self.sample_size == 0 || self.sample_size > self.population_size {
            return Err(SearchError::InvalidConfig(format!(
                "sample_size must satisfy 1 <= sample_size <= population_size (got {} > {})",
                self.sample_size, self.population_size
            )));
        }
        if !(0.0..=1.0).contains(&self.quantum_probability) {
            return Err(SearchError::InvalidConfig("quantum_probability must lie in [0, 1]".into()));
        }
        self.ppo
            .validate()
            .map_err(|e| SearchError::InvalidConfig(e.0))
    }
}

/// One scored genome. Reused candidates copy the score of the first
/// candidate with the same DNA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genome: Genome,
    pub dna: String,
    pub score: f64,
    pub episode_scores: Vec<f64>,
    /// Position in the history.
    pub birth: usize,
    pub parent: Option<String>,
    pub mutation: Option<MutationKind>,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub reused: bool,
    pub failure: Option<String>,
    /// Environment steps spent training this entry (0 when reused).
    pub train_timesteps: usize,
    pub curve: Vec<CurvePoint>,
}

impl Candidate {
    pub fn quantum_layers(&self) -> usize {
        self.genome.quantum_layer_count()
    }
}

/// Where a candidate came from and which seeds it was scored with.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineage {
    pub birth: usize,
    pub parent: Option<String>,
    pub mutation: Option<MutationKind>,
    pub train_seed: u64,
    pub eval_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    pub genome: Genome,
    pub train_seed: u64,
    pub eval_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub episode_scores: Vec<f64>,
    pub curve: Vec<CurvePoint>,
    pub timesteps: usize,
    pub failure: Option<String>,
}

impl TrainReport {
    /// A zero-score report for a candidate whose training blew up.
    pub fn failed(reason: String, episodes: usize, curve: Vec<CurvePoint>, timesteps: usize) -> Self {
        Self {
            episode_scores: vec![0.0; episodes],
            curve,
            timesteps,
            failure: Some(reason),
        }
    }

    pub fn score(&self) -> f64 {
        mean(&self.episode_scores)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Turns a genome into episode scores.
pub trait Trainer {
    fn train(&self, job: &TrainJob) -> TrainReport;

    /// Scores independent jobs; results are in job order.
    fn train_batch(&self, jobs: &[TrainJob]) -> Vec<TrainReport> {
        jobs.iter().map(|job| self.train(job)).collect()
    }
}

/// Trains with PPO and scores with the configured evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoTrainer {
    pub config: PpoConfig,
}

impl Trainer for PpoTrainer {
    fn train(&self, job: &TrainJob) -> TrainReport {
        let episodes = self.config.eval_episodes;
        let outcome = match train_candidate(&job.genome, &self.config, job.train_seed) {
            Ok(o) => o,
            Err(e) => return TrainReport::failed(e.to_string(), episodes, Vec::new(), 0),
        };
        if let Some(reason) = outcome.failure {
            return TrainReport::failed(reason, episodes, outcome.curve, outcome.timesteps);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(job.eval_seed);
        match evaluate(&outcome.agent, EvalOptions::from_config(&self.config), &mut rng) {
            Ok(eval) => TrainReport {
                episode_scores: eval.episodes,
                curve: outcome.curve,
                timesteps: outcome.timesteps,
                failure: None,
            },
            Err(e) => TrainReport::failed(format!("evaluation: {e}"), episodes, outcome.curve, outcome.timesteps),
        }
    }
}

/// Append-only record of every scored candidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Candidate>", into = "Vec<Candidate>")]
pub struct History {
    entries: Vec<Candidate>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<Candidate>> for History {
    fn from(entries: Vec<Candidate>) -> Self {
        let mut h = History::default();
        for c in entries {
            h.push(c);
        }
        h
    }
}

impl From<History> for Vec<Candidate> {
    fn from(h: History) -> Self {
        h.entries
    }
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, candidate: Candidate) {
        self.index.entry(candidate.dna.clone()).or_insert(self.entries.len());
        self.entries.push(candidate);
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// First candidate with this DNA.
    pub fn first(&self, dna: &str) -> Option<&Candidate> {
        self.index.get(dna).map(|&i| &self.entries[i])
    }

    pub fn unique_count(&self) -> usize {
        self.index.len()
    }

    /// Number of entries that actually ran training.
    pub fn trained_count(&self) -> usize {
        self.entries.iter().filter(|c| !c.reused).count()
    }
}

/// FIFO queue of at most `capacity` candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: VecDeque<Candidate>,
    capacity: usize,
}

impl Population {
    pub fn new(capacity: usize) -> Self {
        Self {
            members: VecDeque::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn members(&self) -> impl Iterator<Item = &Candidate> {
        self.members.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Candidate> {
        self.members.get(i)
    }

    /// Appends and, when over capacity, removes and returns the oldest.
    pub fn push(&mut self, candidate: Candidate) -> Option<Candidate> {
        self.members.push_back(candidate);
        if self.members.len() > self.capacity {
            self.members.pop_front()
        } else {
            None
        }
    }
}

/// Random genome with a uniform layer count in `[2, 10]`, repaired.
pub fn random_genome<R: Rng + ?Sized>(rng: &mut R, quantum_probability: f64) -> Genome {
    loop {
        let layers = rng.random_range(MIN_RANDOM_LAYERS..=MAX_LAYERS);
        let genes = (0..layers)
            .map(|_| {
                if rng.random_bool(quantum_probability) {
                    random_quantum_gene(rng)
                } else {
                    random_classical_gene(rng)
                }
            })
            .collect();
        if let Ok(g) = repair(&Genome::new(genes), OBSERVATION_DIM) {
            return g;
        }
    }
}

fn candidate_from(genome: Genome, lineage: Lineage, report: TrainReport) -> Candidate {
    Candidate {
        dna: genome.to_string(),
        genome,
        score: report.score(),
        episode_scores: report.episode_scores,
        birth: lineage.birth,
        parent: lineage.parent,
        mutation: lineage.mutation,
        train_seed: lineage.train_seed,
        eval_seed: lineage.eval_seed,
        reused: false,
        failure: report.failure,
        train_timesteps: report.timesteps,
        curve: report.curve,
    }
}

fn reuse(genome: Genome, lineage: Lineage, cached: &Candidate) -> Candidate {
    Candidate {
        dna: cached.dna.clone(),
        genome,
        score: cached.score,
        episode_scores: cached.episode_scores.clone(),
        birth: lineage.birth,
        parent: lineage.parent,
        mutation: lineage.mutation,
        train_seed: lineage.train_seed,
        eval_seed: lineage.eval_seed,
        reused: true,
        failure: cached.failure.clone(),
        train_timesteps: 0,
        curve: Vec::new(),
    }
}

/// Copies the cached score when the DNA was seen before, otherwise trains.
/// The new candidate is appended to `history` and returned.
pub fn score_or_reuse(
    genome: Genome,
    lineage: Lineage,
    trainer: &dyn Trainer,
    history: &mut History,
) -> Candidate {
    let candidate = match history.first(&genome.to_string()) {
        Some(cached) => reuse(genome, lineage, cached),
        None => {
            let report = trainer.train(&TrainJob {
                genome: genome.clone(),
                train_seed: lineage.train_seed,
                eval_seed: lineage.eval_seed,
            });
            candidate_from(genome, lineage, report)
        }
    };
    history.push(candidate.clone());
    candidate
}

/// Position of a ChaCha stream, enough to resume it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// What one evolution cycle did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Births of the sampled members.
    pub sampled: Vec<usize>,
    pub parent: String,
    pub child: Candidate,
    pub evicted: Candidate,
}

/// Everything needed to continue a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub config: SearchConfig,
    pub population: Population,
    pub history: History,
    /// Completed evolution cycles.
    pub cycle: usize,
    rng: ChaCha8Rng,
}

/// Serializable form of [`SearchState`]. The population is always the last
/// `P` history entries, so only the history is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSnapshot {
    pub config: SearchConfig,
    pub history: History,
    pub cycle: usize,
    pub rng: RngState,
}

impl SearchState {
    pub fn new(config: SearchConfig) -> Result<Self, SearchError> {
        config.validate()?;
        Ok(Self {
            population: Population::new(config.population_size),
            history: History::new(),
            cycle: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
        })
    }

    pub fn snapshot(&self) -> SearchSnapshot {
        SearchSnapshot {
            config: self.config.clone(),
            history: self.history.clone(),
            cycle: self.cycle,
            rng: RngState::capture(&self.rng),
        }
    }

    pub fn restore(snapshot: SearchSnapshot) -> Result<Self, SearchError> {
        let mut state = Self::new(snapshot.config)?;
        let entries = snapshot.history.entries();
        let start = entries.len().saturating_sub(state.config.population_size);
        for c in &entries[start..] {
            state.population.push(c.clone());
        }
        state.history = snapshot.history;
        state.cycle = snapshot.cycle;
        state.rng = snapshot.rng.restore();
        Ok(state)
    }

    pub fn is_initialized(&self) -> bool {
        self.population.is_full()
    }

    pub fn is_finished(&self) -> bool {
        self.is_initialized() && self.cycle >= self.config.cycles
    }

    fn draw_seeds(&mut self) -> (u64, u64) {
        (self.rng.next_u64(), self.rng.next_u64())
    }

    /// Fills the population with `P` random genomes. Distinct new DNAs go to
    /// the trainer as one batch.
    pub fn initialize(&mut self, trainer: &dyn Trainer) {
        let q = self.config.quantum_probability;
        let mut drafts = Vec::with_capacity(self.config.population_size);
        for _ in 0..self.config.population_size {
            let genome = random_genome(&mut self.rng, q);
            let (train_seed, eval_seed) = self.draw_seeds();
            drafts.push(TrainJob {
                genome,
                train_seed,
                eval_seed,
            });
        }

        let mut seen = BTreeSet::new();
        let jobs: Vec<TrainJob> = drafts
            .iter()
            .filter(|job| {
                let dna = job.genome.to_string();
                self.history.first(&dna).is_none() && seen.insert(dna)
            })
            .cloned()
            .collect();
        let reports = trainer.train_batch(&jobs);
        let mut fresh: BTreeMap<String, TrainReport> = jobs
            .iter()
            .map(|job| job.genome.to_string())
            .zip(reports)
            .collect();

        for job in drafts {
            let lineage = Lineage {
                birth: self.history.len(),
                parent: None,
                mutation: None,
                train_seed: job.train_seed,
                eval_seed: job.eval_seed,
            };
            let dna = job.genome.to_string();
            let candidate = match fresh.remove(&dna) {
                Some(report) => candidate_from(job.genome, lineage, report),
                None => {
                    let cached = self.history.first(&dna).expect("trained earlier in this batch or before");
                    reuse(job.genome, lineage, cached)
                }
            };
            self.history.push(candidate.clone());
            self.population.push(candidate);
        }
    }

    fn sample(&mut self) -> Vec<usize> {
        let p = self.population.len();
        let s = self.config.sample_size;
        if self.config.sample_with_replacement {
            (0..s).map(|_| self.rng.random_range(0..p)).collect()
        } else {
            rand::seq::index::sample(&mut self.rng, p, s).into_vec()
        }
    }

    /// One cycle: tournament over a random sample, mutate the winner, append
    /// the child and evict the oldest member.
    pub fn evolve_step(&mut self, trainer: &dyn Trainer) -> StepRecord {
        assert!(self.is_initialized(), "population must be full before evolving");
        let picks = self.sample();
        let mut best = &self.population.members[picks[0]];
        for &i in &picks[1..] {
            let c = &self.population.members[i];
            if c.score > best.score || (c.score == best.score && c.birth > best.birth) {
                best = c;
            }
        }
        let sampled = picks.iter().map(|&i| self.population.members[i].birth).collect();
        let parent_genome = best.genome.clone();
        let parent = best.dna.clone();

        let (child, kind) = mutate(&parent_genome, OBSERVATION_DIM, &mut self.rng);
        let (train_seed, eval_seed) = self.draw_seeds();
        let lineage = Lineage {
            birth: self.history.len(),
            parent: Some(parent.clone()),
            mutation: Some(kind),
            train_seed,
            eval_seed,
        };
        let child = score_or_reuse(child, lineage, trainer, &mut self.history);
        let evicted = self
            .population
            .push(child.clone())
            .expect("full population evicts on push");
        StepRecord {
            sampled,
            parent,
            child,
            evicted,
        }
    }
}

/// Initializes if needed, then runs the remaining cycles. `on_progress` sees
/// the state after initialization and after every cycle; an error from it
/// stops the search.
pub fn run_search<E>(
    state: &mut SearchState,
    trainer: &dyn Trainer,
    on_progress: impl FnMut(&SearchState) -> Result<(), E>,
) -> Result<(), E> {
    let cycles = state.config.cycles;
    run_search_until(state, trainer, cycles, on_progress)
}

/// [`run_search`] that stops once `stop_at` cycles (capped at the configured
/// count) are complete.
pub fn run_search_until<E>(
    state: &mut SearchState,
    trainer: &dyn Trainer,
    stop_at: usize,
    mut on_progress: impl FnMut(&SearchState) -> Result<(), E>,
) -> Result<(), E> {
    if !state.is_initialized() {
        state.initialize(trainer);
        on_progress(state)?;
    }
    while state.cycle < stop_at.min(state.config.cycles) {
        state.evolve_step(trainer);
        state.cycle += 1;
        on_progress(state)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub iteration: usize,
    pub score: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub records: usize,
    pub unique: usize,
    pub trainings: usize,
    /// Unique DNAs per quantum-layer count.
    pub partition: BTreeMap<usize, usize>,
    /// First entry of every unique DNA, best score first.
    pub leaderboard: Vec<Candidate>,
    pub series: Vec<SeriesPoint>,
}

impl SearchReport {
    pub fn top(&self, k: usize) -> &[Candidate] {
        &self.leaderboard[..k.min(self.leaderboard.len())]
    }
}

pub fn report_stats(history: &History) -> Result<SearchReport, SearchError> {
    if history.is_empty() {
        return Err(SearchError::EmptyHistory);
    }
    let mut leaderboard: Vec<Candidate> = history
        .index
        .values()
        .map(|&i| history.entries[i].clone())
        .collect();
    leaderboard.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.birth.cmp(&b.birth)));

    let mut partition = BTreeMap::new();
    for c in &leaderboard {
        *partition.entry(c.quantum_layers()).or_insert(0) += 1;
    }

    let mut best = f64::NEG_INFINITY;
    let series = history
        .entries
        .iter()
        .enumerate()
        .map(|(iteration, c)| {
            best = best.max(c.score);
            SeriesPoint {
                iteration,
                score: c.score,
                best_so_far: best,
            }
        })
        .collect();

    Ok(SearchReport {
        records: history.len(),
        unique: history.unique_count(),
        trainings: history.trained_count(),
        partition,
        leaderboard,
        series,
    })
}
