//! Search run directories: manifest, config snapshot, history, checkpoint,
//! timings and the champion's parameters.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, ensure, Context, Result};
use qnas_core::evolution::{
    report_stats, run_search_until, PpoTrainer, SearchConfig, SearchSnapshot, SearchState, TrainJob, TrainReport, Trainer,
};
use qnas_core::ppo::{evaluate, train_candidate, EvalOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_hash, render_config};
use crate::history::{render_history, render_record};
use crate::params::{write_params, ParamSnapshot};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub config: PathBuf,
    pub history: PathBuf,
    pub checkpoint: PathBuf,
    pub timings: PathBuf,
    pub champion: PathBuf,
}

impl RunPaths {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            manifest: root.join("manifest.json"),
            config: root.join("config.toml"),
            history: root.join("history.txt"),
            checkpoint: root.join("checkpoint.json"),
            timings: root.join("timings.tsv"),
            champion: root.join("champion.params"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub state: SearchSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub config: String,
    pub history: String,
    pub checkpoint: String,
    pub timings: String,
    pub champion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub config: SearchConfig,
    pub seed: u64,
    /// `sequential`, or `batched-init` when initial training used a pool.
    pub mode: String,
    pub workers: usize,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub resumed_at: Vec<u64>,
    pub finished_at: Option<u64>,
    pub artifacts: Artifacts,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn mode_name(workers: usize) -> String {
    if workers > 1 { "batched-init" } else { "sequential" }.into()
}

/// Writes through a temporary sibling so readers never see half a file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

fn write_manifest(paths: &RunPaths, manifest: &RunManifest) -> Result<()> {
    write_atomic(&paths.manifest, serde_json::to_string_pretty(manifest)?.as_bytes())
}

pub fn read_manifest(paths: &RunPaths) -> Result<RunManifest> {
    let text = fs::read_to_string(&paths.manifest).with_context(|| format!("reading {}", paths.manifest.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", paths.manifest.display()))
}

pub fn write_checkpoint(paths: &RunPaths, state: &SearchState) -> Result<()> {
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        config_hash: config_hash(&state.config),
        state: state.snapshot(),
    };
    write_atomic(&paths.checkpoint, serde_json::to_string(&checkpoint)?.as_bytes())
}

pub fn read_checkpoint(paths: &RunPaths) -> Result<Checkpoint> {
    let text =
        fs::read_to_string(&paths.checkpoint).with_context(|| format!("reading {}", paths.checkpoint.display()))?;
    let checkpoint: Checkpoint =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", paths.checkpoint.display()))?;
    ensure!(
        checkpoint.version == CHECKPOINT_VERSION,
        "checkpoint version {} is not supported",
        checkpoint.version
    );
    ensure!(
        checkpoint.config_hash == config_hash(&checkpoint.state.config),
        "checkpoint config does not match its recorded hash"
    );
    Ok(checkpoint)
}

/// PPO training, optionally fanning batches out over a thread pool.
pub struct PoolTrainer {
    inner: PpoTrainer,
    pool: Option<rayon::ThreadPool>,
}

impl PoolTrainer {
    pub fn new(config: &SearchConfig, workers: usize) -> Result<Self> {
        let pool = if workers > 1 {
            Some(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
        } else {
            None
        };
        Ok(Self {
            inner: PpoTrainer {
                config: config.ppo.clone(),
            },
            pool,
        })
    }
}

impl Trainer for PoolTrainer {
    fn train(&self, job: &TrainJob) -> TrainReport {
        self.inner.train(job)
    }

    fn train_batch(&self, jobs: &[TrainJob]) -> Vec<TrainReport> {
        match &self.pool {
            Some(pool) => pool.install(|| jobs.par_iter().map(|j| self.inner.train(j)).collect()),
            None => jobs.iter().map(|j| self.inner.train(j)).collect(),
        }
    }
}

/// Creates a fresh run directory. Fails if it already holds a run.
pub fn create_run(root: &Path, config: &SearchConfig, workers: usize) -> Result<(RunPaths, SearchState)> {
    let paths = RunPaths::new(root);
    if paths.manifest.exists() || paths.checkpoint.exists() {
        bail!("{} already contains a run; use `resume` to continue it", root.display());
    }
    let state = SearchState::new(config.clone())?;
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    write_atomic(&paths.config, render_config(config).as_bytes())?;
    File::create(&paths.history).with_context(|| format!("creating {}", paths.history.display()))?;
    File::create(&paths.timings).with_context(|| format!("creating {}", paths.timings.display()))?;
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let manifest = RunManifest {
        config_hash: config_hash(config),
        config: config.clone(),
        seed: config.seed,
        mode: mode_name(workers),
        workers,
        started_at: now(),
        resumed_at: Vec::new(),
        finished_at: None,
        artifacts: Artifacts {
            config: name(&paths.config),
            history: name(&paths.history),
            checkpoint: name(&paths.checkpoint),
            timings: name(&paths.timings),
            champion: None,
        },
    };
    write_manifest(&paths, &manifest)?;
    Ok((paths, state))
}

/// Reloads a run from its checkpoint and rewrites the history file to match
/// it. `expected` must hash to the checkpointed config when given.
pub fn reopen_run(root: &Path, expected: Option<&SearchConfig>, workers: usize) -> Result<(RunPaths, SearchState)> {
    let paths = RunPaths::new(root);
    let mut manifest = read_manifest(&paths)?;
    let checkpoint = read_checkpoint(&paths)?;
    ensure!(
        manifest.config_hash == checkpoint.config_hash,
        "manifest and checkpoint disagree on the config hash"
    );
    if let Some(config) = expected {
        let hash = config_hash(config);
        ensure!(
            hash == checkpoint.config_hash,
            "refusing to resume: config hash {hash} differs from the checkpoint's {}",
            checkpoint.config_hash
        );
    }
    let state = SearchState::restore(checkpoint.state)?;
    write_atomic(&paths.history, render_history(state.history.entries()).as_bytes())?;
    manifest.resumed_at.push(now());
    if workers > 1 {
        manifest.mode = mode_name(workers);
        manifest.workers = workers;
    }
    write_manifest(&paths, &manifest)?;
    Ok((paths, state))
}

/// Runs the search, appending history, replacing the checkpoint and logging
/// wall time after initialization and every cycle. Stops early once
/// `stop_at_cycle` cycles are complete.
pub fn drive(
    paths: &RunPaths,
    state: &mut SearchState,
    trainer: &dyn Trainer,
    stop_at_cycle: Option<usize>,
    mut log: impl FnMut(&SearchState),
) -> Result<()> {
    let mut written = state.history.len();
    let mut last = Instant::now();
    let mut timings = OpenOptions::new()
        .append(true)
        .create(true)
        .open(&paths.timings)
        .with_context(|| format!("opening {}", paths.timings.display()))?;

    let stop_at = stop_at_cycle.unwrap_or(state.config.cycles);
    run_search_until(state, trainer, stop_at, |s| -> Result<()> {
        let mut history = OpenOptions::new()
            .append(true)
            .open(&paths.history)
            .with_context(|| format!("opening {}", paths.history.display()))?;
        let mut chunk = String::new();
        for c in &s.history.entries()[written..] {
            chunk.push_str(&render_record(c));
            chunk.push('\n');
        }
        history.write_all(chunk.as_bytes())?;
        history.sync_data()?;
        written = s.history.len();

        write_checkpoint(paths, s)?;

        let elapsed = last.elapsed().as_secs_f64();
        last = Instant::now();
        writeln!(timings, "cycle={}\trecords={}\tseconds={elapsed:.3}", s.cycle, s.history.len())?;
        log(s);
        Ok(())
    })
}

/// Retrains the best unique candidate from its recorded seeds and saves its
/// parameters.
pub fn export_champion(paths: &RunPaths, state: &SearchState) -> Result<ParamSnapshot> {
    let report = report_stats(&state.history)?;
    let champion = &report.leaderboard[0];
    let outcome = train_candidate(&champion.genome, &state.config.ppo, champion.train_seed)?;
    let snapshot = ParamSnapshot {
        genome: champion.genome.clone(),
        train_seed: champion.train_seed,
        eval_seed: champion.eval_seed,
        agent: outcome.agent,
    };
    write_params(&paths.champion, &snapshot)?;

    let mut manifest = read_manifest(paths)?;
    manifest.artifacts.champion = paths.champion.file_name().map(|n| n.to_string_lossy().into_owned());
    write_manifest(paths, &manifest)?;
    Ok(snapshot)
}

pub fn finish_run(paths: &RunPaths) -> Result<()> {
    let mut manifest = read_manifest(paths)?;
    manifest.finished_at = Some(now());
    write_manifest(paths, &manifest)
}

/// Mean episode return of a saved agent under the config's evaluation
/// protocol.
pub fn evaluate_snapshot(
    snapshot: &ParamSnapshot,
    options: EvalOptions,
    eval_seed: u64,
) -> Result<qnas_core::ppo::Evaluation> {
    let mut rng = ChaCha8Rng::seed_from_u64(eval_seed);
    Ok(evaluate(&snapshot.agent, options, &mut rng)?)
}
