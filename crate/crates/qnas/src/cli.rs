use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qnas_core::dna::{parse_genome, resolve_plan, validate};
use qnas_core::evolution::{report_stats, History, SearchConfig, SearchReport, SearchState};
use qnas_core::ppo::{train_candidate, EvalOptions, ACTOR_HEAD};
use qnas_core::cartpole::OBSERVATION_DIM;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::load_config;
use crate::history::read_history;
use crate::params::{read_params, write_params, ParamSnapshot};
use crate::run::{create_run, drive, evaluate_snapshot, export_champion, finish_run, reopen_run, PoolTrainer};

#[derive(Debug, Parser)]
#[command(name = "qnas", version, about = "Regularized evolution over hybrid quantum/classical PPO agents on cart-pole")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a new search into an output directory.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Parallel training of the initial population.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Continue a search from its checkpoint.
    Resume {
        /// Run directory written by `search`.
        #[arg(long)]
        out: PathBuf,
        /// Refuse to resume unless this config matches the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Train and evaluate one DNA.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dna: String,
        /// Directory for the parameter snapshot and training curve.
        #[arg(long, default_value = "qnas-train")]
        out: PathBuf,
    },
    /// Evaluate a saved parameter snapshot.
    Eval {
        /// Parameter file written by `train` or `search`.
        params: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Leaderboard, quantum-layer breakdown and curve export for a history.
    Report {
        #[arg(long)]
        history: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Directory for curve.csv (defaults to the history's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shot count for bitstring readouts during evaluation.
    #[arg(long)]
    pub shots: Option<u32>,
    /// Sample evaluation actions instead of taking the argmax.
    #[arg(long)]
    pub stochastic_eval: bool,
}

impl Common {
    fn resolve(&self) -> Result<SearchConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => SearchConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.shots.is_some() {
            config.ppo.eval_shots = self.shots;
        }
        if self.stochastic_eval {
            config.ppo.stochastic_eval = true;
        }
        config.validate()?;
        Ok(config)
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Search { common, out: dir, workers } => {
            let config = common.resolve()?;
            let (paths, state) = create_run(&dir, &config, workers)?;
            search_to_end(&paths, state, workers, out)
        }
        Command::Resume { out: dir, config, workers } => {
            let expected = config.as_deref().map(load_config).transpose()?;
            let (paths, state) = reopen_run(&dir, expected.as_ref(), workers)?;
            writeln!(out, "resuming at cycle {}/{}", state.cycle, state.config.cycles)?;
            search_to_end(&paths, state, workers, out)
        }
        Command::Train { common, dna, out: dir } => cmd_train(&common, &dna, &dir, out),
        Command::Eval { params, common } => cmd_eval(&params, &common, out),
        Command::Report { history, top, out: dir } => cmd_report(&history, top, dir.as_deref(), out),
    }
}

fn search_to_end(paths: &crate::run::RunPaths, mut state: SearchState, workers: usize, out: &mut dyn Write) -> Result<()> {
    let trainer = PoolTrainer::new(&state.config, workers)?;
    let mut best = f64::NEG_INFINITY;
    let mut io = Ok(());
    drive(paths, &mut state, &trainer, None, |s| {
        let newest = s.history.entries().last().expect("progress implies a record");
        best = s.history.entries().iter().map(|c| c.score).fold(best, f64::max);
        let line = if s.cycle == 0 {
            format!("initialized {} candidates, best {best:.1}", s.population.len())
        } else {
            format!(
                "cycle {}/{}: {:.1}{} {} (best {best:.1})",
                s.cycle,
                s.config.cycles,
                newest.score,
                if newest.reused { " reused" } else { "" },
                newest.dna
            )
        };
        if io.is_ok() {
            io = writeln!(out, "{line}");
        }
    })?;
    io?;
    let champion = export_champion(paths, &state)?;
    finish_run(paths)?;
    writeln!(out, "champion: {}", champion.genome)?;
    writeln!(out, "history: {}", paths.history.display())?;
    Ok(())
}

fn derive_seeds(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.next_u64(), rng.next_u64())
}

fn scores_line(episodes: &[f64]) -> String {
    episodes.iter().map(|s| format!("{s}")).collect::<Vec<_>>().join(" ")
}

fn cmd_train(common: &Common, dna: &str, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let config = common.resolve()?;
    let genome = parse_genome(dna)?;
    let violations = validate(&genome);
    if let Some(v) = violations.first() {
        bail!("invalid genome {genome}: {v}");
    }
    resolve_plan(&genome, OBSERVATION_DIM, ACTOR_HEAD)?;

    let (train_seed, eval_seed) = derive_seeds(config.seed);
    let outcome = train_candidate(&genome, &config.ppo, train_seed)?;
    if let Some(reason) = &outcome.failure {
        writeln!(out, "training failed: {reason}; score 0")?;
    }
    let snapshot = ParamSnapshot {
        genome: genome.clone(),
        train_seed,
        eval_seed,
        agent: outcome.agent,
    };
    let eval = evaluate_snapshot(&snapshot, EvalOptions::from_config(&config.ppo), eval_seed)?;

    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let params = dir.join("model.params");
    write_params(&params, &snapshot)?;
    let mut curve = String::from("timestep,episodic_return,policy_loss,value_loss,entropy,clip_fraction\n");
    for p in &outcome.curve {
        let ret = p.episodic_return.map_or(String::new(), |r| r.to_string());
        writeln!(
            curve,
            "{},{ret},{},{},{},{}",
            p.timestep, p.policy_loss, p.value_loss, p.entropy, p.clip_fraction
        )?;
    }
    std::fs::write(dir.join("curve.csv"), curve)?;

    let score = if outcome.failure.is_some() { 0.0 } else { eval.mean };
    writeln!(out, "dna: {genome}")?;
    writeln!(
        out,
        "parameters: {} actor, {} critic",
        snapshot.agent.actor.parameter_count(),
        snapshot.agent.critic.parameter_count()
    )?;
    writeln!(out, "timesteps: {}", outcome.timesteps)?;
    writeln!(out, "average: {score}")?;
    writeln!(out, "episodes: {}", scores_line(&eval.episodes))?;
    writeln!(out, "perfect: {}/{}", eval.perfect_episodes(), eval.episodes.len())?;
    writeln!(out, "params: {}", params.display())?;
    Ok(())
}

fn cmd_eval(path: &Path, common: &Common, out: &mut dyn Write) -> Result<()> {
    let config = common.resolve()?;
    let snapshot = read_params(path).with_context(|| format!("reading {}", path.display()))?;
    let seed = common.seed.unwrap_or(snapshot.eval_seed);
    let eval = evaluate_snapshot(&snapshot, EvalOptions::from_config(&config.ppo), seed)?;
    writeln!(out, "dna: {}", snapshot.genome)?;
    writeln!(out, "average: {}", eval.mean)?;
    writeln!(out, "episodes: {}", scores_line(&eval.episodes))?;
    writeln!(out, "perfect: {}/{}", eval.perfect_episodes(), eval.episodes.len())?;
    Ok(())
}

/// Comma-separated `iteration,score,best_so_far` rows with a header.
pub fn render_curve_csv(report: &SearchReport) -> String {
    let mut csv = String::from("iteration,score,best_so_far\n");
    for p in &report.series {
        writeln!(csv, "{},{},{}", p.iteration, p.score, p.best_so_far).expect("writing to a String");
    }
    csv
}

fn cmd_report(path: &Path, top: usize, dir: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let entries = read_history(path).with_context(|| format!("reading {}", path.display()))?;
    let report = report_stats(&History::from(entries))?;

    writeln!(
        out,
        "records: {}  unique: {}  trained: {}",
        report.records, report.unique, report.trainings
    )?;
    writeln!(out, "unique models by quantum-layer count:")?;
    for (q, n) in &report.partition {
        writeln!(out, "  {q}: {n}")?;
    }
    writeln!(out, "top {}:", top.min(report.unique))?;
    writeln!(out, "  rank  score    perfect  iteration  dna")?;
    for (i, c) in report.top(top).iter().enumerate() {
        let perfect = c.episode_scores.iter().filter(|s| **s >= 500.0).count();
        writeln!(
            out,
            "  {:<4}  {:<7.1}  {:<7}  {:<9}  {}",
            i + 1,
            c.score,
            perfect,
            c.birth,
            c.dna
        )?;
    }

    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let curve = dir.join("curve.csv");
    std::fs::write(&curve, render_curve_csv(&report)).with_context(|| format!("writing {}", curve.display()))?;
    writeln!(out, "curve: {}", curve.display())?;
    Ok(())
}
