//! Text snapshot of a trained actor/critic pair.
//!
//! ```text
//! qnas-params 1
//! dna C 8, T, C 1
//! train_seed 7
//! eval_seed 8
//! tensor actor.stage0.weight 8 4
//! 0.12 -0.5 ...
//! ```
//!
//! Tensors appear in network order. Observation statistics follow as
//! `normalizer.mean`, `normalizer.var` and `normalizer.count` lines when
//! normalization was enabled.

use std::path::Path;

use qnas_core::dna::{parse_genome, Genome};
use qnas_core::hybridnet::HybridNetwork;
use qnas_core::ppo::{ActorCritic, ObservationNormalizer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAGIC: &str = "qnas-params 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSnapshot {
    pub genome: Genome,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub agent: ActorCritic,
}

#[derive(Debug, thiserror::Error)]
pub enum ParamsError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn write_network(out: &mut String, prefix: &str, net: &HybridNetwork) {
    for (info, block) in net.block_info().iter().zip(net.param_blocks()) {
        let dims = info.shape.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("tensor {prefix}.{} {dims}\n{}\n", info.name, join(block)));
    }
}

pub fn render_params(snapshot: &ParamSnapshot) -> String {
    let mut out = format!(
        "{MAGIC}\ndna {}\ntrain_seed {}\neval_seed {}\n",
        snapshot.genome, snapshot.train_seed, snapshot.eval_seed
    );
    write_network(&mut out, "actor", &snapshot.agent.actor);
    write_network(&mut out, "critic", &snapshot.agent.critic);
    if let Some(n) = &snapshot.agent.normalizer {
        out.push_str(&format!(
            "normalizer.mean {}\nnormalizer.var {}\nnormalizer.count {}\n",
            join(&n.mean),
            join(&n.var),
            n.count
        ));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        let (i, l) = self.inner.next()?;
        self.line = i + 1;
        Some(l)
    }

    fn err(&self, message: impl Into<String>) -> ParamsError {
        ParamsError::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, ParamsError> {
        let l = self.next().ok_or_else(|| self.err(format!("missing `{key}`")))?;
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key}`")))
    }

    fn floats(&self, raw: &str) -> Result<Vec<f64>, ParamsError> {
        raw.split_whitespace()
            .map(|v| v.parse().map_err(|_| self.err(format!("bad number {v:?}"))))
            .collect()
    }
}

fn read_network(lines: &mut Lines, prefix: &str, net: &mut HybridNetwork) -> Result<(), ParamsError> {
    let mut blocks = Vec::new();
    for info in net.block_info() {
        let header = lines.keyed("tensor")?;
        let mut parts = header.split_whitespace();
        let name = format!("{prefix}.{}", info.name);
        if parts.next() != Some(name.as_str()) {
            return Err(lines.err(format!("expected tensor {name}")));
        }
        let dims: Vec<usize> = parts
            .map(|d| d.parse().map_err(|_| lines.err(format!("bad dimension {d:?}"))))
            .collect::<Result<_, _>>()?;
        if dims != info.shape {
            return Err(lines.err(format!("{name} has shape {dims:?}, network expects {:?}", info.shape)));
        }
        let values = lines.next().ok_or_else(|| lines.err("missing tensor values"))?;
        let values = lines.floats(values)?;
        if values.len() != info.shape.iter().product::<usize>() {
            return Err(lines.err(format!("{name} has {} values", values.len())));
        }
        blocks.push(values);
    }
    net.load_blocks(&blocks).map_err(|e| lines.err(e.to_string()))
}

pub fn parse_params(text: &str) -> Result<ParamSnapshot, ParamsError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next() != Some(MAGIC) {
        return Err(lines.err(format!("expected `{MAGIC}`")));
    }
    let dna = lines.keyed("dna")?;
    let genome = parse_genome(dna).map_err(|e| lines.err(e.to_string()))?;
    let train_seed = lines.keyed("train_seed")?;
    let train_seed = train_seed.parse().map_err(|_| lines.err("bad train_seed"))?;
    let eval_seed = lines.keyed("eval_seed")?;
    let eval_seed = eval_seed.parse().map_err(|_| lines.err("bad eval_seed"))?;

    // architecture only; every parameter is overwritten below
    let mut agent =
        ActorCritic::build(&genome, &mut ChaCha8Rng::seed_from_u64(0)).map_err(|e| lines.err(e.to_string()))?;
    read_network(&mut lines, "actor", &mut agent.actor)?;
    read_network(&mut lines, "critic", &mut agent.critic)?;

    match lines.next() {
        None => {}
        Some(l) => {
            let mean = l
                .strip_prefix("normalizer.mean ")
                .ok_or_else(|| lines.err("unexpected trailing content"))?;
            let mean = lines.floats(mean)?;
            let var = lines.keyed("normalizer.var")?;
            let var = lines.floats(var)?;
            let count = lines.keyed("normalizer.count")?;
            let count = count.parse().map_err(|_| lines.err("bad count"))?;
            if mean.len() != agent.actor.input_dim() || var.len() != mean.len() {
                return Err(lines.err("normalizer width does not match the observation size"));
            }
            agent.normalizer = Some(ObservationNormalizer { mean, var, count });
        }
    }
    Ok(ParamSnapshot {
        genome,
        train_seed,
        eval_seed,
        agent,
    })
}

pub fn write_params(path: &Path, snapshot: &ParamSnapshot) -> Result<(), ParamsError> {
    std::fs::write(path, render_params(snapshot))?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<ParamSnapshot, ParamsError> {
    parse_params(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(dna: &str, normalize: bool) -> ParamSnapshot {
        let genome = parse_genome(dna).unwrap();
        let mut agent = ActorCritic::build(&genome, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        if normalize {
            let mut n = ObservationNormalizer::new(4);
            n.update(&[0.1, -0.2, 0.03, 1.0 / 3.0]);
            agent.normalizer = Some(n);
        }
        ParamSnapshot {
            genome,
            train_seed: 1,
            eval_seed: u64::MAX,
            agent,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for (dna, norm) in [("C 8, T, C 1", false), ("C 2, T, Q 2 F 3, C 9, R, C 1", true), ("Q 4 L 2, Q 3 F 1, C 1", false)] {
            let s = snapshot(dna, norm);
            assert_eq!(parse_params(&render_params(&s)).unwrap(), s, "{dna}");
        }
    }

    #[test]
    fn shape_mismatch_names_the_line() {
        let text = render_params(&snapshot("C 8, T, C 1", false)).replacen("tensor actor.stage0.weight 8 4", "tensor actor.stage0.weight 4 8", 1);
        let err = parse_params(&text).unwrap_err().to_string();
        assert!(err.starts_with("line 5:"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = render_params(&snapshot("C 8, T, C 1", false));
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(parse_params(&cut).is_err());
    }
}
