//! History file: one candidate per line, tab-separated `key=value` fields.
//!
//! ```text
//! iteration=3	dna=C 12, T, C 1	score=21.5	episodes=20,23	parent=C 9, T, C 1	mutation=grow_classical	reused=false	train_seed=..	eval_seed=..	timesteps=500	failure=-	curve=500:21.5:..
//! ```
//!
//! `-` stands for an absent value. Curve points are `;`-separated and each
//! holds `timestep:return:policy_loss:value_loss:entropy:clip_fraction`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use qnas_core::dna::parse_genome;
use qnas_core::evolution::Candidate;
use qnas_core::ppo::CurvePoint;

const NONE: &str = "-";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistoryError {
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("history is empty")]
    Empty,
    #[error("cannot read history: {0}")]
    Io(String),
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn render_curve(curve: &[CurvePoint]) -> String {
    if curve.is_empty() {
        return NONE.into();
    }
    curve
        .iter()
        .map(|p| {
            let ret = p.episodic_return.map_or(NONE.to_string(), |r| r.to_string());
            format!(
                "{}:{}:{}:{}:{}:{}",
                p.timestep, ret, p.policy_loss, p.value_loss, p.entropy, p.clip_fraction
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One history line, without the trailing newline.
pub fn render_record(c: &Candidate) -> String {
    let mut line = String::new();
    let opt = |v: Option<String>| v.map_or(NONE.to_string(), |s| clean(&s));
    write!(
        line,
        "iteration={}\tdna={}\tscore={}\tepisodes={}\tparent={}\tmutation={}\treused={}\ttrain_seed={}\teval_seed={}\ttimesteps={}\tfailure={}\tcurve={}",
        c.birth,
        c.dna,
        c.score,
        join_floats(&c.episode_scores),
        opt(c.parent.clone()),
        opt(c.mutation.map(|m| m.name().to_string())),
        c.reused,
        c.train_seed,
        c.eval_seed,
        c.train_timesteps,
        opt(c.failure.clone()),
        render_curve(&c.curve),
    )
    .expect("writing to a String");
    line
}

fn field<T: FromStr>(fields: &BTreeMap<&str, &str>, key: &str) -> Result<T, String> {
    let raw = fields.get(key).ok_or_else(|| format!("missing field `{key}`"))?;
    raw.parse().map_err(|_| format!("bad value for `{key}`: {raw:?}"))
}

fn optional<'a>(fields: &BTreeMap<&str, &'a str>, key: &str) -> Result<Option<&'a str>, String> {
    let raw = fields.get(key).ok_or_else(|| format!("missing field `{key}`"))?;
    Ok((*raw != NONE && !raw.is_empty()).then_some(*raw))
}

fn parse_floats(raw: &str) -> Result<Vec<f64>, String> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|v| v.parse().map_err(|_| format!("bad number {v:?}")))
        .collect()
}

fn parse_curve(raw: &str) -> Result<Vec<CurvePoint>, String> {
    if raw == NONE || raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(';')
        .map(|point| {
            let parts: Vec<&str> = point.split(':').collect();
            if parts.len() != 6 {
                return Err(format!("bad curve point {point:?}"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad curve value {s:?}"));
            Ok(CurvePoint {
                timestep: parts[0].parse().map_err(|_| format!("bad curve timestep {:?}", parts[0]))?,
                episodic_return: if parts[1] == NONE { None } else { Some(num(parts[1])?) },
                policy_loss: num(parts[2])?,
                value_loss: num(parts[3])?,
                entropy: num(parts[4])?,
                clip_fraction: num(parts[5])?,
            })
        })
        .collect()
}

/// Parses one line; `expected_iteration` is its position in the file.
pub fn parse_record(line: &str, expected_iteration: usize) -> Result<Candidate, String> {
    let mut fields = BTreeMap::new();
    for part in line.split('\t') {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("field without `=`: {part:?}"))?;
        if fields.insert(k, v).is_some() {
            return Err(format!("duplicate field `{k}`"));
        }
    }

    let birth: usize = field(&fields, "iteration")?;
    if birth != expected_iteration {
        return Err(format!("iteration {birth} out of order (expected {expected_iteration})"));
    }
    let dna: &str = fields.get("dna").ok_or("missing field `dna`")?;
    let genome = parse_genome(dna).map_err(|e| format!("bad dna: {e}"))?;
    let score: f64 = field(&fields, "score")?;
    let episode_scores = parse_floats(fields.get("episodes").ok_or("missing field `episodes`")?)?;
    if !episode_scores.is_empty() {
        let mean = episode_scores.iter().sum::<f64>() / episode_scores.len() as f64;
        if (mean - score).abs() > 1e-9 * score.abs().max(1.0) {
            return Err(format!("score {score} is not the mean of its episodes ({mean})"));
        }
    }
    let mutation = optional(&fields, "mutation")?
        .map(|m| m.parse().map_err(|_| format!("unknown mutation {m:?}")))
        .transpose()?;

    Ok(Candidate {
        dna: genome.to_string(),
        genome,
        score,
        episode_scores,
        birth,
        parent: optional(&fields, "parent")?.map(str::to_string),
        mutation,
        train_seed: field(&fields, "train_seed")?,
        eval_seed: field(&fields, "eval_seed")?,
        reused: field(&fields, "reused")?,
        failure: optional(&fields, "failure")?.map(str::to_string),
        train_timesteps: field(&fields, "timesteps")?,
        curve: parse_curve(fields.get("curve").ok_or("missing field `curve`")?)?,
    })
}

/// Parses a whole history file; blank lines are skipped.
pub fn parse_history(text: &str) -> Result<Vec<Candidate>, HistoryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c = parse_record(line, out.len()).map_err(|message| HistoryError::BadRecord { line: i + 1, message })?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(HistoryError::Empty);
    }
    Ok(out)
}

pub fn read_history(path: &Path) -> Result<Vec<Candidate>, HistoryError> {
    let text = std::fs::read_to_string(path).map_err(|e| HistoryError::Io(format!("{}: {e}", path.display())))?;
    parse_history(&text)
}

pub fn render_history(entries: &[Candidate]) -> String {
    let mut out = String::new();
    for c in entries {
        out.push_str(&render_record(c));
        out.push('\n');
    }
    out
}
