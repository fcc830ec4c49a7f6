//! DNA encoding of hybrid layer stacks.
//!
//! A genome is an ordered list of layer genes written as comma separated
//! tokens, e.g. `C 50, T, C 13, R, C 2, T, Q 2 F 3, C 9, R, C 1`.
//!
//! * `C <width>` is a dense layer, followed by `T` (tanh) or `R` (ReLU) on
//!   every gene except the last one.
//! * `Q <qubits> <L|F> <reps>` is a variational circuit using the basic
//!   (`L`) or strong (`F`) entangling ansatz repeated `reps` times.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_LAYERS: usize = 10;
pub const MIN_NEURONS: usize = 2;
pub const MAX_NEURONS: usize = 64;
pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 10;
/// Shot count used by sampled bitstring readouts unless configured otherwise.
pub const DEFAULT_SHOTS: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn token(self) -> &'static str {
        match self {
            Activation::Tanh => "T",
            Activation::Relu => "R",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Activation::Tanh => Activation::Relu,
            Activation::Relu => Activation::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entangler {
    /// Single-angle RX layer followed by a CNOT ring.
    Basic,
    /// General rotations followed by a CNOT ring whose range grows with the repetition.
    Strong,
}

impl Entangler {
    pub fn token(self) -> &'static str {
        match self {
            Entangler::Basic => "L",
            Entangler::Strong => "F",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Entangler::Basic => Entangler::Strong,
            Entangler::Strong => Entangler::Basic,
        }
    }

    /// Number of trainable angles per qubit per repetition.
    pub fn angles_per_qubit(self) -> usize {
        match self {
            Entangler::Basic => 1,
            Entangler::Strong => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerGene {
    Classical {
        width: usize,
        activation: Option<Activation>,
    },
    Quantum {
        qubits: usize,
        entangler: Entangler,
        reps: usize,
    },
}

impl LayerGene {
    pub fn is_quantum(&self) -> bool {
        matches!(self, LayerGene::Quantum { .. })
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, LayerGene::Classical { .. })
    }
}

impl fmt::Display for LayerGene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerGene::Classical { width, activation } => {
                write!(f, "C {width}")?;
                if let Some(act) = activation {
                    write!(f, ", {}", act.token())?;
                }
                Ok(())
            }
            LayerGene::Quantum {
                qubits,
                entangler,
                reps,
            } => write!(f, "Q {qubits} {} {reps}", entangler.token()),
        }
    }
}

/// An ordered DNA sequence of layer genes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    pub genes: Vec<LayerGene>,
}

impl Genome {
    pub fn new(genes: Vec<LayerGene>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn quantum_layer_count(&self) -> usize {
        self.genes.iter().filter(|g| g.is_quantum()).count()
    }

    pub fn classical_layer_count(&self) -> usize {
        self.genes.iter().filter(|g| g.is_classical()).count()
    }

    /// Sum of classical widths plus qubit counts.
    pub fn total_units(&self) -> usize {
        self.genes
            .iter()
            .map(|g| match *g {
                LayerGene::Classical { width, .. } => width,
                LayerGene::Quantum { qubits, .. } => qubits,
            })
            .sum()
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, gene) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{gene}")?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_genome(s)
    }
}

impl Serialize for Genome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_genome(self))
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_genome(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty genome")]
    EmptyGenome,
    #[error("unknown token `{token}` at index {index}")]
    UnknownToken { index: usize, token: String },
    #[error("missing {what} after token {index}")]
    MissingWidth { index: usize, what: &'static str },
    #[error("value `{token}` at index {index} is out of range")]
    OutOfRangeValue { index: usize, token: String },
}

/// Parses a DNA string. Tokens may be separated by commas and/or whitespace,
/// tokens are case-insensitive, and the stray comma in `C, 1` is accepted.
pub fn parse_genome(text: &str) -> Result<Genome, ParseError> {
    let tokens: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(ParseError::EmptyGenome);
    }

    let mut genes = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let head = tokens[i];
        match head.to_ascii_uppercase().as_str() {
            "C" => {
                let width = parse_count(&tokens, i + 1, i, "width", 1, MAX_NEURONS)?;
                i += 2;
                let activation = match tokens.get(i).map(|t| t.to_ascii_uppercase()) {
                    Some(t) if t == "T" => Some(Activation::Tanh),
                    Some(t) if t == "R" => Some(Activation::Relu),
                    _ => None,
                };
                if activation.is_some() {
                    i += 1;
                }
                genes.push(LayerGene::Classical { width, activation });
            }
            "Q" => {
                let qubits = parse_count(&tokens, i + 1, i, "qubit count", 1, MAX_QUBITS)?;
                let entangler = match tokens.get(i + 2).map(|t| t.to_ascii_uppercase()) {
                    Some(t) if t == "L" => Entangler::Basic,
                    Some(t) if t == "F" => Entangler::Strong,
                    Some(_) => {
                        return Err(ParseError::UnknownToken {
                            index: i + 2,
                            token: tokens[i + 2].into(),
                        })
                    }
                    None => {
                        return Err(ParseError::MissingWidth {
                            index: i + 1,
                            what: "entangler",
                        })
                    }
                };
                let reps = parse_count(&tokens, i + 3, i + 2, "repetitions", 1, usize::MAX)?;
                genes.push(LayerGene::Quantum {
                    qubits,
                    entangler,
                    reps,
                });
                i += 4;
            }
            _ => {
                return Err(ParseError::UnknownToken {
                    index: i,
                    token: head.into(),
                })
            }
        }
    }
    Ok(Genome { genes })
}

fn parse_count(
    tokens: &[&str],
    at: usize,
    after: usize,
    what: &'static str,
    min: usize,
    max: usize,
) -> Result<usize, ParseError> {
    let token = tokens
        .get(at)
        .ok_or(ParseError::MissingWidth { index: after, what })?;
    if !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::MissingWidth { index: after, what });
    }
    match token.parse::<usize>() {
        Ok(v) if (min..=max).contains(&v) => Ok(v),
        _ => Err(ParseError::OutOfRangeValue {
            index: at,
            token: (*token).into(),
        }),
    }
}

/// Canonical DNA text; the dedup key for search history.
pub fn serialize_genome(g: &Genome) -> String {
    format!("{g}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    EmptyGenome,
    TooManyLayers { count: usize },
    NeuronsBelowMin { index: usize, width: usize },
    NeuronsAboveMax { index: usize, width: usize },
    QubitsBelowMin { index: usize, qubits: usize },
    QubitsAboveMax { index: usize, qubits: usize },
    RepsBelowMin { index: usize },
    MissingActivation { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::EmptyGenome => write!(f, "genome has no layers"),
            Violation::TooManyLayers { count } => {
                write!(f, "{count} layers exceeds the maximum of {MAX_LAYERS}")
            }
            Violation::NeuronsBelowMin { index, width } => {
                write!(f, "layer {index}: {width} neurons is below the minimum of {MIN_NEURONS}")
            }
            Violation::NeuronsAboveMax { index, width } => {
                write!(f, "layer {index}: {width} neurons exceeds the maximum of {MAX_NEURONS}")
            }
            Violation::QubitsBelowMin { index, qubits } => {
                write!(f, "layer {index}: {qubits} qubits is below the minimum of {MIN_QUBITS}")
            }
            Violation::QubitsAboveMax { index, qubits } => {
                write!(f, "layer {index}: {qubits} qubits exceeds the maximum of {MAX_QUBITS}")
            }
            Violation::RepsBelowMin { index } => write!(f, "layer {index}: zero repetitions"),
            Violation::MissingActivation { index } => {
                write!(f, "layer {index}: inner classical layer needs an activation")
            }
        }
    }
}

/// Lists every constraint violation. An empty result means the genome is valid.
pub fn validate(g: &Genome) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.genes.is_empty() {
        out.push(Violation::EmptyGenome);
        return out;
    }
    if g.genes.len() > MAX_LAYERS {
        out.push(Violation::TooManyLayers {
            count: g.genes.len(),
        });
    }
    let last = g.genes.len() - 1;
    for (index, gene) in g.genes.iter().enumerate() {
        match *gene {
            LayerGene::Classical { width, activation } => {
                // stored DNAs end in a width-1 gene; it is replaced by the head
                let min = if index == last { 1 } else { MIN_NEURONS };
                if width < min {
                    out.push(Violation::NeuronsBelowMin { index, width });
                }
                if width > MAX_NEURONS {
                    out.push(Violation::NeuronsAboveMax { index, width });
                }
                // a final activation is tolerated and dropped at plan resolution
                if index != last && activation.is_none() {
                    out.push(Violation::MissingActivation { index });
                }
            }
            LayerGene::Quantum { qubits, reps, .. } => {
                if qubits < MIN_QUBITS {
                    out.push(Violation::QubitsBelowMin { index, qubits });
                }
                if qubits > MAX_QUBITS {
                    out.push(Violation::QubitsAboveMax { index, qubits });
                }
                if reps < 1 {
                    out.push(Violation::RepsBelowMin { index });
                }
            }
        }
    }
    out
}

/// Sampling mode of a bitstring readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shots {
    /// Exact outcome probabilities.
    Analytic,
    /// Empirical frequencies over this many samples.
    Sampled(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReadoutMode {
    /// `<Z>` of qubits `0..measured`.
    Expectation { measured: usize },
    /// Probabilities of all `2^n` basis states.
    Bitstring { shots: Shots },
}

impl ReadoutMode {
    pub fn output_width(&self, qubits: usize) -> usize {
        match *self {
            ReadoutMode::Expectation { measured } => measured,
            ReadoutMode::Bitstring { .. } => 1 << qubits,
        }
    }

    pub fn with_shots(self, shots: Shots) -> Self {
        match self {
            ReadoutMode::Bitstring { .. } => ReadoutMode::Bitstring { shots },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub gene: LayerGene,
    pub in_width: usize,
    pub out_width: usize,
    pub readout: Option<ReadoutMode>,
}

/// Per-layer widths and readouts of a genome instantiated for one network head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkPlan {
    pub stages: Vec<Stage>,
    pub input_dim: usize,
    pub head_width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("genome is invalid: {0}")]
    Invalid(Violation),
    #[error("stage {index}: quantum layer with {qubits} qubits receives {in_width} inputs")]
    AdjacencyUnsatisfiable {
        index: usize,
        qubits: usize,
        in_width: usize,
    },
    #[error("stage {index}: {measured} measured qubits exceeds the {qubits} available")]
    MeasuredExceedsQubits {
        index: usize,
        qubits: usize,
        measured: usize,
    },
    #[error("input and head widths must be positive")]
    ZeroWidth,
}

/// Resolves stage widths for a network with `input_dim` inputs and
/// `head_width` outputs.
///
/// The last classical gene's width is replaced by `head_width` and its
/// activation dropped. A genome ending in a quantum gene gets a linear head
/// appended after the bitstring readout.
pub fn resolve_plan(g: &Genome, input_dim: usize, head_width: usize) -> Result<NetworkPlan, PlanError> {
    if input_dim == 0 || head_width == 0 {
        return Err(PlanError::ZeroWidth);
    }
    if let Some(v) = validate(g).into_iter().next() {
        return Err(PlanError::Invalid(v));
    }

    let mut stages = Vec::with_capacity(g.genes.len() + 1);
    let mut in_width = input_dim;
    let last = g.genes.len() - 1;
    for (index, gene) in g.genes.iter().enumerate() {
        let stage = match *gene {
            LayerGene::Classical { width, activation } => {
                if index == last {
                    Stage {
                        gene: LayerGene::Classical {
                            width: head_width,
                            activation: None,
                        },
                        in_width,
                        out_width: head_width,
                        readout: None,
                    }
                } else {
                    Stage {
                        gene: LayerGene::Classical { width, activation },
                        in_width,
                        out_width: width,
                        readout: None,
                    }
                }
            }
            LayerGene::Quantum { qubits, .. } => {
                if in_width != qubits {
                    return Err(PlanError::AdjacencyUnsatisfiable {
                        index,
                        qubits,
                        in_width,
                    });
                }
                let readout = match g.genes.get(index + 1) {
                    Some(LayerGene::Quantum { qubits: next, .. }) => {
                        if *next > qubits {
                            return Err(PlanError::MeasuredExceedsQubits {
                                index,
                                qubits,
                                measured: *next,
                            });
                        }
                        ReadoutMode::Expectation { measured: *next }
                    }
                    _ => ReadoutMode::Bitstring {
                        shots: Shots::Analytic,
                    },
                };
                Stage {
                    gene: *gene,
                    in_width,
                    out_width: readout.output_width(qubits),
                    readout: Some(readout),
                }
            }
        };
        in_width = stage.out_width;
        stages.push(stage);
    }

    if g.genes[last].is_quantum() {
        stages.push(Stage {
            gene: LayerGene::Classical {
                width: head_width,
                activation: None,
            },
            in_width,
            out_width: head_width,
            readout: None,
        });
    }

    Ok(NetworkPlan {
        stages,
        input_dim,
        head_width,
    })
}
