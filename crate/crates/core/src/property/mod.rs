//! Properties, tasks and candidates.
//!
//! A task fixes a source sequence and a list of properties. Each property is
//! classified against its threshold at load time: properties whose source
//! value is worse than the threshold must be improved by at least their
//! margin, the rest must stay within `±margin` of the source value.

mod fingerprint;
mod oracle;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use fingerprint::{fingerprint, tanimoto, Fingerprint, DEFAULT_FP_WIDTH};
pub use oracle::{fnv1a, Oracle, OracleKind, OracleRegistry};

use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, END};

/// Which way is better for a property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }
}

impl TryFrom<i8> for Direction {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Direction::Maximize),
            -1 => Ok(Direction::Minimize),
            other => Err(format!("direction must be +1 or -1, got {other}")),
        }
    }
}

impl From<Direction> for i8 {
    fn from(d: Direction) -> i8 {
        match d {
            Direction::Maximize => 1,
            Direction::Minimize => -1,
        }
    }
}

/// One named objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub name: String,
    pub direction: Direction,
    /// Improvement / stability margin.
    pub delta: f64,
    /// Near-optimal threshold.
    pub theta: f64,
    #[serde(rename = "oracle")]
    pub oracle_id: String,
}

impl PropertySpec {
    pub fn new(name: &str, direction: Direction, delta: f64, theta: f64, oracle_id: &str) -> Result<Self> {
        let spec = PropertySpec {
            name: name.to_string(),
            direction,
            delta,
            theta,
            oracle_id: oracle_id.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "property `{}`: delta must be positive, got {}",
                self.name, self.delta
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "property `{}`: theta must be finite",
                self.name
            )));
        }
        Ok(())
    }

    /// True when `value` meets the near-optimal threshold in this property's direction.
    pub fn satisfies_threshold(&self, value: f64) -> bool {
        let s = self.direction.sign();
        s * value >= s * self.theta
    }
}

/// Index sets into a property list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub improve: Vec<usize>,
    pub stabilize: Vec<usize>,
}

/// Splits properties into those that need improvement (strictly worse than
/// threshold) and those that must be held (better than or equal to it).
pub fn partition_properties(values: &[f64], specs: &[PropertySpec]) -> Result<Partition> {
    if values.len() != specs.len() {
        return Err(Error::LengthMismatch {
            expected: specs.len(),
            actual: values.len(),
        });
    }
    let mut p = Partition::default();
    for (i, (v, spec)) in values.iter().zip(specs).enumerate() {
        if spec.satisfies_threshold(*v) {
            p.stabilize.push(i);
        } else {
            p.improve.push(i);
        }
    }
    Ok(p)
}

/// A generated (or source) token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Vocabulary indices, sentinels excluded.
    pub tokens: Vec<usize>,
    /// Whether decoding emitted `END` (as opposed to hitting the length cap).
    pub ended: bool,
    pub valid: bool,
    pub props: Option<Vec<f64>>,
    pub fp: Option<Fingerprint>,
}

impl Candidate {
    pub fn new(tokens: Vec<usize>, ended: bool, vocab: &Vocabulary) -> Self {
        let valid = vocab.is_well_formed(&tokens);
        Candidate {
            tokens,
            ended,
            valid,
            props: None,
            fp: None,
        }
    }

    pub fn parse(vocab: &Vocabulary, text: &str) -> Result<Self> {
        Ok(Self::new(vocab.parse(text)?, true, vocab))
    }

    /// The decoding actions as vocabulary indices, including the trailing
    /// `END` when one was emitted.
    pub fn actions(&self) -> Vec<usize> {
        let mut a = self.tokens.clone();
        if self.ended {
            a.push(END);
        }
        a
    }

    pub fn props(&self) -> Result<&[f64]> {
        self.props.as_deref().ok_or(Error::MissingProperties)
    }
}

/// Role of one property within a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PropertyRole {
    /// Must move to at least `target = source + direction·delta`.
    Improve { target: f64 },
    /// Must stay inside `[lower, upper] = source ± delta`.
    Stabilize { lower: f64, upper: f64 },
}

/// A source sequence plus its property partition and derived targets/bands.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub name: String,
    /// Policy slot this task's prompt maps to.
    pub slot: usize,
    pub source: Candidate,
    pub properties: Vec<PropertySpec>,
    pub roles: Vec<PropertyRole>,
}

impl TaskSpec {
    /// Evaluates the source, partitions its properties and derives
    /// targets and bands. Every oracle id must already resolve in `registry`.
    pub fn new(
        name: &str,
        slot: usize,
        source_tokens: Vec<usize>,
        properties: Vec<PropertySpec>,
        registry: &OracleRegistry,
        fp_width: usize,
    ) -> Result<Self> {
        if properties.is_empty() {
            return Err(Error::Empty("task properties"));
        }
        for p in &properties {
            p.validate()?;
            registry.get(&p.oracle_id)?;
        }
        let vocab = registry.vocab();
        if source_tokens.len() > registry.max_len() {
            return Err(Error::InvalidArgument(format!(
                "task `{name}`: source length {} exceeds max_len {}",
                source_tokens.len(),
                registry.max_len()
            )));
        }
        let mut source = Candidate::new(source_tokens, true, vocab);
        if !source.valid {
            return Err(Error::InvalidArgument(format!(
                "task `{name}`: source `{}` is not well formed",
                vocab.render(&source.tokens)
            )));
        }
        let values = properties
            .iter()
            .map(|p| registry.evaluate(&p.oracle_id, &source.tokens))
            .collect::<Result<Vec<_>>>()?;
        let partition = partition_properties(&values, &properties)?;
        let mut roles = vec![PropertyRole::Improve { target: 0.0 }; properties.len()];
        for &i in &partition.improve {
            let p = &properties[i];
            roles[i] = PropertyRole::Improve {
                target: values[i] + p.direction.sign() * p.delta,
            };
        }
        for &i in &partition.stabilize {
            let d = properties[i].delta;
            roles[i] = PropertyRole::Stabilize {
                lower: values[i] - d,
                upper: values[i] + d,
            };
        }
        source.fp = Some(fingerprint(&source.tokens, vocab, fp_width)?);
        source.props = Some(values);
        Ok(TaskSpec {
            name: name.to_string(),
            slot,
            source,
            properties,
            roles,
        })
    }

    pub fn source_values(&self) -> &[f64] {
        self.source.props.as_deref().expect("source evaluated at construction")
    }

    pub fn fp_width(&self) -> usize {
        self.source.fp.as_ref().map_or(DEFAULT_FP_WIDTH, Fingerprint::width)
    }

    pub fn partition(&self) -> Partition {
        let mut p = Partition::default();
        for (i, r) in self.roles.iter().enumerate() {
            match r {
                PropertyRole::Improve { .. } => p.improve.push(i),
                PropertyRole::Stabilize { .. } => p.stabilize.push(i),
            }
        }
        p
    }

    pub fn improve_set(&self) -> Vec<&str> {
        self.partition()
            .improve
            .into_iter()
            .map(|i| self.properties[i].name.as_str())
            .collect()
    }

    pub fn stabilize_set(&self) -> Vec<&str> {
        self.partition()
            .stabilize
            .into_iter()
            .map(|i| self.properties[i].name.as_str())
            .collect()
    }

    pub fn targets(&self) -> BTreeMap<&str, f64> {
        self.roles
            .iter()
            .zip(&self.properties)
            .filter_map(|(r, p)| match r {
                PropertyRole::Improve { target } => Some((p.name.as_str(), *target)),
                _ => None,
            })
            .collect()
    }

    pub fn bands(&self) -> BTreeMap<&str, (f64, f64)> {
        self.roles
            .iter()
            .zip(&self.properties)
            .filter_map(|(r, p)| match r {
                PropertyRole::Stabilize { lower, upper } => Some((p.name.as_str(), (*lower, *upper))),
                _ => None,
            })
            .collect()
    }
}

/// Evaluates every task property on a valid candidate and caches the vector
/// on it. The vector is ordered as `task.properties`.
pub fn eval_properties(
    cand: &mut Candidate,
    task: &TaskSpec,
    registry: &OracleRegistry,
) -> Result<Vec<f64>> {
    if !cand.valid {
        return Err(Error::InvalidCandidate);
    }
    let values = task
        .properties
        .iter()
        .map(|p| registry.evaluate(&p.oracle_id, &cand.tokens))
        .collect::<Result<Vec<_>>>()?;
    cand.props = Some(values.clone());
    Ok(values)
}

/// Evaluates properties and the fingerprint of a candidate when it is valid;
/// invalid candidates are left untouched.
pub fn annotate(cand: &mut Candidate, task: &TaskSpec, registry: &OracleRegistry) -> Result<()> {
    if cand.valid {
        eval_properties(cand, task, registry)?;
        cand.fp = Some(fingerprint(&cand.tokens, registry.vocab(), task.fp_width())?);
    }
    Ok(())
}

/// Convenience holder for a shared task list.
pub type TaskSet = Vec<Arc<TaskSpec>>;
