//! Tabular autoregressive policy.
//!
//! The next-token distribution is a softmax over one row of a logit table.
//! The row is picked by the prompt slot and the previous one or two tokens
//! (padded with `BEGIN`), so log-probabilities, KL divergences and parameter
//! gradients are all exact and cheap.

mod checkpoint;
mod decode;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use decode::{beam_search, sample_group, BeamHypothesis, SampledCandidate};

use crate::error::{Error, Result};
use crate::vocab::{Vocabulary, BEGIN, END};

/// Number of previous tokens in a context signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ContextOrder {
    One,
    Two,
}

impl ContextOrder {
    pub fn len(self) -> usize {
        match self {
            ContextOrder::One => 1,
            ContextOrder::Two => 2,
        }
    }
}

impl TryFrom<u8> for ContextOrder {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ContextOrder::One),
            2 => Ok(ContextOrder::Two),
            o => Err(format!("context order must be 1 or 2, got {o}")),
        }
    }
}

impl From<ContextOrder> for u8 {
    fn from(o: ContextOrder) -> u8 {
        o.len() as u8
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|&x| (x - m).exp()).sum();
    let lz = m + z.ln();
    logits.iter().map(|&x| x - lz).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    vocab: Arc<Vocabulary>,
    order: ContextOrder,
    slots: usize,
    logits: Vec<f64>,
    version: u64,
}

/// Dense gradient with the same shape as a policy's logit table.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Gradient {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Gradient { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Policy {
    pub fn uniform(vocab: Arc<Vocabulary>, order: ContextOrder, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::InvalidArgument("policy needs at least one slot".into()));
        }
        let rows = slots * vocab.len().pow(order.len() as u32);
        let cols = vocab.action_count();
        Ok(Policy { vocab, order, slots, logits: vec![0.0; rows * cols], version: 0 })
    }

    /// A uniform table nudged towards reproducing each slot's source
    /// sequence: every (context, next-token) pair seen in a source gets
    /// `strength` added to its logit. This stands in for a supervised
    /// starting checkpoint that already emits plausible edits of its input.
    pub fn warm_start(
        vocab: Arc<Vocabulary>,
        order: ContextOrder,
        sources: &[(usize, &[usize])],
        strength: f64,
    ) -> Result<Self> {
        let slots = sources.iter().map(|(s, _)| s + 1).max().unwrap_or(1);
        let mut p = Self::uniform(vocab, order, slots)?;
        for &(slot, tokens) in sources {
            let mut actions = tokens.to_vec();
            actions.push(END);
            let rows = p.context_rows(slot, &actions)?;
            for (row, &tok) in rows.iter().zip(&actions) {
                let idx = row * p.cols() + Vocabulary::token_to_action(tok);
                p.logits[idx] += strength;
            }
        }
        Ok(p)
    }

    pub fn from_parts(
        vocab: Arc<Vocabulary>,
        order: ContextOrder,
        slots: usize,
        logits: Vec<f64>,
        version: u64,
    ) -> Result<Self> {
        let p = Self::uniform(vocab, order, slots)?;
        if logits.len() != p.logits.len() {
            return Err(Error::ShapeMismatch {
                expected: (p.rows(), p.cols()),
                actual: (logits.len() / p.cols().max(1), p.cols()),
            });
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("policy logits"));
        }
        Ok(Policy { logits, version, ..p })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn order(&self) -> ContextOrder {
        self.order
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rows(&self) -> usize {
        self.logits.len() / self.cols()
    }

    pub fn cols(&self) -> usize {
        self.vocab.action_count()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn row_logits(&self, row: usize) -> &[f64] {
        let c = self.cols();
        &self.logits[row * c..(row + 1) * c]
    }

    /// Direct write access for tests and hand-built policies. Bumps the version.
    pub fn set_logit(&mut self, row: usize, action: usize, value: f64) {
        let c = self.cols();
        self.logits[row * c + action] = value;
        self.version += 1;
    }

    /// Row index for decoding the next token after `prefix` in `slot`.
    pub fn context_row(&self, slot: usize, prefix: &[usize]) -> usize {
        let v = self.vocab.len();
        let k = self.order.len();
        let mut sig = 0usize;
        for i in 0..k {
            let tok = prefix.len().checked_sub(k - i).map_or(BEGIN, |j| prefix[j]);
            sig = sig * v + tok;
        }
        slot * v.pow(k as u32) + sig
    }

    /// Context rows visited while emitting `actions` (vocabulary indices,
    /// optionally ending in `END`).
    pub fn context_rows(&self, slot: usize, actions: &[usize]) -> Result<Vec<usize>> {
        if slot >= self.slots {
            return Err(Error::InvalidArgument(format!(
                "slot {slot} out of range ({} slots)",
                self.slots
            )));
        }
        for (i, &a) in actions.iter().enumerate() {
            if a == BEGIN || a >= self.vocab.len() {
                return Err(Error::UnknownToken(format!("index {a}")));
            }
            if a == END && i + 1 != actions.len() {
                return Err(Error::InvalidArgument("END before the last position".into()));
            }
        }
        Ok((0..actions.len()).map(|t| self.context_row(slot, &actions[..t])).collect())
    }

    pub fn probs(&self, row: usize) -> Vec<f64> {
        softmax(self.row_logits(row))
    }

    pub fn log_probs(&self, row: usize) -> Vec<f64> {
        log_softmax(self.row_logits(row))
    }

    /// Exact per-position conditional log-probabilities of `actions`.
    pub fn log_prob(&self, slot: usize, actions: &[usize]) -> Result<Vec<f64>> {
        let rows = self.context_rows(slot, actions)?;
        Ok(rows
            .iter()
            .zip(actions)
            .map(|(&r, &a)| self.log_probs(r)[Vocabulary::token_to_action(a)])
            .collect())
    }

    pub fn check_compatible(&self, other: &Policy) -> Result<()> {
        if self.vocab != other.vocab
            || self.order != other.order
            || self.slots != other.slots
        {
            return Err(Error::VocabularyMismatch);
        }
        Ok(())
    }

    /// Plain gradient-descent step `logits -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &Gradient, learning_rate: f64) -> Result<()> {
        if grad.rows != self.rows() || grad.cols != self.cols() || grad.values.len() != self.logits.len() {
            return Err(Error::ShapeMismatch {
                expected: (self.rows(), self.cols()),
                actual: (grad.rows, grad.cols),
            });
        }
        if grad.values.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        for (w, g) in self.logits.iter_mut().zip(&grad.values) {
            *w -= learning_rate * g;
        }
        self.version += 1;
        Ok(())
    }

    pub fn zero_gradient(&self) -> Gradient {
        Gradient::zeros(self.rows(), self.cols())
    }

    pub fn snapshot(&self, role: SnapshotRole) -> PolicySnapshot {
        PolicySnapshot { params: Arc::new(self.clone()), role }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotRole {
    Old,
    Reference,
}

/// Frozen copy of a policy.
#[derive(Debug, Clone)]
pub struct PolicySnapshot {
    params: Arc<Policy>,
    pub role: SnapshotRole,
}

impl std::ops::Deref for PolicySnapshot {
    type Target = Policy;
    fn deref(&self) -> &Policy {
        &self.params
    }
}
