//! Deterministic synthetic property oracles.
//!
//! Builtin ids are resolved by pattern:
//!
//! | id              | value                                               |
//! |-----------------|-----------------------------------------------------|
//! | `frac_X`        | fraction of tokens equal to `X` (0.0 when empty)    |
//! | `neg_frac_X`    | `1 - frac_X`, the conflicting partner of `frac_X`   |
//! | `len_norm`      | `len / max_len`                                     |
//! | `hash_smooth`   | `0.5 + 0.5 sin(2π u)`, `u` a stable hash in `[0,1)` |
//!
//! Task files may add linear combinations (`Σ w_i * base_i + offset`) under
//! new ids, to put objectives on different numeric scales or make two of them
//! share a driver.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// 64-bit FNV-1a. Used wherever a hash must be identical across platforms
/// and toolchain versions.
pub fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    Frac(usize),
    NegFrac(usize),
    LenNorm,
    HashSmooth,
    Linear {
        terms: Vec<(OracleKind, f64)>,
        offset: f64,
    },
}

/// A pure function from a token sequence to a real value with a declared range.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    kind: OracleKind,
    lo: f64,
    hi: f64,
}

impl Oracle {
    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    /// Declared output range `(lo, hi)`.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn evaluate(&self, tokens: &[usize], vocab: &Vocabulary, max_len: usize) -> f64 {
        eval_kind(&self.kind, tokens, vocab, max_len)
    }
}

fn frac(tokens: &[usize], target: usize) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let n = tokens.iter().filter(|&&t| t == target).count();
    n as f64 / tokens.len() as f64
}

fn eval_kind(kind: &OracleKind, tokens: &[usize], vocab: &Vocabulary, max_len: usize) -> f64 {
    match kind {
        OracleKind::Frac(t) => frac(tokens, *t),
        OracleKind::NegFrac(t) => 1.0 - frac(tokens, *t),
        OracleKind::LenNorm => (tokens.len() as f64 / max_len as f64).min(1.0),
        OracleKind::HashSmooth => {
            let h = fnv1a(
                tokens
                    .iter()
                    .flat_map(|&t| vocab.symbol(t).bytes().chain(std::iter::once(0x1f))),
            );
            let u = (h >> 11) as f64 / (1u64 << 53) as f64;
            0.5 + 0.5 * (std::f64::consts::TAU * u).sin()
        }
        OracleKind::Linear { terms, offset } => {
            terms
                .iter()
                .map(|(k, w)| w * eval_kind(k, tokens, vocab, max_len))
                .sum::<f64>()
                + offset
        }
    }
}

/// Registry of oracles keyed by id. Read-only once the task set is loaded.
#[derive(Debug, Clone)]
pub struct OracleRegistry {
    vocab: Arc<Vocabulary>,
    max_len: usize,
    oracles: BTreeMap<String, Oracle>,
}

impl OracleRegistry {
    pub fn new(vocab: Arc<Vocabulary>, max_len: usize) -> Self {
        OracleRegistry {
            vocab,
            max_len,
            oracles: BTreeMap::new(),
        }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    fn parse_builtin(&self, id: &str) -> Result<Oracle> {
        let kind = if id == "len_norm" {
            OracleKind::LenNorm
        } else if id == "hash_smooth" {
            OracleKind::HashSmooth
        } else if let Some(sym) = id.strip_prefix("neg_frac_") {
            OracleKind::NegFrac(self.vocab.index_of(sym)?)
        } else if let Some(sym) = id.strip_prefix("frac_") {
            OracleKind::Frac(self.vocab.index_of(sym)?)
        } else {
            return Err(Error::UnknownOracle(id.to_string()));
        };
        Ok(Oracle {
            kind,
            lo: 0.0,
            hi: 1.0,
        })
    }

    /// Makes `id` available, parsing it as a builtin if needed.
    pub fn resolve(&mut self, id: &str) -> Result<&Oracle> {
        if !self.oracles.contains_key(id) {
            let o = self.parse_builtin(id)?;
            self.oracles.insert(id.to_string(), o);
        }
        Ok(&self.oracles[id])
    }

    /// Registers `scale * base + offset` under a new id.
    pub fn define_affine(&mut self, id: &str, base: &str, scale: f64, offset: f64) -> Result<()> {
        self.define_linear(id, &[(base, scale)], offset)
    }

    /// Registers `Σ weight * base + offset` under a new id. Bases may be
    /// builtins or previously defined ids.
    pub fn define_linear(&mut self, id: &str, terms: &[(&str, f64)], offset: f64) -> Result<()> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(format!("oracle `{id}` has no terms")));
        }
        if terms.iter().any(|(_, w)| !w.is_finite() || *w == 0.0) || !offset.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "oracle `{id}`: weights must be finite and nonzero, offset finite"
            )));
        }
        if self.oracles.contains_key(id) || self.parse_builtin(id).is_ok() {
            return Err(Error::InvalidArgument(format!("oracle `{id}` already defined")));
        }
        let (mut lo, mut hi) = (offset, offset);
        let mut kinds = Vec::with_capacity(terms.len());
        for &(base, w) in terms {
            let b = self.resolve(base)?.clone();
            let (a, c) = (w * b.lo, w * b.hi);
            lo += a.min(c);
            hi += a.max(c);
            kinds.push((b.kind, w));
        }
        let oracle = Oracle { kind: OracleKind::Linear { terms: kinds, offset }, lo, hi };
        self.oracles.insert(id.to_string(), oracle);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&Oracle> {
        self.oracles
            .get(id)
            .ok_or_else(|| Error::UnknownOracle(id.to_string()))
    }

    pub fn evaluate(&self, id: &str, tokens: &[usize]) -> Result<f64> {
        Ok(self.get(id)?.evaluate(tokens, &self.vocab, self.max_len))
    }
}
