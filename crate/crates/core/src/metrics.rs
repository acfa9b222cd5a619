//! Success rates, relative improvement, similarity, and beam candidate
//! selection.
//!
//! A pair succeeds (SOR) when every improve-property moved at least its
//! margin in the wanted direction and every stabilize-property stayed within
//! its margin of the source. Strict success (SSOR) additionally needs every
//! property to meet its threshold; by default it is also gated on SOR so that
//! `ssor <= sor` always holds. Both boundary inequalities are inclusive.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::property::{tanimoto, Candidate, PropertyRole, TaskSpec};

/// Denominator floor for relative improvement when the source value is 0.
pub const RI_DENOM_FLOOR: f64 = 1e-8;

/// A generated candidate and the task whose source it was derived from.
/// Valid generated candidates must carry property values and a fingerprint.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub task: Arc<TaskSpec>,
    pub generated: Candidate,
}

impl EvalPair {
    pub fn new(task: Arc<TaskSpec>, generated: Candidate) -> Self {
        EvalPair { task, generated }
    }

    pub fn source(&self) -> &Candidate {
        &self.task.source
    }
}

fn values<'a>(task: &TaskSpec, cand: &'a Candidate) -> Result<Option<&'a [f64]>> {
    if !cand.valid {
        return Ok(None);
    }
    let v = cand.props()?;
    if v.len() != task.properties.len() {
        return Err(Error::LengthMismatch { expected: task.properties.len(), actual: v.len() });
    }
    Ok(Some(v))
}

/// SOR indicator for one candidate. Invalid candidates fail.
pub fn sor_success(task: &TaskSpec, cand: &Candidate) -> Result<bool> {
    let Some(gen) = values(task, cand)? else { return Ok(false) };
    let src = task.source_values();
    Ok(task.roles.iter().zip(&task.properties).enumerate().all(|(i, (role, p))| match role {
        PropertyRole::Improve { .. } => p.direction.sign() * (gen[i] - src[i]) >= p.delta,
        PropertyRole::Stabilize { .. } => (gen[i] - src[i]).abs() <= p.delta,
    }))
}

/// Strict indicator: every property meets its threshold, and when `gated`
/// the SOR conditions hold too.
pub fn strict_success(task: &TaskSpec, cand: &Candidate, gated: bool) -> Result<bool> {
    let Some(gen) = values(task, cand)? else { return Ok(false) };
    let thresholds = task.properties.iter().zip(gen).all(|(p, &v)| p.satisfies_threshold(v));
    Ok(thresholds && (!gated || sor_success(task, cand)?))
}

/// Relative improvement of one candidate over its source and the number of
/// terms that needed the guarded denominator. Invalid candidates and tasks
/// without improve-properties score 0.
pub fn relative_improvement(task: &TaskSpec, cand: &Candidate) -> Result<(f64, usize)> {
    let Some(gen) = values(task, cand)? else { return Ok((0.0, 0)) };
    let src = task.source_values();
    let improve = task.partition().improve;
    if improve.is_empty() {
        return Ok((0.0, 0));
    }
    let mut guarded = 0;
    let mut total = 0.0;
    for &i in &improve {
        let denom = if src[i].abs() < RI_DENOM_FLOOR {
            guarded += 1;
            RI_DENOM_FLOOR
        } else {
            src[i].abs()
        };
        total += task.properties[i].direction.sign() * (gen[i] - src[i]) / denom;
    }
    Ok((total / improve.len() as f64, guarded))
}

fn fraction(pairs: &[EvalPair], f: impl Fn(&EvalPair) -> Result<bool>) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation pairs"));
    }
    let mut hits = 0usize;
    for p in pairs {
        if f(p)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len() as f64)
}

pub fn sor(pairs: &[EvalPair]) -> Result<f64> {
    fraction(pairs, |p| sor_success(&p.task, &p.generated))
}

pub fn ssor(pairs: &[EvalPair], gated: bool) -> Result<f64> {
    fraction(pairs, |p| strict_success(&p.task, &p.generated, gated))
}

pub fn ri(pairs: &[EvalPair]) -> Result<f64> {
    Ok(ri_with_guards(pairs)?.0)
}

fn ri_with_guards(pairs: &[EvalPair]) -> Result<(f64, usize)> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation pairs"));
    }
    let mut total = 0.0;
    let mut guarded = 0;
    for p in pairs {
        let (r, g) = relative_improvement(&p.task, &p.generated)?;
        total += r;
        guarded += g;
    }
    Ok((total / pairs.len() as f64, guarded))
}

/// Mean Tanimoto similarity to the source over valid generated candidates.
pub fn similarity_avg(pairs: &[EvalPair]) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for p in pairs.iter().filter(|p| p.generated.valid) {
        let a = p.generated.fp.as_ref().ok_or(Error::MissingProperties)?;
        let b = p.source().fp.as_ref().ok_or(Error::MissingProperties)?;
        total += tanimoto(a, b)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("valid generated candidates"));
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sor: f64,
    pub ssor: f64,
    /// Mean similarity over valid candidates; 0 when none is valid.
    pub sim: f64,
    pub ri: f64,
    pub n: usize,
    /// Relative-improvement terms that hit a zero source value.
    #[serde(skip)]
    pub ri_guarded_terms: usize,
}

impl MetricsReport {
    pub fn compute(pairs: &[EvalPair], ssor_gated: bool) -> Result<Self> {
        let (ri, guarded) = ri_with_guards(pairs)?;
        let sim = match similarity_avg(pairs) {
            Ok(s) => s,
            Err(Error::Empty(_)) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(MetricsReport {
            sor: sor(pairs)?,
            ssor: ssor(pairs, ssor_gated)?,
            sim,
            ri,
            n: pairs.len(),
            ri_guarded_terms: guarded,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Position in the beam.
    pub index: usize,
    pub candidate: Candidate,
    /// Whether the pick came from the SOR-compliant subset.
    pub sor_compliant: bool,
}

/// Picks the max-RI SOR-compliant beam entry, falling back to the max-RI
/// valid entry, then to the top-ranked entry when nothing is valid. Ties go
/// to the better-ranked entry.
pub fn select_candidate(beam: &[Candidate], task: &TaskSpec) -> Result<Selection> {
    if beam.is_empty() {
        return Err(Error::Empty("beam"));
    }
    let mut best_sor: Option<(usize, f64)> = None;
    let mut best_any: Option<(usize, f64)> = None;
    for (i, c) in beam.iter().enumerate() {
        if !c.valid {
            continue;
        }
        let (r, _) = relative_improvement(task, c)?;
        if best_any.is_none_or(|(_, b)| r > b) {
            best_any = Some((i, r));
        }
        if sor_success(task, c)? && best_sor.is_none_or(|(_, b)| r > b) {
            best_sor = Some((i, r));
        }
    }
    let (index, sor_compliant) = match (best_sor, best_any) {
        (Some((i, _)), _) => (i, true),
        (None, Some((i, _))) => (i, false),
        (None, None) => (0, false),
    };
    Ok(Selection { index, candidate: beam[index].clone(), sor_compliant })
}
