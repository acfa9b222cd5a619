use std::cmp::Ordering;

use rand::Rng;

use super::Policy;
use crate::error::{Error, Result};
use crate::property::{Candidate, TaskSpec};
use crate::vocab::{Vocabulary, END};

/// A sampled candidate together with the per-action log-probabilities it
/// was drawn with (one entry per action, including a trailing `END`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCandidate {
    pub candidate: Candidate,
    pub logp: Vec<f64>,
}

/// Draws `g` candidates for `task` at temperature 1.
pub fn sample_group<R: Rng + ?Sized>(
    task: &TaskSpec,
    policy: &Policy,
    g: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<Vec<SampledCandidate>> {
    if g < 2 {
        return Err(Error::InvalidArgument(format!("group size must be >= 2, got {g}")));
    }
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be >= 1".into()));
    }
    if task.slot >= policy.slots() {
        return Err(Error::InvalidArgument(format!("task slot {} has no policy rows", task.slot)));
    }
    Ok((0..g).map(|_| sample_one(policy, task.slot, max_len, rng)).collect())
}

fn sample_one<R: Rng + ?Sized>(policy: &Policy, slot: usize, max_len: usize, rng: &mut R) -> SampledCandidate {
    let mut tokens = Vec::new();
    let mut logp = Vec::new();
    let mut ended = false;
    while tokens.len() < max_len {
        let row = policy.context_row(slot, &tokens);
        let lp = policy.log_probs(row);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = lp.len() - 1;
        for (a, l) in lp.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                pick = a;
                break;
            }
        }
        logp.push(lp[pick]);
        let tok = Vocabulary::action_to_token(pick);
        if tok == END {
            ended = true;
            break;
        }
        tokens.push(tok);
    }
    SampledCandidate { candidate: Candidate::new(tokens, ended, policy.vocab()), logp }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamHypothesis {
    pub candidate: Candidate,
    /// Summed log-probability of the decoding actions.
    pub logp: f64,
}

struct Partial {
    actions: Vec<usize>,
    score: f64,
}

fn rank(a: &Partial, b: &Partial) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.actions.cmp(&b.actions))
}

/// Length-bounded beam search. Every step expands all live hypotheses by
/// every action and keeps the best `width`; hypotheses that emit `END` or
/// reach `max_len` retire to the finished pool. Ties go to the
/// lexicographically smaller action sequence.
pub fn beam_search(policy: &Policy, task: &TaskSpec, width: usize, max_len: usize) -> Result<Vec<BeamHypothesis>> {
    if width == 0 {
        return Err(Error::InvalidArgument("beam width must be >= 1".into()));
    }
    if task.slot >= policy.slots() {
        return Err(Error::InvalidArgument(format!("task slot {} has no policy rows", task.slot)));
    }
    let slot = task.slot;
    let mut alive = vec![Partial { actions: Vec::new(), score: 0.0 }];
    let mut finished: Vec<Partial> = Vec::new();
    for _ in 0..max_len {
        let mut expansions = Vec::with_capacity(alive.len() * policy.cols());
        for p in &alive {
            let lp = policy.log_probs(policy.context_row(slot, &p.actions));
            for (a, l) in lp.iter().enumerate() {
                let mut actions = p.actions.clone();
                actions.push(Vocabulary::action_to_token(a));
                expansions.push(Partial { actions, score: p.score + l });
            }
        }
        expansions.sort_by(rank);
        expansions.truncate(width);
        alive.clear();
        for e in expansions {
            if e.actions.last() == Some(&END) || e.actions.len() == max_len {
                finished.push(e);
            } else {
                alive.push(e);
            }
        }
        if alive.is_empty() {
            break;
        }
    }
    finished.sort_by(rank);
    finished.truncate(width);
    Ok(finished
        .into_iter()
        .map(|p| {
            let ended = p.actions.last() == Some(&END);
            let mut tokens = p.actions;
            if ended {
                tokens.pop();
            }
            BeamHypothesis { candidate: Candidate::new(tokens, ended, policy.vocab()), logp: p.score }
        })
        .collect())
}
