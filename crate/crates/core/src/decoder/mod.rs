//! The beam-search engine.
//!
//! One decode call runs the step loop: score the unfinished hypotheses, pick
//! the next beam with the configured k-best rule, move newly finished
//! hypotheses into the finished pool, prune, and test the stop conditions.
//! Finished hypotheses keep their beam slot (scored no further) so that "every
//! slot is finished" is a meaningful stop test.

mod allocation;
mod finalize;
mod hypothesis;
mod kbest;

use std::fmt;
use std::str::FromStr;

pub use allocation::{adjust_allocation, allocate_banks, BankAllocation};
pub use finalize::{compare_finished, prune_beam, select_output};
pub use hypothesis::{Beam, Hypothesis};
pub use kbest::{generate_candidates, kbest_dba, kbest_gbs, kbest_standard, Candidate, Selection};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::request::{DecodeRequest, DecodeResult};
use crate::scorer::Scorer;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Algorithm {
    /// Plain beam search. Constraints are tracked but not enforced.
    Beam,
    /// Dynamic beam allocation.
    #[default]
    Dba,
    /// Grid beam search: `b` slots for each of the `C+1` banks.
    Gbs,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Beam => "beam",
            Self::Dba => "dba",
            Self::Gbs => "gbs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" => Ok(Self::Beam),
            "dba" => Ok(Self::Dba),
            "gbs" => Ok(Self::Gbs),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected beam, dba or gbs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    pub algorithm: Algorithm,
    /// `k`; ignored by grid beam search.
    pub beam_size: usize,
    /// `N`, the maximum number of generated tokens (EOS included).
    pub max_length: usize,
    /// Raw log-probability gap to the best finished hypothesis beyond which
    /// hypotheses are dropped. 0 disables pruning.
    pub prune_threshold: f64,
    /// Stop as soon as any hypothesis finishes.
    pub early_stopping: bool,
    /// `b`, grid beam search only.
    pub gbs_base_beam: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dba,
            beam_size: 10,
            max_length: 50,
            prune_threshold: 20.0,
            early_stopping: false,
            gbs_base_beam: 10,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if self.max_length == 0 {
            return Err(Error::Config("max length must be at least 1".into()));
        }
        if self.prune_threshold.is_nan() || self.prune_threshold < 0.0 {
            return Err(Error::Config(format!(
                "prune threshold must be >= 0, got {}",
                self.prune_threshold
            )));
        }
        if self.gbs_base_beam == 0 {
            return Err(Error::Config("GBS base beam must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of beam slots used for a sentence with `c` constraint tokens.
    pub fn effective_beam(&self, c: usize) -> usize {
        match self.algorithm {
            Algorithm::Gbs => self.gbs_base_beam * (c + 1),
            _ => self.beam_size,
        }
    }
}

/// What happened at one decoding step, for tracing and invariant checks.
#[derive(Debug)]
pub struct StepTrace<'a> {
    pub step: usize,
    /// Candidate set size considered by the k-best rule.
    pub n_candidates: usize,
    pub allocation: Option<&'a BankAllocation>,
    /// The beam chosen at this step, before pruning.
    pub beam: &'a Beam,
}

/// Runs one decode.
pub fn decode<S: Scorer + ?Sized>(
    scorer: &S,
    vocab: &Vocabulary,
    set: &ConstraintSet,
    config: &DecodeConfig,
    source: Option<&str>,
) -> Result<DecodeResult> {
    decode_observed(scorer, vocab, set, config, source, &mut |_| {})
}

/// [`decode`], calling `observer` after every step.
pub fn decode_observed<S: Scorer + ?Sized>(
    scorer: &S,
    vocab: &Vocabulary,
    set: &ConstraintSet,
    config: &DecodeConfig,
    source: Option<&str>,
    observer: &mut dyn FnMut(&StepTrace<'_>),
) -> Result<DecodeResult> {
    config.validate()?;
    if scorer.vocab_size() != vocab.len() {
        return Err(Error::Config(format!(
            "scorer vocabulary size {} does not match vocabulary size {}",
            scorer.vocab_size(),
            vocab.len()
        )));
    }
    for (i, phrase) in set.phrases().iter().enumerate() {
        for &t in phrase {
            if t as usize >= vocab.len() {
                return Err(Error::TokenOutOfRange { id: t, size: vocab.len() });
            }
            if t == vocab.bos() || t == vocab.eos() {
                return Err(Error::InvalidConstraint(format!(
                    "constraint {i} contains a reserved token"
                )));
            }
        }
    }

    let eos = vocab.eos();
    let c = set.total_tokens();
    let mut beam = Beam::initial(vocab.bos(), set.initial_state());
    let mut pool: Vec<Hypothesis> = Vec::new();
    let mut steps = 0;

    for t in 1..=config.max_length {
        steps = t;
        let scores = scorer.step(&beam.histories(), source)?;
        let sel = match config.algorithm {
            Algorithm::Beam => kbest_standard(&beam, &scores, set, config.beam_size, eos),
            Algorithm::Dba => kbest_dba(&beam, &scores, set, config.beam_size, eos),
            Algorithm::Gbs => kbest_gbs(&beam, &scores, set, config.gbs_base_beam, eos),
        };
        let next = sel.materialize(&beam, t, eos);
        observer(&StepTrace {
            step: t,
            n_candidates: sel.n_candidates,
            allocation: sel.allocation.as_ref(),
            beam: &next,
        });
        if next.is_empty() {
            break;
        }
        pool.extend(next.iter().filter(|h| h.finished_at == Some(t)).cloned());
        beam = next;
        prune_beam(&mut beam, &pool, config.prune_threshold);
        if beam.all_finished() || (config.early_stopping && !pool.is_empty()) {
            break;
        }
    }

    let best = select_output(&pool, &beam, set)?;
    debug_assert!(best.bank() <= c);
    Ok(DecodeResult {
        id: String::new(),
        output_tokens: best.tokens.clone(),
        output_text: vocab.detokenize(&best.tokens)?,
        raw_score: best.raw_score,
        normalized_score: best.normalized_score(),
        constraints_met: set.eos_allowed(&best.cstate),
        steps_used: steps,
    })
}

/// A decoded request plus the constraint words that were not in the vocabulary.
#[derive(Debug, Clone)]
pub struct RequestOutcome {
    pub result: DecodeResult,
    pub unknown_tokens: Vec<String>,
}

/// Parses the request's constraints and decodes it. The request text is passed
/// to the scorer as the source sentence.
pub fn decode_request<S: Scorer + ?Sized>(
    scorer: &S,
    vocab: &Vocabulary,
    request: &DecodeRequest,
    config: &DecodeConfig,
) -> Result<RequestOutcome> {
    request.validate()?;
    let parsed = ConstraintSet::parse(&request.constraints, vocab)?;
    let mut result = decode(scorer, vocab, &parsed.set, config, request.text.as_deref())?;
    result.id = request.id.clone().unwrap_or_default();
    Ok(RequestOutcome {
        result,
        unknown_tokens: parsed.unknown,
    })
}
