//! Exhaustive search over every short output, for checking the decoder.
//!
//! Constraint satisfaction is decided here by scanning token sequences
//! directly, without the constraint state machine, so that agreement between
//! the oracle and the decoder is a genuine cross-check.

use std::cmp::Ordering;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::request::normalize;
use crate::scorer::Scorer;
use crate::vocab::Vocabulary;
use crate::TokenId;

/// Largest `|V_T|^N` the oracle agrees to enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best satisfying output, BOS first and EOS last.
    pub best_tokens: Option<Vec<TokenId>>,
    /// `-inf` when nothing satisfies the constraints.
    pub best_normalized_score: f64,
    pub best_raw_score: f64,
    /// EOS-terminated sequences enumerated.
    pub num_sequences_scanned: u64,
}

/// Counts non-overlapping occurrences of `phrase` in `seq`, scanning left to right.
pub fn count_occurrences(seq: &[TokenId], phrase: &[TokenId]) -> usize {
    if phrase.is_empty() || phrase.len() > seq.len() {
        return 0;
    }
    let mut n = 0;
    let mut i = 0;
    while i + phrase.len() <= seq.len() {
        if seq[i..i + phrase.len()] == *phrase {
            n += 1;
            i += phrase.len();
        } else {
            i += 1;
        }
    }
    n
}

/// Whether `generated` (the output without BOS and EOS) contains every phrase
/// contiguously, a phrase listed `m` times occurring `m` times without
/// overlap, and starts with the anchored phrase if there is one.
pub fn satisfies(generated: &[TokenId], set: &ConstraintSet) -> bool {
    let phrases = set.phrases();
    if let Some(a) = set.anchored() {
        if !generated.starts_with(&phrases[a]) {
            return false;
        }
    }
    phrases.iter().enumerate().all(|(i, p)| {
        // Only count each distinct phrase once, at its first listing.
        if phrases[..i].contains(p) {
            return true;
        }
        let wanted = phrases.iter().filter(|q| *q == p).count();
        count_occurrences(generated, p) >= wanted
    })
}

fn strip_ends<'a>(tokens: &'a [TokenId], vocab: &Vocabulary) -> &'a [TokenId] {
    let mut s = tokens;
    if s.first() == Some(&vocab.bos()) {
        s = &s[1..];
    }
    if s.last() == Some(&vocab.eos()) {
        s = &s[..s.len() - 1];
    }
    s
}

/// [`satisfies`] on a full output (BOS and EOS are stripped first).
pub fn output_satisfies(tokens: &[TokenId], vocab: &Vocabulary, set: &ConstraintSet) -> bool {
    satisfies(strip_ends(tokens, vocab), set)
}

/// Highest normalized score among all EOS-terminated outputs of at most
/// `max_length` generated tokens that satisfy `set`.
///
/// Ties go to the shorter output, then the lexicographically smaller one.
/// Outputs with probability zero are never selected.
pub fn exhaustive_best<S: Scorer + ?Sized>(
    scorer: &S,
    vocab: &Vocabulary,
    set: &ConstraintSet,
    max_length: usize,
) -> Result<OracleResult> {
    let vt = vocab.target_size() as u128;
    let size = u32::try_from(max_length)
        .ok()
        .and_then(|n| vt.checked_pow(n))
        .unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::SearchTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    if scorer.vocab_size() != vocab.len() {
        return Err(Error::Config(format!(
            "scorer vocabulary size {} does not match vocabulary size {}",
            scorer.vocab_size(),
            vocab.len()
        )));
    }

    let mut search = Search {
        scorer,
        vocab,
        set,
        max_length,
        prefix: vec![vocab.bos()],
        best: None,
        scanned: 0,
    };
    search.expand(0.0)?;
    Ok(match search.best {
        Some((tokens, raw)) => OracleResult {
            best_normalized_score: normalize(raw, tokens.len() - 1),
            best_raw_score: raw,
            best_tokens: Some(tokens),
            num_sequences_scanned: search.scanned,
        },
        None => OracleResult {
            best_tokens: None,
            best_normalized_score: f64::NEG_INFINITY,
            best_raw_score: f64::NEG_INFINITY,
            num_sequences_scanned: search.scanned,
        },
    })
}

struct Search<'a, S: ?Sized> {
    scorer: &'a S,
    vocab: &'a Vocabulary,
    set: &'a ConstraintSet,
    max_length: usize,
    prefix: Vec<TokenId>,
    best: Option<(Vec<TokenId>, f64)>,
    scanned: u64,
}

impl<S: Scorer + ?Sized> Search<'_, S> {
    fn expand(&mut self, raw: f64) -> Result<()> {
        let row = self.scorer.step(&[&self.prefix], None)?.row(0).to_vec();
        let eos = self.vocab.eos();
        let generated = self.prefix.len() - 1;
        for (tok, &lp) in row.iter().enumerate() {
            let tok = tok as TokenId;
            if tok == self.vocab.bos() {
                continue;
            }
            let score = raw + lp;
            if tok == eos {
                self.scanned += 1;
                if score > f64::NEG_INFINITY && satisfies(&self.prefix[1..], self.set) {
                    self.offer(score);
                }
            } else if generated + 1 < self.max_length {
                self.prefix.push(tok);
                self.expand(score)?;
                self.prefix.pop();
            }
        }
        Ok(())
    }

    fn offer(&mut self, raw: f64) {
        let len = self.prefix.len();
        let norm = normalize(raw, len);
        let better = match &self.best {
            None => true,
            Some((tokens, braw)) => {
                let bnorm = normalize(*braw, tokens.len() - 1);
                match norm.total_cmp(&bnorm) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => match (len + 1).cmp(&tokens.len()) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => self.prefix[..] < tokens[..len],
                    },
                }
            }
        };
        if better {
            let mut tokens = self.prefix.clone();
            tokens.push(self.vocab.eos());
            self.best = Some((tokens, raw));
        }
    }
}
