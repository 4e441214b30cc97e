//! Per-sentence constraint sets and the per-hypothesis progress state machine.
//!
//! Constraints are counted by tokens: a set holding the word `x` and the
//! phrase `y z` has `C = 3`, and a hypothesis that has emitted `y` but not
//! yet `z` has met one of them. Progress through a phrase is strict: when a
//! hypothesis that is part-way through a phrase emits anything other than the
//! phrase's next token, the phrase is unwound back to zero.
//!
//! Transition rules, applied by [`ConstraintSet::advance`]:
//!
//! 1. If a phrase is in progress and the token is its next token, extend it.
//! 2. If a phrase is in progress and the token does not match, reset it to 0.
//! 3. Otherwise (or after a reset) start the lowest-index unstarted phrase whose
//!    first token is the token. A single-token phrase is completed immediately.
//!
//! A token advances at most one phrase. After a reset the same token may start
//! another phrase, or restart the reset one. There is no overlap (failure
//! function) recovery: `a a b` fed `a a a b` ends unmet.
//!
//! A phrase may be anchored to the start of the output (prefix decoding): it
//! can only be started by the first generated token, and takes priority there.

use std::fmt;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;
use crate::TokenId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    phrases: Vec<Vec<TokenId>>,
    total_tokens: usize,
    anchored: Option<usize>,
}

/// Raw constraint strings resolved against a vocabulary.
#[derive(Debug, Clone)]
pub struct ParsedConstraints {
    pub set: ConstraintSet,
    /// Surfaces that were not in the vocabulary and were mapped to UNK.
    pub unknown: Vec<String>,
}

impl ConstraintSet {
    pub fn new(phrases: Vec<Vec<TokenId>>) -> Result<Self> {
        Self::build(phrases, None)
    }

    pub fn empty() -> Self {
        Self {
            phrases: Vec::new(),
            total_tokens: 0,
            anchored: None,
        }
    }

    /// Like [`ConstraintSet::new`], with phrase `anchor` forced to start the output.
    pub fn with_anchor(phrases: Vec<Vec<TokenId>>, anchor: usize) -> Result<Self> {
        if anchor >= phrases.len() {
            return Err(Error::InvalidConstraint(format!(
                "anchor index {anchor} out of range for {} phrases",
                phrases.len()
            )));
        }
        Self::build(phrases, Some(anchor))
    }

    fn build(phrases: Vec<Vec<TokenId>>, anchored: Option<usize>) -> Result<Self> {
        if let Some(i) = phrases.iter().position(Vec::is_empty) {
            return Err(Error::InvalidConstraint(format!("constraint {i} has no tokens")));
        }
        if phrases.iter().any(|p| p.len() > u32::MAX as usize) {
            return Err(Error::InvalidConstraint("constraint too long".into()));
        }
        let total_tokens = phrases.iter().map(Vec::len).sum();
        Ok(Self {
            phrases,
            total_tokens,
            anchored,
        })
    }

    /// Tokenizes whitespace-separated constraint strings.
    ///
    /// A constraint whose first token is the BOS surface becomes the anchored
    /// prefix phrase (BOS itself is stripped and not counted). EOS, or BOS in
    /// any other position, is rejected.
    pub fn parse<S: AsRef<str>>(raw: &[S], vocab: &Vocabulary) -> Result<ParsedConstraints> {
        let mut phrases = Vec::with_capacity(raw.len());
        let mut anchored = None;
        let mut unknown = Vec::new();
        for (i, text) in raw.iter().enumerate() {
            let text = text.as_ref();
            let mut words: Vec<&str> = text.split_whitespace().collect();
            if words.is_empty() {
                return Err(Error::InvalidConstraint(format!("constraint {i} is empty")));
            }
            if vocab.get(words[0]) == Some(vocab.bos()) {
                if anchored.is_some() {
                    return Err(Error::InvalidConstraint(
                        "at most one constraint may start with BOS".into(),
                    ));
                }
                anchored = Some(i);
                words.remove(0);
                if words.is_empty() {
                    return Err(Error::InvalidConstraint(format!(
                        "constraint {i} has nothing after BOS"
                    )));
                }
            }
            let mut ids = Vec::with_capacity(words.len());
            for w in words {
                match vocab.get(w) {
                    Some(id) if id == vocab.bos() || id == vocab.eos() => {
                        return Err(Error::InvalidConstraint(format!(
                            "constraint {i} ({text:?}) contains reserved token {w:?}"
                        )));
                    }
                    Some(id) => ids.push(id),
                    None => {
                        unknown.push(w.to_string());
                        ids.push(vocab.unk());
                    }
                }
            }
            phrases.push(ids);
        }
        Ok(ParsedConstraints {
            set: Self::build(phrases, anchored)?,
            unknown,
        })
    }

    pub fn phrases(&self) -> &[Vec<TokenId>] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// `C`: total token count over all phrases.
    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn anchored(&self) -> Option<usize> {
        self.anchored
    }

    pub fn longest_phrase(&self) -> usize {
        self.phrases.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn initial_state(&self) -> ConstraintState {
        ConstraintState {
            met: vec![0; self.phrases.len()],
            in_progress: None,
            num_met: 0,
            at_start: true,
        }
    }

    /// Builds a state from explicit per-phrase prefix counts, as if at least
    /// one token had already been generated.
    pub fn state_from_prefixes(&self, met: &[usize]) -> Result<ConstraintState> {
        if met.len() != self.phrases.len() {
            return Err(Error::InvalidConstraint(format!(
                "expected {} prefix counts, got {}",
                self.phrases.len(),
                met.len()
            )));
        }
        let mut in_progress = None;
        for (i, (&m, p)) in met.iter().zip(&self.phrases).enumerate() {
            if m > p.len() {
                return Err(Error::InvalidConstraint(format!(
                    "prefix {m} exceeds length {} of phrase {i}",
                    p.len()
                )));
            }
            if m > 0 && m < p.len() {
                if in_progress.is_some() {
                    return Err(Error::InvalidConstraint(
                        "at most one phrase may be in progress".into(),
                    ));
                }
                in_progress = Some(i as u32);
            }
        }
        Ok(ConstraintState {
            met: met.iter().map(|&m| m as u32).collect(),
            in_progress,
            num_met: met.iter().sum(),
            at_start: false,
        })
    }

    fn startable(&self, state: &ConstraintState, phrase: usize) -> bool {
        state.met[phrase] == 0 && (self.anchored != Some(phrase) || state.at_start)
    }

    pub fn advance(&self, state: &ConstraintState, token: TokenId) -> ConstraintState {
        let mut next = state.clone();
        next.at_start = false;

        if let Some(p) = state.in_progress {
            let p = p as usize;
            let m = state.met[p] as usize;
            if self.phrases[p][m] == token {
                next.met[p] += 1;
                next.num_met += 1;
                if m + 1 == self.phrases[p].len() {
                    next.in_progress = None;
                }
                return next;
            }
            next.met[p] = 0;
            next.num_met -= m;
            next.in_progress = None;
        }

        let anchored_first = self
            .anchored
            .filter(|&a| state.at_start && self.phrases[a][0] == token);
        let start = anchored_first.or_else(|| {
            (0..self.phrases.len())
                .find(|&i| self.phrases[i][0] == token && self.startable(&next, i) && self.anchored != Some(i))
        });
        if let Some(i) = start {
            next.met[i] = 1;
            next.num_met += 1;
            if self.phrases[i].len() > 1 {
                next.in_progress = Some(i as u32);
            }
        }
        next
    }

    /// Tokens that make progress from `state`: the next token of the phrase in
    /// progress plus the first token of every startable phrase. Sorted, deduplicated.
    ///
    /// Empty when everything is met, and also when the only unmet phrase is an
    /// anchored prefix that can no longer start.
    pub fn next_needed_tokens(&self, state: &ConstraintState) -> Vec<TokenId> {
        let mut out = Vec::new();
        if let Some(p) = state.in_progress {
            let p = p as usize;
            out.push(self.phrases[p][state.met[p] as usize]);
        }
        for (i, phrase) in self.phrases.iter().enumerate() {
            if self.startable(state, i) {
                out.push(phrase[0]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn eos_allowed(&self, state: &ConstraintState) -> bool {
        state.num_met == self.total_tokens
    }

    /// Runs `tokens` through [`advance`](Self::advance) from the initial state.
    pub fn replay(&self, tokens: &[TokenId]) -> ConstraintState {
        tokens
            .iter()
            .fold(self.initial_state(), |s, &t| self.advance(&s, t))
    }
}

/// Progress of one hypothesis through a [`ConstraintSet`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConstraintState {
    met: Vec<u32>,
    in_progress: Option<u32>,
    num_met: usize,
    at_start: bool,
}

impl ConstraintState {
    /// Leading tokens of each phrase currently met.
    pub fn met_prefix(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.met.iter().map(|&m| m as usize)
    }

    pub fn met_prefix_vec(&self) -> Vec<usize> {
        self.met_prefix().collect()
    }

    pub fn in_progress(&self) -> Option<usize> {
        self.in_progress.map(|p| p as usize)
    }

    /// Bank index: met tokens, partial phrase progress included.
    pub fn num_met(&self) -> usize {
        self.num_met
    }
}

impl fmt::Debug for ConstraintState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "met={:?}", self.met)?;
        if let Some(p) = self.in_progress {
            write!(f, " open={p}")?;
        }
        if self.at_start {
            f.write_str(" start")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: TokenId = 3;
    const B: TokenId = 4;
    const C: TokenId = 5;
    const D: TokenId = 6;

    fn set(phrases: &[&[TokenId]]) -> ConstraintSet {
        ConstraintSet::new(phrases.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn build_counts_tokens() {
        assert_eq!(set(&[&[2], &[3, 4]]).total_tokens(), 3);
        assert_eq!(set(&[]).total_tokens(), 0);
        assert_eq!(set(&[&[2], &[2]]).total_tokens(), 2);
        assert!(matches!(
            ConstraintSet::new(vec![vec![2], vec![]]),
            Err(Error::InvalidConstraint(_))
        ));
    }

    #[test]
    fn duplicates_need_two_occurrences() {
        let s = set(&[&[B], &[B]]);
        let once = s.replay(&[B]);
        assert_eq!(once.met_prefix_vec(), vec![1, 0]);
        assert!(!s.eos_allowed(&once));
        let twice = s.advance(&once, B);
        assert_eq!(twice.met_prefix_vec(), vec![1, 1]);
        assert!(s.eos_allowed(&twice));
    }

    #[test]
    fn advance_starts_phrase() {
        let s = set(&[&[A, B]]);
        let st = s.advance(&s.initial_state(), A);
        assert_eq!(st.met_prefix_vec(), vec![1]);
        assert_eq!(st.in_progress(), Some(0));
        assert_eq!(st.num_met(), 1);
    }

    #[test]
    fn advance_unwinds_on_mismatch() {
        let s = set(&[&[A, B]]);
        let st = s.advance(&s.state_from_prefixes(&[1]).unwrap(), C);
        assert_eq!(st.met_prefix_vec(), vec![0]);
        assert_eq!(st.num_met(), 0);
        assert_eq!(st.in_progress(), None);
    }

    #[test]
    fn unwound_token_starts_another_phrase() {
        let s = set(&[&[A, B], &[C]]);
        let st = s.advance(&s.state_from_prefixes(&[1, 0]).unwrap(), C);
        assert_eq!(st.met_prefix_vec(), vec![0, 1]);
        assert_eq!(st.num_met(), 1);
    }

    #[test]
    fn unwound_token_restarts_same_phrase() {
        let s = set(&[&[A, B]]);
        let st = s.replay(&[A, A]);
        assert_eq!(st.met_prefix_vec(), vec![1]);
        assert_eq!(s.advance(&st, B).met_prefix_vec(), vec![2]);
    }

    #[test]
    fn no_overlap_recovery() {
        // Simple reset, not KMP: `a a b` is not recognized inside `a a a b`.
        let s = set(&[&[A, A, B]]);
        assert!(!s.eos_allowed(&s.replay(&[A, A, A, B])));
        assert!(s.eos_allowed(&s.replay(&[A, A, B])));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let s = set(&[&[C, D], &[C]]);
        let st = s.replay(&[C]);
        assert_eq!(st.met_prefix_vec(), vec![1, 0]);
        // Greedy choice: `c` then `x c d` never completes [c] because the
        // first `c` already went to phrase 0 and the second restarts it.
        let st = s.replay(&[C, A, C, D]);
        assert_eq!(st.met_prefix_vec(), vec![2, 0]);
        let st = s.replay(&[C, D, C]);
        assert_eq!(st.met_prefix_vec(), vec![2, 1]);
    }

    #[test]
    fn next_needed_examples() {
        let s = set(&[&[A, B], &[C]]);
        assert_eq!(s.next_needed_tokens(&s.initial_state()), vec![A, C]);
        let mid = s.state_from_prefixes(&[1, 0]).unwrap();
        assert_eq!(s.next_needed_tokens(&mid), vec![B, C]);
        // Choosing c from the mid-phrase state unwinds a b.
        assert_eq!(s.advance(&mid, C).met_prefix_vec(), vec![0, 1]);
        let done = s.state_from_prefixes(&[2, 1]).unwrap();
        assert!(s.next_needed_tokens(&done).is_empty());
    }

    #[test]
    fn eos_gating_examples() {
        let empty = set(&[]);
        assert!(empty.eos_allowed(&empty.initial_state()));
        let s = set(&[&[A, B]]);
        assert!(!s.eos_allowed(&s.state_from_prefixes(&[1]).unwrap()));
        let s = set(&[&[A], &[B]]);
        assert!(s.eos_allowed(&s.state_from_prefixes(&[1, 1]).unwrap()));
    }

    #[test]
    fn rejects_invalid_prefix_states() {
        let s = set(&[&[A, B], &[C, D]]);
        assert!(s.state_from_prefixes(&[1, 1]).is_err());
        assert!(s.state_from_prefixes(&[3, 0]).is_err());
        assert!(s.state_from_prefixes(&[0]).is_err());
    }

    #[test]
    fn anchored_phrase_only_starts_first() {
        let s = ConstraintSet::with_anchor(vec![vec![C], vec![A, B]], 1).unwrap();
        // Anchor wins the tie at the start even though it has a higher index.
        let st = s.replay(&[A]);
        assert_eq!(st.met_prefix_vec(), vec![0, 1]);
        assert!(s.eos_allowed(&s.replay(&[A, B, C])));
        // Not at the start: the anchor can never begin.
        let late = s.replay(&[C, A, B]);
        assert_eq!(late.met_prefix_vec(), vec![1, 0]);
        assert!(s.next_needed_tokens(&late).is_empty());
        assert!(!s.eos_allowed(&late));
        // Aborted anchor is dead.
        let aborted = s.replay(&[A, C, A, B]);
        assert_eq!(aborted.met_prefix_vec(), vec![1, 0]);
    }

    #[test]
    fn parse_strings() {
        let v = Vocabulary::with_words(["a", "b", "c"]).unwrap();
        let p = ConstraintSet::parse(&["a b", "zzz"], &v).unwrap();
        assert_eq!(p.set.phrases(), &[vec![3, 4], vec![v.unk()]]);
        assert_eq!(p.unknown, vec!["zzz"]);
        assert_eq!(p.set.total_tokens(), 3);

        let p = ConstraintSet::parse(&["c", "<s> a b"], &v).unwrap();
        assert_eq!(p.set.anchored(), Some(1));
        assert_eq!(p.set.phrases()[1], vec![3, 4]);
        assert_eq!(p.set.total_tokens(), 3);

        assert!(ConstraintSet::parse(&["<s>"], &v).is_err());
        assert!(ConstraintSet::parse(&["a </s>"], &v).is_err());
        assert!(ConstraintSet::parse(&["a <s>"], &v).is_err());
        assert!(ConstraintSet::parse(&["<s> a", "<s> b"], &v).is_err());
        assert!(ConstraintSet::parse(&[" "], &v).is_err());
    }

    fn phrase_strategy() -> impl Strategy<Value = Vec<Vec<TokenId>>> {
        proptest::collection::vec(proptest::collection::vec(3u32..7, 1..4), 0..4)
    }

    proptest! {
        #[test]
        fn num_met_bounded_and_step_changes_limited(
            phrases in phrase_strategy(),
            tokens in proptest::collection::vec(3u32..7, 0..20),
        ) {
            let s = ConstraintSet::new(phrases).unwrap();
            let longest = s.longest_phrase() as i64;
            let mut st = s.initial_state();
            for &t in &tokens {
                let next = s.advance(&st, t);
                prop_assert!(next.num_met() <= s.total_tokens());
                let delta = next.num_met() as i64 - st.num_met() as i64;
                prop_assert!(delta <= 1);
                prop_assert!(delta >= -(longest - 1).max(0));
                prop_assert_eq!(next.met_prefix().sum::<usize>(), next.num_met());
                let open: Vec<usize> = next
                    .met_prefix()
                    .zip(s.phrases())
                    .enumerate()
                    .filter(|(_, (m, p))| *m > 0 && *m < p.len())
                    .map(|(i, _)| i)
                    .collect();
                prop_assert!(open.len() <= 1);
                prop_assert_eq!(open.first().copied(), next.in_progress());
                // Purity.
                prop_assert_eq!(&s.advance(&st, t), &next);
                st = next;
            }
            if s.eos_allowed(&st) {
                for (m, p) in st.met_prefix().zip(s.phrases()) {
                    prop_assert_eq!(m, p.len());
                }
            }
        }

        /// Token-disjoint, repetition-free phrases laid out with filler between
        /// them are always recognized.
        #[test]
        fn disjoint_phrases_in_sequence_are_met(
            order in Just(vec![0usize, 1, 2]).prop_shuffle(),
            lens in proptest::collection::vec(1usize..4, 3),
            fill in proptest::collection::vec(0usize..3, 4),
        ) {
            // Tokens 10..19 for phrases, 30 as filler.
            let mut next_tok = 10;
            let phrases: Vec<Vec<TokenId>> = lens
                .iter()
                .map(|&l| (0..l).map(|_| { next_tok += 1; next_tok }).collect())
                .collect();
            let s = ConstraintSet::new(phrases.clone()).unwrap();
            let mut seq = vec![30; fill[0]];
            for (k, &i) in order.iter().enumerate() {
                seq.extend(&phrases[i]);
                seq.extend(std::iter::repeat_n(30, fill[k + 1]));
            }
            prop_assert!(s.eos_allowed(&s.replay(&seq)));
        }
    }
}
