use std::ops::Index;

use crate::constraints::ConstraintState;
use crate::request::normalize;
use crate::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Token history, BOS first.
    pub tokens: Vec<TokenId>,
    /// Cumulative log-probability of `tokens[1..]`.
    pub raw_score: f64,
    pub cstate: ConstraintState,
    /// Step at which EOS was generated.
    pub finished_at: Option<usize>,
}

impl Hypothesis {
    pub fn initial(bos: TokenId, cstate: ConstraintState) -> Self {
        Self {
            tokens: vec![bos],
            raw_score: 0.0,
            cstate,
            finished_at: None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.finished_at.is_some()
    }

    pub fn bank(&self) -> usize {
        self.cstate.num_met()
    }

    pub fn generated_len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn normalized_score(&self) -> f64 {
        normalize(self.raw_score, self.generated_len())
    }
}

/// The hypotheses alive at one step, ordered by bank then score (both
/// descending). Row `i` of a step's score matrix extends the `i`-th
/// unfinished hypothesis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Beam {
    hyps: Vec<Hypothesis>,
}

impl Beam {
    pub fn new(hyps: Vec<Hypothesis>) -> Self {
        Self { hyps }
    }

    pub fn initial(bos: TokenId, cstate: ConstraintState) -> Self {
        Self::new(vec![Hypothesis::initial(bos, cstate)])
    }

    pub fn len(&self) -> usize {
        self.hyps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyps.is_empty()
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hyps
    }

    pub fn into_hypotheses(self) -> Vec<Hypothesis> {
        self.hyps
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Hypothesis> {
        self.hyps.iter()
    }

    /// Beam indices of the hypotheses that still need scoring.
    pub fn active_rows(&self) -> Vec<usize> {
        (0..self.hyps.len()).filter(|&i| !self.hyps[i].is_finished()).collect()
    }

    pub fn histories(&self) -> Vec<&[TokenId]> {
        self.hyps
            .iter()
            .filter(|h| !h.is_finished())
            .map(|h| h.tokens.as_slice())
            .collect()
    }

    pub fn all_finished(&self) -> bool {
        self.hyps.iter().all(Hypothesis::is_finished)
    }

    pub fn retain(&mut self, f: impl FnMut(&Hypothesis) -> bool) {
        self.hyps.retain(f);
    }
}

impl Index<usize> for Beam {
    type Output = Hypothesis;

    fn index(&self, i: usize) -> &Hypothesis {
        &self.hyps[i]
    }
}

impl<'a> IntoIterator for &'a Beam {
    type Item = &'a Hypothesis;
    type IntoIter = std::slice::Iter<'a, Hypothesis>;

    fn into_iter(self) -> Self::IntoIter {
        self.hyps.iter()
    }
}
