//! k-best extraction: plain top-k, dynamic beam allocation, and grid beam
//! search's fixed per-bank beams.
//!
//! Ranking ties resolve by lower beam row, then lower token id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::allocation::{adjust_allocation, allocate_banks, BankAllocation};
use super::hypothesis::{Beam, Hypothesis};
use crate::constraints::{ConstraintSet, ConstraintState};
use crate::scorer::ScoreMatrix;
use crate::TokenId;

/// A possible member of the next beam: `beam[row]` extended with `token`.
///
/// Finished hypotheses are carried forward unchanged as self-candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub row: usize,
    pub token: TokenId,
    pub new_cstate: ConstraintState,
    pub score: f64,
    pub carried: bool,
}

impl Candidate {
    pub fn bank(&self) -> usize {
        self.new_cstate.num_met()
    }
}

/// Best-first order on (score, row, token).
fn rank(a_score: f64, a_row: usize, a_tok: TokenId, b_score: f64, b_row: usize, b_tok: TokenId) -> Ordering {
    b_score
        .total_cmp(&a_score)
        .then(a_row.cmp(&b_row))
        .then(a_tok.cmp(&b_tok))
}

fn rank_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    rank(a.score, a.row, a.token, b.score, b.row, b.token)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    score: f64,
    row: usize,
    token: TokenId,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    /// Worse cells compare greater, so a max-heap keeps the worst on top.
    fn cmp(&self, other: &Self) -> Ordering {
        rank(self.score, self.row, self.token, other.score, other.row, other.token)
    }
}

/// Score matrix rows paired with the beam rows they extend.
struct Rows<'a> {
    beam: &'a Beam,
    scores: &'a ScoreMatrix,
    active: Vec<usize>,
}

impl<'a> Rows<'a> {
    fn new(beam: &'a Beam, scores: &'a ScoreMatrix) -> Self {
        let active = beam.active_rows();
        assert_eq!(
            active.len(),
            scores.rows(),
            "score matrix must have one row per unfinished hypothesis"
        );
        Self { beam, scores, active }
    }

    /// (beam row, hypothesis, log-probability row) for every unfinished hypothesis.
    fn iter(&self) -> impl Iterator<Item = (usize, &'a Hypothesis, &'a [f64])> + '_ {
        self.active
            .iter()
            .enumerate()
            .map(move |(i, &r)| (r, &self.beam[r], self.scores.row(i)))
    }

    fn carried(&self) -> impl Iterator<Item = (usize, &'a Hypothesis)> + '_ {
        self.beam.iter().enumerate().filter(|(_, h)| h.is_finished())
    }
}

/// Global top-`k` finite cells, skipping EOS on rows where `eos_ok` is false.
fn top_k_cells(rows: &Rows<'_>, k: usize, eos: TokenId, eos_ok: impl Fn(&Hypothesis) -> bool) -> Vec<Cell> {
    if k == 0 {
        return Vec::new();
    }
    let mut heap: BinaryHeap<Cell> = BinaryHeap::with_capacity(k + 1);
    for (row, hyp, logp) in rows.iter() {
        let allow_eos = eos_ok(hyp);
        for (tok, &lp) in logp.iter().enumerate() {
            if lp == f64::NEG_INFINITY || (tok as TokenId == eos && !allow_eos) {
                continue;
            }
            let cell = Cell {
                score: hyp.raw_score + lp,
                row,
                token: tok as TokenId,
            };
            if heap.len() < k {
                heap.push(cell);
            } else if let Some(worst) = heap.peek() {
                if cell.score >= worst.score && cell < *worst {
                    heap.pop();
                    heap.push(cell);
                }
            }
        }
    }
    heap.into_sorted_vec()
}

fn carried_candidate(row: usize, hyp: &Hypothesis) -> Candidate {
    Candidate {
        row,
        token: *hyp.tokens.last().expect("hypothesis has BOS"),
        new_cstate: hyp.cstate.clone(),
        score: hyp.raw_score,
        carried: true,
    }
}

/// Plain beam search: the `k` best extensions overall, EOS always allowed.
/// Constraint progress is still tracked so the result can report it.
pub fn kbest_standard(beam: &Beam, scores: &ScoreMatrix, set: &ConstraintSet, k: usize, eos: TokenId) -> Selection {
    let rows = Rows::new(beam, scores);
    let mut cands: Vec<Candidate> = top_k_cells(&rows, k, eos, |_| true)
        .into_iter()
        .map(|c| Candidate {
            row: c.row,
            token: c.token,
            new_cstate: set.advance(&beam[c.row].cstate, c.token),
            score: c.score,
            carried: false,
        })
        .collect();
    let n_candidates = cands.len() + rows.carried().count();
    cands.extend(rows.carried().map(|(r, h)| carried_candidate(r, h)));
    cands.sort_by(rank_candidates);
    cands.truncate(k);
    Selection {
        candidates: cands,
        n_candidates,
        allocation: None,
    }
}

/// Candidate set for constrained k-best extraction: the union of the global
/// top-`k` cells, every hypothesis extended by each token that makes
/// constraint progress, and every hypothesis's single best token. EOS is only
/// considered for hypotheses that have met all constraints. Finished
/// hypotheses contribute themselves unchanged.
pub fn generate_candidates(beam: &Beam, scores: &ScoreMatrix, set: &ConstraintSet, k: usize, eos: TokenId) -> Vec<Candidate> {
    let rows = Rows::new(beam, scores);
    let eos_ok = |h: &Hypothesis| set.eos_allowed(&h.cstate);

    let mut cells = top_k_cells(&rows, k, eos, eos_ok);
    for (row, hyp, logp) in rows.iter() {
        let allow_eos = eos_ok(hyp);
        for tok in set.next_needed_tokens(&hyp.cstate) {
            let lp = logp[tok as usize];
            if lp != f64::NEG_INFINITY {
                cells.push(Cell {
                    score: hyp.raw_score + lp,
                    row,
                    token: tok,
                });
            }
        }
        let mut best: Option<(TokenId, f64)> = None;
        for (tok, &lp) in logp.iter().enumerate() {
            if lp == f64::NEG_INFINITY || (tok as TokenId == eos && !allow_eos) {
                continue;
            }
            if best.is_none_or(|(_, b)| lp > b) {
                best = Some((tok as TokenId, lp));
            }
        }
        if let Some((tok, lp)) = best {
            cells.push(Cell {
                score: hyp.raw_score + lp,
                row,
                token: tok,
            });
        }
    }

    cells.sort_unstable_by_key(|c| (c.row, c.token));
    cells.dedup_by_key(|c| (c.row, c.token));

    let mut out: Vec<Candidate> = cells
        .into_iter()
        .map(|c| Candidate {
            row: c.row,
            token: c.token,
            new_cstate: set.advance(&beam[c.row].cstate, c.token),
            score: c.score,
            carried: false,
        })
        .collect();
    out.extend(rows.carried().map(|(r, h)| carried_candidate(r, h)));
    out
}

/// Candidates chosen for the next beam, in beam order.
#[derive(Debug, Clone)]
pub struct Selection {
    pub candidates: Vec<Candidate>,
    /// Size of the candidate set the selection was drawn from.
    pub n_candidates: usize,
    /// Slots per bank actually used to fill the beam (constrained search only).
    pub allocation: Option<BankAllocation>,
}

impl Selection {
    /// Builds the next beam. Hypotheses that emit EOS are stamped with `step`.
    pub fn materialize(&self, beam: &Beam, step: usize, eos: TokenId) -> Beam {
        Beam::new(
            self.candidates
                .iter()
                .map(|c| {
                    let parent = &beam[c.row];
                    if c.carried {
                        return parent.clone();
                    }
                    let mut tokens = Vec::with_capacity(parent.tokens.len() + 1);
                    tokens.extend_from_slice(&parent.tokens);
                    tokens.push(c.token);
                    Hypothesis {
                        tokens,
                        raw_score: c.score,
                        cstate: c.new_cstate.clone(),
                        finished_at: (c.token == eos).then_some(step),
                    }
                })
                .collect(),
        )
    }
}

/// Sorts candidates by (bank desc, rank) and counts them per bank.
fn group_by_bank(mut cands: Vec<Candidate>, num_banks: usize) -> (Vec<Candidate>, Vec<usize>) {
    cands.sort_by(|a, b| b.bank().cmp(&a.bank()).then_with(|| rank_candidates(a, b)));
    let mut counts = vec![0; num_banks];
    for c in &cands {
        counts[c.bank()] += 1;
    }
    (cands, counts)
}

/// Takes the best `slots[i]` candidates of each bank `i`, keeping bank order.
fn fill(grouped: Vec<Candidate>, slots: &[usize]) -> Vec<Candidate> {
    let mut taken = vec![0; slots.len()];
    grouped
        .into_iter()
        .filter(|c| {
            let b = c.bank();
            let keep = taken[b] < slots[b];
            taken[b] += keep as usize;
            keep
        })
        .collect()
}

/// Dynamic beam allocation: one beam of `k` divided across the `C+1` banks.
pub fn kbest_dba(beam: &Beam, scores: &ScoreMatrix, set: &ConstraintSet, k: usize, eos: TokenId) -> Selection {
    let cands = generate_candidates(beam, scores, set, k, eos);
    let n_candidates = cands.len();
    let (grouped, counts) = group_by_bank(cands, set.total_tokens() + 1);
    let alloc = adjust_allocation(&allocate_banks(k, set.total_tokens()), &counts);
    Selection {
        candidates: fill(grouped, alloc.slots()),
        n_candidates,
        allocation: Some(alloc),
    }
}

/// Grid beam search: a beam of `b·(C+1)` with exactly `b` slots per bank and
/// no reallocation. Banks without enough candidates leave slots unused.
pub fn kbest_gbs(beam: &Beam, scores: &ScoreMatrix, set: &ConstraintSet, base_beam: usize, eos: TokenId) -> Selection {
    let banks = set.total_tokens() + 1;
    let cands = generate_candidates(beam, scores, set, base_beam * banks, eos);
    let n_candidates = cands.len();
    let (grouped, _) = group_by_bank(cands, banks);
    let alloc = BankAllocation::new(vec![base_beam; banks]);
    Selection {
        candidates: fill(grouped, alloc.slots()),
        n_candidates,
        allocation: Some(alloc),
    }
}
