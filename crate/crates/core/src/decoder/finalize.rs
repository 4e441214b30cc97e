use std::cmp::Ordering;

use super::hypothesis::{Beam, Hypothesis};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};

/// Drops every beam hypothesis whose raw score falls more than `threshold`
/// below the best finished raw score. A zero threshold disables pruning.
pub fn prune_beam(beam: &mut Beam, pool: &[Hypothesis], threshold: f64) {
    if threshold <= 0.0 {
        return;
    }
    let Some(best) = pool.iter().map(|h| h.raw_score).max_by(f64::total_cmp) else {
        return;
    };
    let floor = best - threshold;
    beam.retain(|h| h.raw_score >= floor);
}

/// Best-first order for completed hypotheses: normalized score, then earlier
/// finish, then lexicographically smaller tokens.
pub fn compare_finished(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.normalized_score()
        .total_cmp(&a.normalized_score())
        .then(a.finished_at.cmp(&b.finished_at))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Picks the output hypothesis.
///
/// Finished hypotheses that meet every constraint win. Plain beam search can
/// finish without meeting them, so other finished hypotheses come next. With
/// nothing finished, the unfinished hypothesis with the most constraint
/// progress, then the highest raw score, is returned as a best effort.
pub fn select_output<'a>(pool: &'a [Hypothesis], beam: &'a Beam, set: &ConstraintSet) -> Result<&'a Hypothesis> {
    let met = |h: &&Hypothesis| set.eos_allowed(&h.cstate);
    if let Some(h) = pool.iter().filter(met).min_by(|a, b| compare_finished(a, b)) {
        return Ok(h);
    }
    if let Some(h) = pool.iter().min_by(|a, b| compare_finished(a, b)) {
        return Ok(h);
    }
    beam.iter()
        .filter(|h| !h.is_finished())
        .min_by(|a, b| {
            b.bank()
                .cmp(&a.bank())
                .then(b.raw_score.total_cmp(&a.raw_score))
                .then_with(|| a.tokens.cmp(&b.tokens))
        })
        .ok_or_else(|| Error::Internal("decode ended with an empty beam and no finished hypothesis".into()))
}
