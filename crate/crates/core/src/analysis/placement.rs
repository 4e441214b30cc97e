use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::TokenId;

/// Relative position of a constraint's first token in the reference and in
/// the decoder output, each as a fraction of the sequence length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementPair {
    pub ref_pos: f64,
    pub out_pos: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placements {
    pub pairs: Vec<PlacementPair>,
    /// Phrases missing from the reference or the output.
    pub skipped: usize,
}

fn first_occurrence(seq: &[TokenId], phrase: &[TokenId]) -> Option<usize> {
    if phrase.is_empty() || phrase.len() > seq.len() {
        return None;
    }
    seq.windows(phrase.len()).position(|w| w == phrase)
}

/// Pairs up where each phrase first occurs in `reference` and in `output`.
///
/// Both sequences are plain token sequences (no BOS or EOS).
pub fn placement_pairs(set: &ConstraintSet, reference: &[TokenId], output: &[TokenId]) -> Placements {
    let mut out = Placements::default();
    for phrase in set.phrases() {
        match (first_occurrence(reference, phrase), first_occurrence(output, phrase)) {
            (Some(r), Some(o)) => out.pairs.push(PlacementPair {
                ref_pos: r as f64 / reference.len() as f64,
                out_pos: o as f64 / output.len() as f64,
            }),
            _ => out.skipped += 1,
        }
    }
    out
}

/// Pearson product-moment correlation of the `(ref_pos, out_pos)` pairs.
pub fn pearson_r(pairs: &[PlacementPair]) -> Result<f64> {
    let xs: Vec<f64> = pairs.iter().map(|p| p.ref_pos).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.out_pos).collect();
    pearson(&xs, &ys)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation(format!(
            "{} x values but {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 pairs, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
