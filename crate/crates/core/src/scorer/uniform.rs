use super::{check_histories, ScoreMatrix, Scorer};
use crate::error::Result;
use crate::vocab::Vocabulary;
use crate::TokenId;

/// Every target token gets `1 / |V_T|`.
#[derive(Debug, Clone)]
pub struct UniformScorer {
    size: usize,
    bos: TokenId,
    eos: TokenId,
}

impl UniformScorer {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self {
            size: vocab.len(),
            bos: vocab.bos(),
            eos: vocab.eos(),
        }
    }
}

impl Scorer for UniformScorer {
    fn vocab_size(&self) -> usize {
        self.size
    }

    fn step(&self, histories: &[&[TokenId]], _source: Option<&str>) -> Result<ScoreMatrix> {
        check_histories(histories, self.bos, self.eos, self.size)?;
        let lp = -((self.size - 1) as f64).ln();
        let mut row = vec![lp; self.size];
        row[self.bos as usize] = f64::NEG_INFINITY;
        let values = row.repeat(histories.len());
        ScoreMatrix::new(histories.len(), self.size, values)
    }
}
