use super::{check_histories, log_softmax_excluding, ScoreMatrix, Scorer};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;
use crate::TokenId;

/// Spread of the synthetic logits: the most and least likely tokens of a row
/// differ by at most `e^LOGIT_SCALE` in probability.
const LOGIT_SCALE: f64 = 8.0;

/// Seeded pseudo-random scorer for timing runs.
///
/// Each history is folded into a 64-bit key with the SplitMix64 finalizer,
/// entry `(i, j)` is `mix(key_i ^ (j · φ64))` mapped to `[0, LOGIT_SCALE)`, and
/// each row is log-softmax normalized. Pure integer hashing keeps the logits
/// identical across runs and platforms.
#[derive(Debug, Clone)]
pub struct SyntheticScorer {
    seed: u64,
    size: usize,
    bos: TokenId,
    eos: TokenId,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SyntheticScorer {
    /// Uses the standard special-token layout (BOS 0, EOS 1).
    pub fn new(seed: u64, vocab_size: usize) -> Result<Self> {
        if vocab_size < 4 {
            return Err(Error::Config(format!(
                "synthetic scorer needs a vocabulary of at least 4, got {vocab_size}"
            )));
        }
        Ok(Self {
            seed,
            size: vocab_size,
            bos: 0,
            eos: 1,
        })
    }

    pub fn for_vocab(seed: u64, vocab: &Vocabulary) -> Result<Self> {
        let mut s = Self::new(seed, vocab.len())?;
        s.bos = vocab.bos();
        s.eos = vocab.eos();
        Ok(s)
    }

    fn history_key(&self, history: &[TokenId]) -> u64 {
        history.iter().fold(mix(self.seed ^ GOLDEN), |h, &t| {
            mix(h.wrapping_add(GOLDEN) ^ u64::from(t))
        })
    }

    fn fill_row(&self, history: &[TokenId], row: &mut [f64]) {
        let key = self.history_key(history);
        for (j, v) in row.iter_mut().enumerate() {
            let h = mix(key ^ (j as u64).wrapping_mul(GOLDEN));
            *v = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * LOGIT_SCALE;
        }
        log_softmax_excluding(row, self.bos as usize);
    }
}

impl Scorer for SyntheticScorer {
    fn vocab_size(&self) -> usize {
        self.size
    }

    fn step(&self, histories: &[&[TokenId]], _source: Option<&str>) -> Result<ScoreMatrix> {
        check_histories(histories, self.bos, self.eos, self.size)?;
        let mut values = vec![0.0; histories.len() * self.size];
        for (h, row) in histories.iter().zip(values.chunks_mut(self.size)) {
            self.fill_row(h, row);
        }
        ScoreMatrix::new(histories.len(), self.size, values)
    }
}
