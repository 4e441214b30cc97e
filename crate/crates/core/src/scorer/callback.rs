use std::fmt;

use super::{check_histories, ScoreMatrix, Scorer};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;
use crate::TokenId;

/// Tolerance on the log-sum-exp of rows returned by a host callback.
pub const CALLBACK_NORMALIZATION_TOL: f64 = 1e-4;

type ScoreFn<'a> = dyn Fn(&[&[TokenId]], Option<&str>) -> std::result::Result<Vec<Vec<f64>>, String> + 'a;

/// Adapts a host-language scoring function to [`Scorer`].
///
/// The function is called once per decoding step with every active history
/// and must return one row of `vocab_size` log-probabilities per history.
/// Each returned batch is validated: row count, row width, a `-inf` BOS column,
/// and normalization within [`CALLBACK_NORMALIZATION_TOL`].
pub struct CallbackScorer<'a> {
    size: usize,
    bos: TokenId,
    eos: TokenId,
    func: Box<ScoreFn<'a>>,
}

impl<'a> CallbackScorer<'a> {
    pub fn new<F>(vocab: &Vocabulary, func: F) -> Self
    where
        F: Fn(&[&[TokenId]], Option<&str>) -> std::result::Result<Vec<Vec<f64>>, String> + 'a,
    {
        Self {
            size: vocab.len(),
            bos: vocab.bos(),
            eos: vocab.eos(),
            func: Box::new(func),
        }
    }
}

impl fmt::Debug for CallbackScorer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackScorer").field("vocab_size", &self.size).finish()
    }
}

impl Scorer for CallbackScorer<'_> {
    fn vocab_size(&self) -> usize {
        self.size
    }

    fn step(&self, histories: &[&[TokenId]], source: Option<&str>) -> Result<ScoreMatrix> {
        check_histories(histories, self.bos, self.eos, self.size)?;
        let rows = (self.func)(histories, source)
            .map_err(|msg| Error::Scorer(format!("score callback failed: {msg}")))?;
        if rows.len() != histories.len() {
            return Err(Error::Scorer(format!(
                "score callback returned {} rows for {} histories",
                rows.len(),
                histories.len()
            )));
        }
        let m = ScoreMatrix::from_rows(rows, self.size)?;
        for i in 0..m.rows() {
            if m.get(i, self.bos) != f64::NEG_INFINITY {
                return Err(Error::Scorer(format!("row {i}: BOS column must be -inf")));
            }
        }
        m.check_normalized(CALLBACK_NORMALIZATION_TOL)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::UniformScorer;

    #[test]
    fn replays_native_scorer() {
        let v = Vocabulary::with_words(["a", "b", "c"]).unwrap();
        let native = UniformScorer::new(&v);
        let cb = CallbackScorer::new(&v, |hs, src| {
            let m = native.step(hs, src).map_err(|e| e.to_string())?;
            Ok((0..m.rows()).map(|i| m.row(i).to_vec()).collect())
        });
        super::super::contract::check(&cb, v.bos(), v.eos());
    }

    #[test]
    fn wrong_width_names_expected_size() {
        let v = Vocabulary::with_words(["a", "b"]).unwrap();
        let cb = CallbackScorer::new(&v, |hs, _| Ok(vec![vec![-1.0986; 3]; hs.len()]));
        let err = cb.step(&[&[0]], None).unwrap_err();
        assert!(matches!(err, Error::ScoreShape { expected: 5, got: 3 }));
        assert!(err.to_string().contains("expected 5"));
    }

    #[test]
    fn rejects_bad_batches() {
        let v = Vocabulary::with_words(["a"]).unwrap();
        let third = (1.0f64 / 3.0).ln();
        let ok_row = vec![f64::NEG_INFINITY, third, third, third];
        let cb = CallbackScorer::new(&v, |_, _| Ok(vec![]));
        assert!(cb.step(&[&[0]], None).is_err());
        let cb = CallbackScorer::new(&v, |_, _| Ok(vec![vec![-0.5; 4]]));
        assert!(cb.step(&[&[0]], None).is_err());
        let cb = CallbackScorer::new(&v, |_, _| Err("boom".to_string()));
        assert!(cb.step(&[&[0]], None).unwrap_err().to_string().contains("boom"));
        let cb = CallbackScorer::new(&v, move |_, _| Ok(vec![ok_row.clone()]));
        cb.step(&[&[0]], None).unwrap();
    }
}
