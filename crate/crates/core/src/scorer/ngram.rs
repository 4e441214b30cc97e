//! Add-α smoothed n-gram language model.
//!
//! `P(w | ctx) = (count(ctx, w) + α) / (count(ctx) + α·|V_T|)`, where the
//! target vocabulary `V_T` is every id except BOS. Training pads each line
//! with `order - 1` BOS tokens and terminates it with one EOS.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_histories, ScoreMatrix, Scorer};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;
use crate::TokenId;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
struct ContextCounts {
    total: u64,
    /// Sorted by token id.
    next: Vec<(TokenId, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    order: usize,
    alpha: f64,
    vocab: Vocabulary,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    alpha: f64,
    vocab: VocabRef,
    contexts: Vec<ContextRecord>,
}

#[derive(Serialize, Deserialize)]
struct VocabRef {
    bos: TokenId,
    eos: TokenId,
    unk: TokenId,
    tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ContextRecord {
    context: Vec<TokenId>,
    total: u64,
    next: Vec<(TokenId, u64)>,
}

impl NGramLm {
    pub fn train<S: AsRef<str>>(
        lines: &[S],
        order: usize,
        alpha: f64,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config("n-gram order must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("smoothing alpha must be positive, got {alpha}")));
        }
        let mut raw: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
        let mut n_lines = 0;
        for line in lines {
            let line = line.as_ref();
            if line.trim().is_empty() {
                continue;
            }
            n_lines += 1;
            let mut padded = vec![vocab.bos(); order - 1];
            padded.extend(
                vocab
                    .tokenize(line)
                    .into_iter()
                    .filter(|&t| t != vocab.bos() && t != vocab.eos()),
            );
            padded.push(vocab.eos());
            for i in order - 1..padded.len() {
                let ctx = padded[i + 1 - order..i].to_vec();
                *raw.entry(ctx).or_default().entry(padded[i]).or_default() += 1;
            }
        }
        if n_lines == 0 {
            return Err(Error::Model("training corpus is empty".into()));
        }
        let counts = raw
            .into_iter()
            .map(|(ctx, next)| {
                let mut next: Vec<_> = next.into_iter().collect();
                next.sort_unstable();
                let total = next.iter().map(|&(_, c)| c).sum();
                (ctx, ContextCounts { total, next })
            })
            .collect();
        Ok(Self {
            order,
            alpha,
            vocab: vocab.clone(),
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Distinct contexts seen in training.
    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    fn denominator(&self, counts: Option<&ContextCounts>) -> f64 {
        counts.map_or(0, |c| c.total) as f64 + self.alpha * self.vocab.target_size() as f64
    }

    /// Conditional probability of `token` after the `order - 1` token `context`.
    pub fn probability(&self, context: &[TokenId], token: TokenId) -> f64 {
        if token == self.vocab.bos() {
            return 0.0;
        }
        let counts = self.counts.get(context);
        let c = counts
            .and_then(|cc| cc.next.binary_search_by_key(&token, |&(t, _)| t).ok().map(|i| cc.next[i].1))
            .unwrap_or(0);
        (c as f64 + self.alpha) / self.denominator(counts)
    }

    /// The `order - 1` token context ending a BOS-initial history.
    pub fn context_of(&self, history: &[TokenId]) -> Vec<TokenId> {
        let need = self.order - 1;
        let mut ctx: Vec<TokenId> = history[history.len().saturating_sub(need)..].to_vec();
        while ctx.len() < need {
            ctx.insert(0, self.vocab.bos());
        }
        ctx
    }

    fn fill_row(&self, history: &[TokenId], row: &mut [f64]) {
        let ctx = self.context_of(history);
        let counts = self.counts.get(&ctx);
        let denom = self.denominator(counts);
        row.fill((self.alpha / denom).ln());
        if let Some(cc) = counts {
            for &(t, c) in &cc.next {
                row[t as usize] = ((c as f64 + self.alpha) / denom).ln();
            }
        }
        row[self.vocab.bos() as usize] = f64::NEG_INFINITY;
    }

    pub fn to_json(&self) -> Result<String> {
        let mut contexts: Vec<ContextRecord> = self
            .counts
            .iter()
            .map(|(ctx, cc)| ContextRecord {
                context: ctx.clone(),
                total: cc.total,
                next: cc.next.clone(),
            })
            .collect();
        contexts.sort_by(|a, b| a.context.cmp(&b.context));
        let file = ModelFile {
            order: self.order,
            alpha: self.alpha,
            vocab: VocabRef {
                bos: self.vocab.bos(),
                eos: self.vocab.eos(),
                unk: self.vocab.unk(),
                tokens: self.vocab.tokens().to_vec(),
            },
            contexts,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.order < 1 || file.alpha.is_nan() || file.alpha <= 0.0 {
            return Err(Error::Model("invalid order or alpha".into()));
        }
        let v = file.vocab;
        let vocab = Vocabulary::new(v.tokens, v.bos, v.eos, v.unk)?;
        let mut counts = HashMap::with_capacity(file.contexts.len());
        for rec in file.contexts {
            if rec.context.len() != file.order - 1 {
                return Err(Error::Model(format!(
                    "context {:?} does not have {} tokens",
                    rec.context,
                    file.order - 1
                )));
            }
            let bad_id = rec
                .context
                .iter()
                .chain(rec.next.iter().map(|(t, _)| t))
                .find(|&&t| t as usize >= vocab.len());
            if let Some(&t) = bad_id {
                return Err(Error::TokenOutOfRange { id: t, size: vocab.len() });
            }
            if rec.next.iter().map(|&(_, c)| c).sum::<u64>() != rec.total {
                return Err(Error::Model(format!("context {:?}: total mismatch", rec.context)));
            }
            let mut next = rec.next;
            next.sort_unstable();
            counts.insert(rec.context, ContextCounts { total: rec.total, next });
        }
        Ok(Self {
            order: file.order,
            alpha: file.alpha,
            vocab,
            counts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Scorer for NGramLm {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn step(&self, histories: &[&[TokenId]], _source: Option<&str>) -> Result<ScoreMatrix> {
        let v = self.vocab.len();
        check_histories(histories, self.vocab.bos(), self.vocab.eos(), v)?;
        let mut values = vec![0.0; histories.len() * v];
        for (h, row) in histories.iter().zip(values.chunks_mut(v)) {
            self.fill_row(h, row);
        }
        ScoreMatrix::new(histories.len(), v, values)
    }
}
