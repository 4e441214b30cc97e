use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::{check_histories, ScoreMatrix, Scorer};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;
use crate::TokenId;

/// Separates an optional source sentence from the context in a table key.
pub const SOURCE_SEPARATOR: &str = " ||| ";

/// Table-driven scorer for scripted fixtures.
///
/// The file is a JSON object from context key to `{surface: probability}`.
/// A context key is the space-joined surfaces of the whole history, BOS
/// included (`"<s> a b"`). A key may be prefixed with a source sentence and
/// `" ||| "`; source-specific entries win over plain ones. Contexts without an
/// entry score uniformly. Tokens missing from an entry get probability zero.
#[derive(Debug, Clone)]
pub struct TableScorer {
    vocab: Vocabulary,
    rows: HashMap<String, Vec<f64>>,
    uniform: Vec<f64>,
}

impl TableScorer {
    pub fn new<I, K, D, S>(vocab: &Vocabulary, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, D)>,
        K: AsRef<str>,
        D: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut rows = HashMap::new();
        for (key, dist) in entries {
            let key = normalize_key(key.as_ref());
            let row = build_row(vocab, &key, dist)?;
            if rows.insert(key.clone(), row).is_some() {
                return Err(Error::Model(format!("duplicate context {key:?}")));
            }
        }
        let lp = -((vocab.len() - 1) as f64).ln();
        let mut uniform = vec![lp; vocab.len()];
        uniform[vocab.bos() as usize] = f64::NEG_INFINITY;
        Ok(Self {
            vocab: vocab.clone(),
            rows,
            uniform,
        })
    }

    pub fn from_json_str(text: &str, vocab: &Vocabulary) -> Result<Self> {
        let raw: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_str(text)?;
        Self::new(vocab, raw)
    }

    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text, vocab)
    }

    fn context_key(&self, history: &[TokenId]) -> String {
        history
            .iter()
            .map(|&t| self.vocab.surface(t).unwrap_or(""))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn lookup(&self, history: &[TokenId], source: Option<&str>) -> &[f64] {
        let ctx = self.context_key(history);
        if let Some(src) = source {
            let key = format!("{}{SOURCE_SEPARATOR}{ctx}", src.split_whitespace().collect::<Vec<_>>().join(" "));
            if let Some(row) = self.rows.get(&key) {
                return row;
            }
        }
        self.rows.get(&ctx).map_or(&self.uniform, Vec::as_slice)
    }
}

fn normalize_key(key: &str) -> String {
    match key.split_once(SOURCE_SEPARATOR.trim()) {
        Some((src, ctx)) => format!(
            "{}{SOURCE_SEPARATOR}{}",
            src.split_whitespace().collect::<Vec<_>>().join(" "),
            ctx.split_whitespace().collect::<Vec<_>>().join(" ")
        ),
        None => key.split_whitespace().collect::<Vec<_>>().join(" "),
    }
}

fn build_row<D, S>(vocab: &Vocabulary, key: &str, dist: D) -> Result<Vec<f64>>
where
    D: IntoIterator<Item = (S, f64)>,
    S: AsRef<str>,
{
    let ctx = key.rsplit(SOURCE_SEPARATOR).next().unwrap_or(key);
    let mut words = ctx.split(' ');
    if words.next() != vocab.surface(vocab.bos()) {
        return Err(Error::Model(format!("context {key:?} must start with BOS")));
    }
    if let Some(w) = words.find(|w| vocab.get(w).is_none()) {
        return Err(Error::Model(format!("context {key:?} has unknown token {w:?}")));
    }

    let mut probs = vec![0.0; vocab.len()];
    for (surface, p) in dist {
        let surface = surface.as_ref();
        let id = vocab
            .get(surface)
            .ok_or_else(|| Error::Model(format!("context {key:?}: unknown token {surface:?}")))?;
        if id == vocab.bos() {
            return Err(Error::Model(format!("context {key:?}: BOS cannot be scored")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Model(format!(
                "context {key:?}: probability {p} for {surface:?} outside [0, 1]"
            )));
        }
        probs[id as usize] += p;
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Model(format!(
            "context {key:?}: probabilities sum to {total}, not 1"
        )));
    }
    Ok(probs.into_iter().map(f64::ln).collect())
}

impl Scorer for TableScorer {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn step(&self, histories: &[&[TokenId]], source: Option<&str>) -> Result<ScoreMatrix> {
        check_histories(histories, self.vocab.bos(), self.vocab.eos(), self.vocab.len())?;
        let mut values = Vec::with_capacity(histories.len() * self.vocab.len());
        for h in histories {
            values.extend_from_slice(self.lookup(h, source));
        }
        ScoreMatrix::new(histories.len(), self.vocab.len(), values)
    }
}
