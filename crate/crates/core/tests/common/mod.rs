//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use lexbeam::{NGramLm, Scorer, TableScorer, TokenId, Vocabulary};
use rand::Rng;

/// Sum of per-step log-probabilities of `tokens[1..]`, scored one prefix at a time.
pub fn rescore<S: Scorer + ?Sized>(scorer: &S, tokens: &[TokenId]) -> f64 {
    (1..tokens.len())
        .map(|i| scorer.step(&[&tokens[..i]], None).unwrap().get(0, tokens[i]))
        .sum()
}

pub fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

/// A small add-alpha LM trained on a random corpus over `n_words` words.
pub fn random_lm<R: Rng>(rng: &mut R, n_words: usize, order: usize) -> (Vocabulary, NGramLm) {
    let ws = words(n_words);
    let vocab = Vocabulary::with_words(&ws).unwrap();
    let lines: Vec<String> = (0..rng.random_range(2..7))
        .map(|_| {
            (0..rng.random_range(1..7))
                .map(|_| ws[rng.random_range(0..n_words)].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let alpha = rng.random_range(0.05..1.0);
    let lm = NGramLm::train(&lines, order, alpha, &vocab).unwrap();
    (vocab, lm)
}

/// The best output `a b` finishes at step 3 while `g g g ...` stays on the
/// beam with a per-step log-probability of ln 0.4.
pub fn garbage_fixture(max_len: usize) -> (Vocabulary, TableScorer) {
    let v = Vocabulary::with_words(["a", "b", "g"]).unwrap();
    let mut entries: Vec<(String, Vec<(&str, f64)>)> = vec![
        ("<s>".into(), vec![("a", 0.5), ("g", 0.5)]),
        ("<s> a".into(), vec![("b", 1.0)]),
        ("<s> a b".into(), vec![("</s>", 1.0)]),
    ];
    for m in 1..=max_len {
        entries.push((format!("<s>{}", " g".repeat(m)), vec![("g", 0.4), ("a", 0.3), ("b", 0.3)]));
    }
    let t = TableScorer::new(&v, entries).unwrap();
    (v, t)
}

/// Phrase `a b`: the likeliest path starts it (`a`), abandons it (`c`), and
/// completes it later (`a b`).
pub fn abort_fixture() -> (Vocabulary, TableScorer) {
    let v = Vocabulary::with_words(["a", "b", "c"]).unwrap();
    let t = TableScorer::from_json_str(
        r#"{
            "<s>": {"a": 0.9, "c": 0.1},
            "<s> a": {"c": 0.9, "b": 0.1},
            "<s> a b": {"</s>": 1.0},
            "<s> a c": {"a": 0.9, "b": 0.1},
            "<s> a c a": {"b": 0.9, "c": 0.1},
            "<s> a c a b": {"</s>": 1.0}
        }"#,
        &v,
    )
    .unwrap();
    (v, t)
}
