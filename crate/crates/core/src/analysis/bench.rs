//! Wall-clock decoding time as a function of the number of constraints.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::ConstraintSet;
use crate::decoder::{decode, Algorithm, DecodeConfig};
use crate::error::{Error, Result};
use crate::scorer::SyntheticScorer;
use crate::vocab::Vocabulary;
use crate::TokenId;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Full vocabulary size, BOS included.
    pub vocab_size: usize,
    pub sentences: usize,
    pub c_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub decode: DecodeConfig,
    /// Timed passes over the sentence set, after one untimed warm-up decode.
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            vocab_size: 10_001,
            sentences: 50,
            c_values: vec![1, 2, 4, 8, 12],
            algorithms: vec![Algorithm::Dba, Algorithm::Gbs],
            decode: DecodeConfig {
                max_length: 30,
                ..DecodeConfig::default()
            },
            repetitions: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub c: usize,
    /// `k` for beam/DBA, the base beam `b` for GBS.
    pub beam: usize,
    /// Seconds per sentence, averaged over sentences.
    pub mean_s: f64,
    pub median_s: f64,
    pub n_sentences: usize,
    /// Decoded outputs, one per sentence, for determinism checks.
    pub outputs: Vec<Vec<TokenId>>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    algorithm: &'a str,
    #[serde(rename = "C")]
    c: usize,
    beam: usize,
    mean_s: f64,
    median_s: f64,
    n_sentences: usize,
}

/// The `c` single-token constraints for sentence `sentence`. Independent of
/// the algorithm so every algorithm decodes the same inputs.
pub fn bench_constraints(seed: u64, sentence: usize, c: usize, vocab: &Vocabulary) -> ConstraintSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(sentence as u64 * 131 + c as u64));
    let reserved = [vocab.bos(), vocab.eos(), vocab.unk()];
    let pool: Vec<TokenId> = (0..vocab.len() as TokenId).filter(|t| !reserved.contains(t)).collect();
    let phrases = sample(&mut rng, pool.len(), c.min(pool.len()))
        .into_iter()
        .map(|i| vec![pool[i]])
        .collect();
    ConstraintSet::new(phrases).expect("single-token phrases are valid")
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Times every (algorithm, C) combination on the same synthetic sentences.
///
/// Sentence `i` uses a synthetic scorer seeded with `seed + i` and C random
/// single-token constraints. Runs sequentially on the calling thread.
pub fn bench_run(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if config.repetitions == 0 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    if config.sentences == 0 {
        return Err(Error::Config("need at least one sentence".into()));
    }
    let vocab = Vocabulary::synthetic(config.vocab_size)?;
    let scorers = (0..config.sentences)
        .map(|i| SyntheticScorer::for_vocab(config.seed.wrapping_add(i as u64), &vocab))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for &algorithm in &config.algorithms {
        let dc = DecodeConfig {
            algorithm,
            ..config.decode.clone()
        };
        dc.validate()?;
        for &c in &config.c_values {
            let sets: Vec<ConstraintSet> = (0..config.sentences)
                .map(|i| bench_constraints(config.seed, i, c, &vocab))
                .collect();
            decode(&scorers[0], &vocab, &sets[0], &dc, None)?;

            let mut per_sentence = vec![0.0; config.sentences];
            let mut outputs = vec![Vec::new(); config.sentences];
            for _ in 0..config.repetitions {
                for i in 0..config.sentences {
                    let start = Instant::now();
                    let r = decode(&scorers[i], &vocab, &sets[i], &dc, None)?;
                    per_sentence[i] += start.elapsed().as_secs_f64();
                    outputs[i] = r.output_tokens;
                }
            }
            for t in &mut per_sentence {
                *t /= config.repetitions as f64;
            }
            let mean_s = per_sentence.iter().sum::<f64>() / config.sentences as f64;
            per_sentence.sort_by(f64::total_cmp);
            records.push(BenchRecord {
                algorithm,
                c,
                beam: match algorithm {
                    Algorithm::Gbs => dc.gbs_base_beam,
                    _ => dc.beam_size,
                },
                mean_s,
                median_s: median(&per_sentence),
                n_sentences: config.sentences,
                outputs,
            });
        }
    }
    Ok(records)
}

/// Writes records as CSV with columns `algorithm,C,beam,mean_s,median_s,n_sentences`.
pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            algorithm: r.algorithm.name(),
            c: r.c,
            beam: r.beam,
            mean_s: r.mean_s,
            median_s: r.median_s,
            n_sentences: r.n_sentences,
        })?;
    }
    w.flush()?;
    Ok(())
}
