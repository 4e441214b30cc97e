//! Acceptance suite. Each test prints one `[PASS]` or `[FAIL]` line; run with
//! `cargo test -p lexbeam --test acceptance -- --nocapture` to see them.
//!
//! Tests are serialized so the timing criterion runs on a quiet machine.

mod common;

use std::sync::Mutex;

use common::{abort_fixture, garbage_fixture, random_lm, rescore};
use lexbeam::analysis::{bench_run, pearson, pearson_r, BenchConfig, PlacementPair};
use lexbeam::decoder::{adjust_allocation, allocate_banks, BankAllocation};
use lexbeam::oracle::{exhaustive_best, output_satisfies};
use lexbeam::{decode, decode_observed, Algorithm, ConstraintSet, DecodeConfig, TokenId, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(name: &str, ok: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

#[test]
fn scaling_constant_for_dba_linear_for_gbs() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let config = BenchConfig {
        vocab_size: 10_001,
        sentences: 50,
        c_values: vec![1, 2, 4, 8, 12],
        algorithms: vec![Algorithm::Dba, Algorithm::Gbs],
        decode: DecodeConfig {
            beam_size: 10,
            gbs_base_beam: 10,
            max_length: 30,
            ..DecodeConfig::default()
        },
        repetitions: 1,
        seed: 2017,
    };
    let records = bench_run(&config).unwrap();
    let mean = |alg: Algorithm, c: usize| {
        records
            .iter()
            .find(|r| r.algorithm == alg && r.c == c)
            .map(|r| r.mean_s)
            .unwrap()
    };
    let dba: Vec<f64> = config.c_values.iter().map(|&c| mean(Algorithm::Dba, c)).collect();
    let max = dba.iter().copied().fold(f64::MIN, f64::max);
    let min = dba.iter().copied().fold(f64::MAX, f64::min);
    let ratio = max / min;
    let gbs_ratio = mean(Algorithm::Gbs, 12) / mean(Algorithm::Gbs, 1);
    let per_c: Vec<String> = config
        .c_values
        .iter()
        .map(|&c| format!("C={c} dba {:.4}s gbs {:.4}s", mean(Algorithm::Dba, c), mean(Algorithm::Gbs, c)))
        .collect();
    println!("  {}", per_c.join("; "));
    report(
        "scaling",
        ratio <= 1.5 && gbs_ratio >= 3.0,
        &format!("DBA max/min {ratio:.3} (<= 1.5), GBS C12/C1 {gbs_ratio:.2} (>= 3)"),
    );
}

/// Phrases over distinct tokens, no token used twice.
fn disjoint_phrases<R: Rng>(rng: &mut R, pool: &[TokenId], c: usize) -> Vec<Vec<TokenId>> {
    let mut toks = pool.to_vec();
    toks.shuffle(rng);
    toks.truncate(c);
    let mut phrases = Vec::new();
    let mut rest = &toks[..];
    while !rest.is_empty() {
        let len = rng.random_range(1..=rest.len().min(2));
        phrases.push(rest[..len].to_vec());
        rest = &rest[len..];
    }
    phrases
}

struct OracleInstance {
    vocab: Vocabulary,
    lm: lexbeam::NGramLm,
    set: ConstraintSet,
    max_length: usize,
}

fn oracle_instances() -> Vec<OracleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0_A11CE);
    (0..200)
        .map(|_| {
            // |V_T| = words + EOS + UNK.
            let n_words = rng.random_range(1..=3);
            let (vocab, lm) = random_lm(&mut rng, n_words, 3);
            let pool: Vec<TokenId> = (0..vocab.len() as TokenId)
                .filter(|&t| t != vocab.bos() && t != vocab.eos())
                .collect();
            let c = rng.random_range(0..=pool.len().min(3));
            let set = ConstraintSet::new(disjoint_phrases(&mut rng, &pool, c)).unwrap();
            let max_length = rng.random_range((c + 1).max(2)..=6);
            OracleInstance {
                vocab,
                lm,
                set,
                max_length,
            }
        })
        .collect()
}

#[test]
fn oracle_optimality_at_saturation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut agree = 0;
    let mut worst = 0.0f64;
    let instances = oracle_instances();
    for inst in &instances {
        let vt = inst.vocab.target_size();
        let config = DecodeConfig {
            beam_size: 2 * vt.pow(inst.max_length as u32),
            max_length: inst.max_length,
            prune_threshold: 0.0,
            ..DecodeConfig::default()
        };
        let r = decode(&inst.lm, &inst.vocab, &inst.set, &config, None).unwrap();
        let o = exhaustive_best(&inst.lm, &inst.vocab, &inst.set, inst.max_length).unwrap();
        let ok = match &o.best_tokens {
            Some(_) => {
                let diff = (r.normalized_score - o.best_normalized_score).abs();
                worst = worst.max(diff);
                r.constraints_met && diff <= 1e-9
            }
            None => !r.constraints_met,
        };
        agree += ok as usize;
    }
    report(
        "oracle optimality",
        agree == instances.len(),
        &format!("{agree}/{} instances match the exhaustive optimum (max |diff| {worst:.2e})", instances.len()),
    );
}

#[test]
fn constraint_satisfaction_and_eos_gating() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let (mut met, mut scan_failures, mut gating_violations, mut score_drift) = (0, 0, 0, 0.0f64);
    for _ in 0..1000 {
        let (vocab, lm) = random_lm(&mut rng, 12, 3);
        let c = rng.random_range(1..=8);
        let mut phrases = Vec::new();
        let mut total = 0;
        while total < c {
            let len = rng.random_range(1..=3).min(c - total);
            phrases.push((0..len).map(|_| rng.random_range(3..vocab.len() as TokenId)).collect());
            total += len;
        }
        let set = ConstraintSet::new(phrases).unwrap();
        let config = DecodeConfig {
            beam_size: 10,
            max_length: 2 * c + 20,
            ..DecodeConfig::default()
        };
        let eos = vocab.eos();
        let r = decode_observed(&lm, &vocab, &set, &config, None, &mut |tr| {
            for h in tr.beam {
                if h.tokens.contains(&eos) && h.bank() < c {
                    gating_violations += 1;
                }
            }
        })
        .unwrap();
        if r.constraints_met {
            met += 1;
            if !output_satisfies(&r.output_tokens, &vocab, &set) {
                scan_failures += 1;
            }
        }
        score_drift = score_drift.max((rescore(&lm, &r.output_tokens) - r.raw_score).abs());
    }
    report(
        "constraint satisfaction",
        scan_failures == 0 && gating_violations == 0 && score_drift <= 1e-9,
        &format!(
            "{met}/1000 met; {scan_failures} failed the substring scan; {gating_violations} EOS-gating violations; rescoring drift {score_drift:.1e}"
        ),
    );
}

#[test]
fn zero_constraint_equivalence() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut identical = 0;
    for _ in 0..100 {
        let n_words = rng.random_range(3..15);
        let order = rng.random_range(1..=4);
        let (vocab, lm) = random_lm(&mut rng, n_words, order);
        let base = DecodeConfig {
            beam_size: rng.random_range(1..=12),
            max_length: rng.random_range(3..25),
            ..DecodeConfig::default()
        };
        let set = ConstraintSet::empty();
        let a = decode(&lm, &vocab, &set, &DecodeConfig { algorithm: Algorithm::Beam, ..base.clone() }, None).unwrap();
        let b = decode(&lm, &vocab, &set, &DecodeConfig { algorithm: Algorithm::Dba, ..base.clone() }, None).unwrap();
        if a.output_tokens == b.output_tokens && (a.raw_score - b.raw_score).abs() <= 1e-12 {
            identical += 1;
        }
    }
    report(
        "zero-constraint equivalence",
        identical == 100,
        &format!("{identical}/100 DBA outputs identical to beam search"),
    );
}

#[test]
fn allocation_properties() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=64);
        let c = rng.random_range(0..=20);
        let counts: Vec<usize> = (0..=c).map(|_| rng.random_range(0..=12)).collect();
        let alloc = allocate_banks(k, c);
        let adjusted = adjust_allocation(&alloc, &counts);
        let total: usize = counts.iter().sum();
        let capped = adjusted.slots().iter().zip(&counts).all(|(s, n)| s <= n);
        if alloc.total() != k || adjusted.total() != k.min(total) || !capped {
            bad += 1;
        }
    }
    let fig2 = allocate_banks(5, 4) == BankAllocation::new(vec![1; 5]);
    report(
        "allocation",
        bad == 0 && fig2,
        &format!("{bad} of 10000 random triples violated conservation or caps; k=5,C=4 -> one slot per bank: {fig2}"),
    );
}

#[test]
fn unwinding() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (a, b, c) = (3, 4, 5);
    let ab = ConstraintSet::new(vec![vec![a, b]]).unwrap();
    let s1 = ab.advance(&ab.initial_state(), a);
    let ex1 = s1.met_prefix_vec() == [1] && s1.in_progress() == Some(0) && s1.num_met() == 1;
    let s2 = ab.advance(&s1, c);
    let ex2 = s2.met_prefix_vec() == [0] && s2.num_met() == 0;
    let abc = ConstraintSet::new(vec![vec![a, b], vec![c]]).unwrap();
    let s3 = abc.advance(&abc.state_from_prefixes(&[1, 0]).unwrap(), c);
    let ex3 = s3.met_prefix_vec() == [0, 1] && s3.num_met() == 1;

    let (v, t) = abort_fixture();
    let set = ConstraintSet::new(vec![vec![v.get("a").unwrap(), v.get("b").unwrap()]]).unwrap();
    let config = DecodeConfig {
        beam_size: 4,
        max_length: 8,
        ..DecodeConfig::default()
    };
    let mut aborted_seen = false;
    let r = decode_observed(&t, &v, &set, &config, None, &mut |tr| {
        if tr.step == 2 {
            aborted_seen = tr
                .beam
                .iter()
                .any(|h| v.detokenize(&h.tokens).unwrap() == "a c" && h.bank() == 0);
        }
    })
    .unwrap();
    let decode_ok = aborted_seen && r.output_text == "a c a b" && r.constraints_met;
    report(
        "unwinding",
        ex1 && ex2 && ex3 && decode_ok,
        &format!("advance examples {ex1}/{ex2}/{ex3}; abort-and-re-emit decode -> {:?} (abort observed: {aborted_seen})", r.output_text),
    );
}

#[test]
fn garbage_generation() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let (v, t) = garbage_fixture(40);
    let run = |prune: f64, early: bool| {
        let config = DecodeConfig {
            beam_size: 2,
            max_length: 40,
            prune_threshold: prune,
            early_stopping: early,
            ..DecodeConfig::default()
        };
        decode(&t, &v, &ConstraintSet::empty(), &config, None).unwrap()
    };
    let off = run(0.0, false);
    let pruned = run(20.0, false);
    let early = run(0.0, true);
    let ok = off.steps_used == 40 && pruned.steps_used < 40 && early.steps_used == 3;
    report(
        "garbage generation",
        ok,
        &format!(
            "steps: prune=0 {} (N=40), prune=20 {}, early stopping {} (first completion at 3)",
            off.steps_used, pruned.steps_used, early.steps_used
        ),
    );
}

#[test]
fn monotone_restriction() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let (mut checked, mut violations) = (0, 0);
    for inst in oracle_instances() {
        let free = exhaustive_best(&inst.lm, &inst.vocab, &ConstraintSet::empty(), inst.max_length).unwrap();
        let constrained = exhaustive_best(&inst.lm, &inst.vocab, &inst.set, inst.max_length).unwrap();
        checked += 1;
        if constrained.best_normalized_score > free.best_normalized_score {
            violations += 1;
        }
        // Add one more constraint and compare again.
        let mut phrases = inst.set.phrases().to_vec();
        let extra = rng.random_range(3..inst.vocab.len() as TokenId);
        phrases.push(vec![extra]);
        let wider = ConstraintSet::new(phrases).unwrap();
        let more = exhaustive_best(&inst.lm, &inst.vocab, &wider, inst.max_length).unwrap();
        checked += 1;
        if more.best_normalized_score > constrained.best_normalized_score {
            violations += 1;
        }
    }
    report(
        "monotone restriction",
        violations == 0,
        &format!("{violations} violations in {checked} oracle comparisons"),
    );
}

#[test]
fn pearson_fixtures() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let pairs = |xs: &[f64], ys: &[f64]| -> Vec<PlacementPair> {
        xs.iter()
            .zip(ys)
            .map(|(&ref_pos, &out_pos)| PlacementPair { ref_pos, out_pos })
            .collect()
    };
    let pos = pearson_r(&pairs(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0])).unwrap();
    let neg = pearson_r(&pairs(&[0.0, 0.5, 1.0], &[1.0, 0.5, 0.0])).unwrap();
    let eight = pearson(&[0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, 1.0, 3.0]).unwrap();
    let ok = (pos - 1.0).abs() <= 1e-12 && (neg + 1.0).abs() <= 1e-12 && (eight - 0.8).abs() <= 1e-12;
    report("pearson r", ok, &format!("r = {pos}, {neg}, {eight} (expected 1, -1, 0.8)"));
}
