mod common;

use common::{abort_fixture, garbage_fixture, random_lm, rescore};
use lexbeam::oracle::output_satisfies;
use lexbeam::{decode, decode_observed, Algorithm, ConstraintSet, DecodeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn garbage_config(prune: f64, early: bool) -> DecodeConfig {
    DecodeConfig {
        beam_size: 2,
        max_length: 40,
        prune_threshold: prune,
        early_stopping: early,
        ..DecodeConfig::default()
    }
}

#[test]
fn garbage_runs_to_max_length_without_pruning() {
    let (v, t) = garbage_fixture(40);
    let r = decode(&t, &v, &ConstraintSet::empty(), &garbage_config(0.0, false), None).unwrap();
    assert_eq!(r.output_text, "a b");
    assert_eq!(r.steps_used, 40);
}

#[test]
fn garbage_is_pruned_away() {
    let (v, t) = garbage_fixture(40);
    let r = decode(&t, &v, &ConstraintSet::empty(), &garbage_config(20.0, false), None).unwrap();
    assert_eq!(r.output_text, "a b");
    // g^t scores ln 0.5 + (t-1) ln 0.4, which first drops below ln 0.5 - 20 at t = 23.
    assert_eq!(r.steps_used, 23);
}

#[test]
fn garbage_early_stopping() {
    let (v, t) = garbage_fixture(40);
    let r = decode(&t, &v, &ConstraintSet::empty(), &garbage_config(0.0, true), None).unwrap();
    assert_eq!(r.output_text, "a b");
    assert_eq!(r.steps_used, 3);
}

#[test]
fn phrase_is_aborted_then_completed() {
    let (v, t) = abort_fixture();
    let (a, b, c) = (v.get("a").unwrap(), v.get("b").unwrap(), v.get("c").unwrap());
    let set = ConstraintSet::new(vec![vec![a, b]]).unwrap();
    let config = DecodeConfig {
        beam_size: 4,
        max_length: 8,
        ..DecodeConfig::default()
    };
    let mut banks_of_best_path = Vec::new();
    let r = decode_observed(&t, &v, &set, &config, None, &mut |tr| {
        let path = [v.bos(), a, c, a, b];
        let want = &path[..=tr.step.min(4)];
        if let Some(h) = tr.beam.iter().find(|h| h.tokens == want) {
            banks_of_best_path.push(h.bank());
        }
    })
    .unwrap();
    assert_eq!(r.output_text, "a c a b");
    assert!(r.constraints_met);
    // a: started; c: unwound; a: restarted; b: completed.
    assert_eq!(banks_of_best_path[..4], [1, 0, 1, 2]);
    assert!((rescore(&t, &r.output_tokens) - r.raw_score).abs() < 1e-12);
}

#[test]
fn algorithms_agree_without_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (v, lm) = random_lm(&mut rng, 6, 3);
        let base = DecodeConfig {
            beam_size: rng.random_range(1..6),
            max_length: 10,
            ..DecodeConfig::default()
        };
        let beam = decode(&lm, &v, &ConstraintSet::empty(), &DecodeConfig { algorithm: Algorithm::Beam, ..base.clone() }, None).unwrap();
        let dba = decode(&lm, &v, &ConstraintSet::empty(), &base, None).unwrap();
        assert_eq!(beam, dba);
    }
}

#[test]
fn gbs_satisfies_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let (v, lm) = random_lm(&mut rng, 8, 3);
        let phrases: Vec<Vec<u32>> = (0..rng.random_range(1..4))
            .map(|_| (0..rng.random_range(1..3)).map(|_| rng.random_range(3..v.len() as u32)).collect())
            .collect();
        let set = ConstraintSet::new(phrases).unwrap();
        let config = DecodeConfig {
            algorithm: Algorithm::Gbs,
            gbs_base_beam: 3,
            max_length: 20,
            ..DecodeConfig::default()
        };
        let r = decode(&lm, &v, &set, &config, None).unwrap();
        if r.constraints_met {
            assert!(output_satisfies(&r.output_tokens, &v, &set));
        }
        assert!((rescore(&lm, &r.output_tokens) - r.raw_score).abs() < 1e-9);
    }
}

#[test]
fn concurrent_decodes_share_scorer() {
    let (v, t) = abort_fixture();
    let set = ConstraintSet::new(vec![vec![v.get("a").unwrap(), v.get("b").unwrap()]]).unwrap();
    let config = DecodeConfig::default();
    let expected = decode(&t, &v, &set, &config, None).unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| decode(&t, &v, &set, &config, None).unwrap())).collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    });
}
