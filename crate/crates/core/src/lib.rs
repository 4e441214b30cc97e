//! Lexically constrained beam search.
//!
//! A decoder that forces given words and phrases into the output of a
//! next-token scorer. Besides plain beam search it implements dynamic beam
//! allocation (DBA), which splits one fixed-size beam across "banks" of
//! hypotheses grouped by how many constraint tokens they have met, and grid
//! beam search (GBS), which keeps a full beam per bank.
//!
//! ```
//! use lexbeam::{decode, ConstraintSet, DecodeConfig, UniformScorer, Vocabulary};
//!
//! let vocab = Vocabulary::with_words(["a", "b", "c"]).unwrap();
//! let b = vocab.get("b").unwrap();
//! let set = ConstraintSet::new(vec![vec![b]]).unwrap();
//! let result = decode(&UniformScorer::new(&vocab), &vocab, &set, &DecodeConfig::default(), None).unwrap();
//! assert!(result.constraints_met);
//! assert_eq!(result.output_text, "b");
//! ```

pub mod analysis;
pub mod cli;
pub mod constraints;
pub mod decoder;
pub mod error;
pub mod oracle;
pub mod request;
pub mod scorer;
pub mod vocab;

/// Index into a [`Vocabulary`].
pub type TokenId = u32;

pub use constraints::{ConstraintSet, ConstraintState, ParsedConstraints};
pub use decoder::{decode, decode_observed, decode_request, Algorithm, DecodeConfig, StepTrace};
pub use error::{Error, Result};
pub use oracle::{exhaustive_best, OracleResult};
pub use request::{DecodeRequest, DecodeResult};
pub use scorer::{
    CallbackScorer, NGramLm, ScoreMatrix, Scorer, SyntheticScorer, TableScorer, UniformScorer,
};
pub use vocab::Vocabulary;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
