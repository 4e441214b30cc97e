//! Decode request/response records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TokenId;

/// One line of decode input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeRequest {
    #[serde(default)]
    pub id: Option<String>,
    /// Source sentence. Language-model scorers ignore it.
    #[serde(default)]
    pub text: Option<String>,
    /// Whitespace-separated phrases that must appear in the output.
    #[serde(default)]
    pub constraints: Vec<String>,
}

impl DecodeRequest {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.constraints.iter().enumerate() {
            if c.trim().is_empty() {
                return Err(Error::InvalidConstraint(format!("constraint {i} is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub id: String,
    /// Full hypothesis, BOS first and EOS last when it finished.
    pub output_tokens: Vec<TokenId>,
    pub output_text: String,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub constraints_met: bool,
    pub steps_used: usize,
}

impl DecodeResult {
    /// Number of generated tokens: everything after BOS, EOS included.
    pub fn generated_len(&self) -> usize {
        self.output_tokens.len().saturating_sub(1)
    }
}

/// `raw / max(1, generated)`.
pub fn normalize(raw: f64, generated: usize) -> f64 {
    raw / generated.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full_lines() {
        let r: DecodeRequest = serde_json::from_str(r#"{"constraints":["b"]}"#).unwrap();
        assert_eq!(r.id, None);
        assert_eq!(r.constraints, vec!["b"]);
        let r: DecodeRequest =
            serde_json::from_str(r#"{"id":"1","text":"x","constraints":["a b","c"]}"#).unwrap();
        assert_eq!(r.id.as_deref(), Some("1"));
        assert_eq!(r.text.as_deref(), Some("x"));
        r.validate().unwrap();
    }

    #[test]
    fn blank_constraint_is_invalid() {
        let r = DecodeRequest {
            constraints: vec!["  ".into()],
            ..Default::default()
        };
        assert!(matches!(r.validate(), Err(Error::InvalidConstraint(_))));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize(-12.0, 6), -2.0);
        assert_eq!(normalize(-3.0, 0), -3.0);
    }
}
