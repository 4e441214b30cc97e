//! Token/id mapping and whitespace (de)tokenization.
//!
//! A vocabulary file is UTF-8 text with one token per line; the line number
//! is the id, and the first three lines are the BOS, EOS and UNK surfaces.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::TokenId;

pub const BOS_SURFACE: &str = "<s>";
pub const EOS_SURFACE: &str = "</s>";
pub const UNK_SURFACE: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    bos: TokenId,
    eos: TokenId,
    unk: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered token list with explicit reserved ids.
    pub fn new(tokens: Vec<String>, bos: TokenId, eos: TokenId, unk: TokenId) -> Result<Self> {
        if bos == eos || bos == unk || eos == unk {
            return Err(Error::Vocab(format!(
                "reserved ids must be distinct (bos={bos}, eos={eos}, unk={unk})"
            )));
        }
        for id in [bos, eos, unk] {
            if id as usize >= tokens.len() {
                return Err(Error::Vocab(format!(
                    "reserved id {id} outside vocabulary of size {}",
                    tokens.len()
                )));
            }
        }
        if tokens.len() > TokenId::MAX as usize {
            return Err(Error::Vocab("too many tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Vocab(format!(
                    "token {id} ({tok:?}) is empty or contains whitespace"
                )));
            }
            if index.insert(tok.clone(), id as TokenId).is_some() {
                return Err(Error::Vocab(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Self {
            tokens,
            index,
            bos,
            eos,
            unk,
        })
    }

    /// Standard layout: `<s>`, `</s>`, `<unk>` at ids 0, 1, 2 followed by `words`.
    pub fn with_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens = vec![
            BOS_SURFACE.to_string(),
            EOS_SURFACE.to_string(),
            UNK_SURFACE.to_string(),
        ];
        tokens.extend(words.into_iter().map(Into::into));
        Self::new(tokens, 0, 1, 2)
    }

    /// Standard layout padded with generated words `w3`, `w4`, ... up to `size` ids.
    pub fn synthetic(size: usize) -> Result<Self> {
        if size < 4 {
            return Err(Error::Vocab(format!("synthetic vocabulary needs at least 4 ids, got {size}")));
        }
        Self::with_words((3..size).map(|i| format!("w{i}")))
    }

    pub fn from_lines(text: &str) -> Result<Self> {
        let tokens: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_string())
            .collect();
        if tokens.len() < 3 {
            return Err(Error::Vocab(
                "vocabulary file must start with BOS, EOS and UNK lines".into(),
            ));
        }
        Self::new(tokens, 0, 1, 2)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Vocab(format!("{}: {e}", path.display())))?;
        Self::from_lines(&text)
    }

    /// Serializes in file format. Only meaningful for the standard layout.
    pub fn to_lines(&self) -> String {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if (self.bos, self.eos, self.unk) != (0, 1, 2) {
            return Err(Error::Vocab(
                "only vocabularies with BOS/EOS/UNK at ids 0/1/2 can be saved".into(),
            ));
        }
        fs::write(path, self.to_lines())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens a scorer may generate: every id except BOS.
    pub fn target_size(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn bos(&self) -> TokenId {
        self.bos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn unk(&self) -> TokenId {
        self.unk
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Id of `surface`, or `None` when it is not in the vocabulary.
    pub fn get(&self, surface: &str) -> Option<TokenId> {
        self.index.get(surface).copied()
    }

    /// Id of `surface`, mapping unknown surfaces to UNK.
    pub fn lookup(&self, surface: &str) -> TokenId {
        self.get(surface).unwrap_or(self.unk)
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|s| self.lookup(s)).collect()
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            let surface = self.surface(id).ok_or(Error::TokenOutOfRange {
                id,
                size: self.len(),
            })?;
            if id == self.bos || id == self.eos {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(surface);
        }
        Ok(out)
    }
}
