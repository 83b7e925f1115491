//! Tokenisation and vocabulary.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::jats::CITE_TOKEN;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const CITE: usize = 2;

const SPECIALS: [&str; 3] = ["<pad>", "<unk>", CITE_TOKEN];

/// Lower-cased alphanumeric runs; `[CITE]` is kept as one token.
///
/// ```
/// use citeaz::ingest::tokenize;
///
/// assert_eq!(tokenize("The [CITE] works."), vec!["the", "[CITE]", "works"]);
/// assert_eq!(tokenize("RFP-tagged DCP1a"), vec!["rfp", "tagged", "dcp1a"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for (i, piece) in text.split(CITE_TOKEN).enumerate() {
        if i > 0 {
            tokens.push(CITE_TOKEN.to_string());
        }
        tokens.extend(
            piece
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_lowercase),
        );
    }
    tokens
}

/// Dense token index with `<pad>` = 0, `<unk>` = 1 and `[CITE]` = 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    min_frequency: usize,
    tokens: Vec<String>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(file: VocabularyFile) -> Result<Self> {
        if file.tokens.len() < SPECIALS.len() || file.tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::Config("vocabulary must start with <pad>, <unk>, [CITE]".into()));
        }
        let mut v = Vocabulary::with_tokens(file.tokens[SPECIALS.len()..].iter().cloned());
        v.min_frequency = file.min_frequency;
        if v.tokens.len() != file.tokens.len() {
            return Err(Error::Config("vocabulary contains duplicate tokens".into()));
        }
        Ok(v)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            min_frequency: v.min_frequency,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    /// Specials followed by `tokens` in order; duplicates and specials are skipped.
    pub fn with_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
            min_frequency: 1,
        };
        for t in SPECIALS.iter().map(|s| s.to_string()).chain(tokens.into_iter().map(Into::into)) {
            if !v.index.contains_key(&t) {
                v.index.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    /// Tokens seen at least `min_frequency` times across `texts`, ordered by
    /// descending count then token.
    pub fn build<'a, I>(texts: I, min_frequency: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for t in tokenize(text) {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_frequency.max(1) && !SPECIALS.contains(&t.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut v = Vocabulary::with_tokens(kept.into_iter().map(|(t, _)| t));
        v.min_frequency = min_frequency;
        v
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// Index of `token`, or [`OOV`].
    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// SHA-256 over the ordered token list, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// A fixed-length index sequence and the number of real tokens in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoded {
    pub indices: Vec<usize>,
    pub true_len: usize,
}

/// Tokenises, maps to indices, then truncates or pads with [`PAD`] to `max_len`.
///
/// ```
/// use citeaz::ingest::{tokenize_encode, Vocabulary, CITE, PAD};
///
/// let vocab = Vocabulary::with_tokens(["the", "works"]);
/// let enc = tokenize_encode("The [CITE] works.", &vocab, 5).unwrap();
/// assert_eq!(enc.indices, vec![3, CITE, 4, PAD, PAD]);
/// assert_eq!(enc.true_len, 3);
/// ```
pub fn tokenize_encode(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<Encoded> {
    if max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let mut indices: Vec<usize> = tokenize(text)
        .iter()
        .take(max_len)
        .map(|t| vocab.index_of(t))
        .collect();
    let true_len = indices.len();
    indices.resize(max_len, PAD);
    Ok(Encoded { indices, true_len })
}
