use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{write_string, Error, Result};

/// Coarse question class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoarseLabel {
    #[serde(rename = "ABBR")]
    Abbreviation,
    #[serde(rename = "DESC")]
    Description,
    #[serde(rename = "NUM")]
    Number,
    #[serde(rename = "ENTY")]
    Entity,
    #[serde(rename = "HUM")]
    Human,
    #[serde(rename = "LOC")]
    Location,
}

impl CoarseLabel {
    pub const ALL: [CoarseLabel; 6] = [
        CoarseLabel::Abbreviation,
        CoarseLabel::Description,
        CoarseLabel::Number,
        CoarseLabel::Entity,
        CoarseLabel::Human,
        CoarseLabel::Location,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|l| *l == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            CoarseLabel::Abbreviation => "ABBR",
            CoarseLabel::Description => "DESC",
            CoarseLabel::Number => "NUM",
            CoarseLabel::Entity => "ENTY",
            CoarseLabel::Human => "HUM",
            CoarseLabel::Location => "LOC",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            CoarseLabel::Abbreviation => "abbreviation",
            CoarseLabel::Description => "description",
            CoarseLabel::Number => "number",
            CoarseLabel::Entity => "entity",
            CoarseLabel::Human => "human",
            CoarseLabel::Location => "location",
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CoarseLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| format!("unknown coarse label {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSentence {
    pub coarse: CoarseLabel,
    /// Fine-grained label; kept for round-tripping, not used for training.
    pub fine: String,
    /// Raw whitespace tokens.
    pub tokens: Vec<String>,
}

impl LabeledSentence {
    pub fn to_line(&self) -> String {
        format!("{}:{} {}", self.coarse, self.fine, self.tokens.join(" "))
    }
}

/// Parses `COARSE:fine question text` lines. Blank lines are skipped.
pub fn parse_corpus_str(text: &str, origin: &str) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (label, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(origin, line_no, "expected `COARSE:fine question`"))?;
        let (coarse, fine) = label
            .split_once(':')
            .ok_or_else(|| Error::parse(origin, line_no, format!("label {label:?} lacks `:`")))?;
        let coarse: CoarseLabel = coarse
            .parse()
            .map_err(|e: String| Error::parse(origin, line_no, e))?;
        let tokens: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(Error::parse(origin, line_no, "question has no tokens"));
        }
        out.push(LabeledSentence {
            coarse,
            fine: fine.to_string(),
            tokens,
        });
    }
    Ok(out)
}

/// Reads a corpus file. Bytes that are not UTF-8 are replaced rather than
/// rejected; the public question files contain a few Latin-1 characters.
pub fn parse_corpus(path: &Path) -> Result<Vec<LabeledSentence>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_str(
        &String::from_utf8_lossy(&bytes),
        &path.display().to_string(),
    )
}

pub fn serialize_corpus(sentences: &[LabeledSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, sentences: &[LabeledSentence]) -> Result<()> {
    write_string(path, &serialize_corpus(sentences))
}

/// Lowercases every token and drops tokens made only of punctuation.
/// Punctuation inside a word (`ibm's`, `u.s.`) is kept.
pub fn preprocess<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .map(str::to_lowercase)
        .collect()
}

/// Whitespace tokenization followed by [`preprocess`].
pub fn tokenize(text: &str) -> Vec<String> {
    preprocess(&text.split_whitespace().collect::<Vec<_>>())
}
