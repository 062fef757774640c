//! NLI items, the inferred test set built from them, and LLM generation of
//! new hypotheses.
//!
//! All files are JSON lines. Blank lines are ignored on input.

pub mod build;
pub mod generate;
pub mod snli;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::readings::Label;

pub use build::{build_inferred, group_by_premise, BuildOptions, BuildOutput, GroupKey, SkipEntry};
pub use generate::{generate_items, ChatTransport, GenerationConfig, GenerationOutcome, PromptTemplate};
pub use snli::{load_snli, read_snli};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Snli,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NliItem {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    /// `None` when annotators reached no consensus (`-` in SNLI).
    pub gold_label: Option<Label>,
    /// Raw annotator strings, kept as given.
    pub annotator_labels: Vec<String>,
    pub caption_id: Option<String>,
    pub source: Source,
}

/// An item whose premise is the hypothesis of an SNLI item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedItem {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    pub source_item_id: String,
    pub generator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// (b, a) from an SNLI item (a, b).
    Ba,
    /// (b, c) from two SNLI items (a, b) and (a, c).
    Bc,
    /// (a, c) from an SNLI item (a, b) and a generated item (b, c).
    Ac,
    /// (c, a) from the same inputs as `Ac`.
    Ca,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::Ba, Pattern::Bc, Pattern::Ac, Pattern::Ca];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Ba => "ba",
            Pattern::Bc => "bc",
            Pattern::Ac => "ac",
            Pattern::Ca => "ca",
        }
    }

    /// Sentence names of the target pair.
    pub fn target(self) -> (&'static str, &'static str) {
        match self {
            Pattern::Ba => ("b", "a"),
            Pattern::Bc => ("b", "c"),
            Pattern::Ac => ("a", "c"),
            Pattern::Ca => ("c", "a"),
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pattern {s:?}"))
    }
}

/// Which sentence pair an input item labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ab,
    Ac,
    Bc,
}

impl Role {
    pub fn pair(self) -> (&'static str, &'static str) {
        match self {
            Role::Ab => ("a", "b"),
            Role::Ac => ("a", "c"),
            Role::Bc => ("b", "c"),
        }
    }
}

/// Where sentence c came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum COrigin {
    /// An SNLI hypothesis.
    H,
    /// A generated hypothesis.
    G,
    /// No sentence c.
    None,
}

impl COrigin {
    pub fn symbol(self) -> &'static str {
        match self {
            COrigin::H => "h",
            COrigin::G => "g",
            COrigin::None => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputItem {
    pub id: String,
    pub label: Label,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferredItem {
    pub id: String,
    pub pattern: Pattern,
    pub premise: String,
    pub hypothesis: String,
    pub input_items: Vec<InputItem>,
    pub c_origin: COrigin,
}

/// Reads JSON lines, one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, DatasetError> {
    read_jsonl_numbered(reader).map(|v| v.into_iter().map(|(_, x)| x).collect())
}

pub(crate) fn read_jsonl_numbered<T: DeserializeOwned, R: BufRead>(
    reader: R,
) -> Result<Vec<(usize, T)>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn load_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, DatasetError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

pub fn save_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> io::Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), items)
}

pub fn load_generated(path: impl AsRef<Path>) -> Result<Vec<GeneratedItem>, DatasetError> {
    load_jsonl(path)
}

pub fn load_inferred(path: impl AsRef<Path>) -> Result<Vec<InferredItem>, DatasetError> {
    load_jsonl(path)
}
