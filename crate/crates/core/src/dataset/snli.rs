//! SNLI JSON-lines reader.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{read_jsonl_numbered, DatasetError, NliItem, Source};
use crate::readings::Label;

// Extra SNLI fields (parses, annotator ids) are ignored.
#[derive(Deserialize)]
struct RawSnli {
    sentence1: String,
    sentence2: String,
    gold_label: String,
    #[serde(default)]
    annotator_labels: Vec<String>,
    #[serde(rename = "pairID")]
    pair_id: String,
    #[serde(rename = "captionID", default)]
    caption_id: Option<String>,
}

pub fn load_snli(path: impl AsRef<Path>) -> Result<Vec<NliItem>, DatasetError> {
    read_snli(BufReader::new(File::open(path)?))
}

pub fn read_snli<R: BufRead>(reader: R) -> Result<Vec<NliItem>, DatasetError> {
    let raw: Vec<(usize, RawSnli)> = read_jsonl_numbered(reader)?;
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|(line, r)| {
            let gold_label = match r.gold_label.trim() {
                "-" => None,
                other => Some(parse_snli_label(other).ok_or_else(|| DatasetError::UnknownLabel {
                    line,
                    label: r.gold_label.clone(),
                })?),
            };
            if !seen.insert(r.pair_id.clone()) {
                return Err(DatasetError::DuplicateId { line, id: r.pair_id });
            }
            Ok(NliItem {
                id: r.pair_id,
                premise: r.sentence1,
                hypothesis: r.sentence2,
                gold_label,
                annotator_labels: r.annotator_labels,
                caption_id: r.caption_id.filter(|c| !c.is_empty()),
                source: Source::Snli,
            })
        })
        .collect()
}

fn parse_snli_label(s: &str) -> Option<Label> {
    match s {
        "entailment" => Some(Label::E),
        "contradiction" => Some(Label::C),
        "neutral" => Some(Label::N),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, label: &str) -> String {
        format!(
            r#"{{"annotator_labels":["neutral"],"captionID":"3416050480.jpg#4","gold_label":"{label}","pairID":"{id}","sentence1":"A person on a horse jumps over a broken down airplane.","sentence1_parse":"(ROOT)","sentence2":"A person is training his horse for a competition."}}"#
        )
    }

    #[test]
    fn maps_labels() {
        let text = [line("1", "entailment"), line("2", "-"), String::new(), line("3", "neutral")].join("\n");
        let items = read_snli(text.as_bytes()).unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].gold_label, Some(Label::E));
        assert_eq!(items[1].gold_label, None);
        assert_eq!(items[2].caption_id.as_deref(), Some("3416050480.jpg#4"));
        assert_eq!(items[2].annotator_labels, vec!["neutral"]);
    }

    #[test]
    fn empty_input() {
        assert!(read_snli("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = [line("1", "entailment"), line("2", "maybe")].join("\n");
        assert!(matches!(
            read_snli(text.as_bytes()),
            Err(DatasetError::UnknownLabel { line: 2, .. })
        ));
        let text = [line("1", "entailment"), line("1", "neutral")].join("\n");
        assert!(matches!(
            read_snli(text.as_bytes()),
            Err(DatasetError::DuplicateId { line: 2, .. })
        ));
        let text = format!("{}\n{{\"sentence1\":\"x\"}}", line("1", "neutral"));
        assert!(matches!(
            read_snli(text.as_bytes()),
            Err(DatasetError::Malformed { line: 2, .. })
        ));
    }
}
