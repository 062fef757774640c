//! Consistency of model predictions on inferred items with the labels the
//! input items allow.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{COrigin, InferredItem, Pattern, Role};
use crate::meta::{possible_labels, Constraint, LabelSet};
use crate::readings::{Label, Reading};
use crate::tableau::ProverError;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate prediction for {id:?}")]
    DuplicatePrediction { line: usize, id: String },
    #[error("no prediction for item {0:?}")]
    MissingPrediction(String),
    #[error("no antecedent prediction for input item {0:?}")]
    MissingAntecedent(String),
    #[error(transparent)]
    Prover(#[from] ProverError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub item_id: String,
    pub label: Label,
}

pub type Predictions = HashMap<String, Label>;

/// Reads predictions as JSON lines `{"item_id", "label"}` or as
/// tab-separated `item_id<TAB>label`. A TSV header line is skipped.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Predictions, ScoreError> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        let n = i + 1;
        if text.is_empty() {
            continue;
        }
        let prediction = if text.starts_with('{') {
            serde_json::from_str::<Prediction>(text).map_err(|e| ScoreError::Malformed {
                line: n,
                message: e.to_string(),
            })?
        } else {
            let (id, label) = line.split_once('\t').ok_or_else(|| ScoreError::Malformed {
                line: n,
                message: "expected item_id<TAB>label".into(),
            })?;
            if out.is_empty() && id.trim() == "item_id" {
                continue;
            }
            let label = label
                .parse()
                .map_err(|message| ScoreError::Malformed { line: n, message })?;
            Prediction {
                item_id: id.trim().to_owned(),
                label,
            }
        };
        if out.insert(prediction.item_id.clone(), prediction.label).is_some() {
            return Err(ScoreError::DuplicatePrediction {
                line: n,
                id: prediction.item_id,
            });
        }
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Predictions, ScoreError> {
    read_predictions(BufReader::new(File::open(path)?))
}

/// Labels the target pair of `item` may carry given its input labels. The
/// full set means no constraint.
pub fn expected_label_set(reading: Reading, item: &InferredItem) -> Result<LabelSet, ProverError> {
    let inputs: Vec<(Label, Role)> = item.input_items.iter().map(|i| (i.label, i.role)).collect();
    expected_for(reading, item.pattern, &inputs)
}

fn expected_for(reading: Reading, pattern: Pattern, inputs: &[(Label, Role)]) -> Result<LabelSet, ProverError> {
    let constraints: Vec<Constraint> = inputs
        .iter()
        .map(|&(label, role)| {
            let (p, h) = role.pair();
            Constraint::new(label, p, h)
        })
        .collect();
    Ok(possible_labels(reading, &constraints, pattern.target())?.labels)
}

/// One row of a consistency table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternReport {
    /// Input labels in role order.
    pub inputs: Vec<(Label, Role)>,
    pub pattern: Pattern,
    pub c_origin: COrigin,
    pub count: usize,
    /// Predicted E, C, N counts.
    pub counts: [usize; 3],
    pub sc: LabelSet,
    pub ei: LabelSet,
}

impl PatternReport {
    /// `Eab∧Cbc` style.
    pub fn signature(&self) -> String {
        signature(&self.inputs)
    }

    pub fn expected(&self, reading: Reading) -> LabelSet {
        match reading {
            Reading::Ei => self.ei,
            _ => self.sc,
        }
    }

    pub fn constraint(&self, reading: Reading) -> String {
        let (p, h) = self.pattern.target();
        self.expected(reading).constraint_name(Some((p, h)))
    }

    pub fn pct(&self, label: Label) -> f64 {
        share(self.counts[label as usize], self.count)
    }

    /// Predictions inside the expected set, or `None` when the set is full.
    pub fn consistent(&self, reading: Reading) -> Option<usize> {
        let set = self.expected(reading);
        (!set.is_full()).then(|| set.iter().map(|l| self.counts[l as usize]).sum())
    }

    pub fn consistency(&self, reading: Reading) -> Option<f64> {
        self.consistent(reading).map(|k| share(k, self.count))
    }
}

fn share(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn signature(inputs: &[(Label, Role)]) -> String {
    inputs
        .iter()
        .map(|(l, r)| {
            let (p, h) = r.pair();
            format!("{l}{p}{h}")
        })
        .collect::<Vec<_>>()
        .join("∧")
}

/// `100·k/n` rounded half-up to one decimal, e.g. `79.5`. Exact integer
/// arithmetic, so no binary-float ties.
pub fn format_pct(k: usize, n: usize) -> String {
    if n == 0 {
        return "0.0".into();
    }
    let tenths = (2000 * k + n) / (2 * n);
    format!("{}.{}", tenths / 10, tenths % 10)
}

/// A row of the published consistency table: input labels, item kind, and
/// the SC and EI constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedRow {
    pub inputs: &'static str,
    pub pattern: Pattern,
    pub c_origin: COrigin,
    pub sc: &'static str,
    pub ei: &'static str,
}

const fn row(inputs: &'static str, pattern: Pattern, c_origin: COrigin, sc: &'static str, ei: &'static str) -> PublishedRow {
    PublishedRow {
        inputs,
        pattern,
        c_origin,
        sc,
        ei,
    }
}

pub const PUBLISHED_PATTERNS: [PublishedRow; 15] = [
    row("Cab", Pattern::Ba, COrigin::None, "Cba", "¬Eba"),
    row("Eab", Pattern::Ba, COrigin::None, "--", "¬Cba"),
    row("Nab", Pattern::Ba, COrigin::None, "¬Cba", "--"),
    row("Eab∧Ebc", Pattern::Ac, COrigin::G, "Eac", "Eac"),
    row("Eab∧Cbc", Pattern::Ac, COrigin::G, "Cac", "Cac"),
    row("Nab∧Ebc", Pattern::Ac, COrigin::G, "¬Cac", "¬Cac"),
    row("Nab∧Cbc", Pattern::Ac, COrigin::G, "¬Eac", "¬Eac"),
    row("Cab∧Nbc", Pattern::Ca, COrigin::G, "¬Eca", "--"),
    row("Eab∧Ebc", Pattern::Ca, COrigin::G, "--", "¬Cca"),
    row("Eab∧Cbc", Pattern::Ca, COrigin::G, "Cca", "¬Eca"),
    row("Nab∧Ebc", Pattern::Ca, COrigin::G, "¬Cca", "--"),
    row("Eab∧Cac", Pattern::Bc, COrigin::H, "--", "¬Ebc"),
    row("Eab∧Nac", Pattern::Bc, COrigin::H, "Nbc", "Nbc"),
    row("Nab∧Eac", Pattern::Bc, COrigin::H, "¬Cbc", "¬Cbc"),
    row("Nab∧Cac", Pattern::Bc, COrigin::H, "¬Ebc", "¬Ebc"),
];

impl PublishedRow {
    /// Input labels and roles parsed from `inputs`.
    pub fn input_labels(&self) -> Vec<(Label, Role)> {
        self.inputs
            .split('∧')
            .map(|part| {
                let label = part[..1].parse().expect("published label");
                let role = match &part[1..] {
                    "ab" => Role::Ab,
                    "ac" => Role::Ac,
                    _ => Role::Bc,
                };
                (label, role)
            })
            .collect()
    }

    /// Expected sets for this row as (SC, EI), computed by the prover.
    pub fn compute(&self) -> Result<(LabelSet, LabelSet), ProverError> {
        let inputs = self.input_labels();
        Ok((
            expected_for(Reading::Sc, self.pattern, &inputs)?,
            expected_for(Reading::Ei, self.pattern, &inputs)?,
        ))
    }
}

fn block_rank(pattern: Pattern) -> usize {
    match pattern {
        Pattern::Ba => 0,
        Pattern::Ac => 1,
        Pattern::Ca => 2,
        Pattern::Bc => 3,
    }
}

type GroupKey = (Pattern, Vec<(Label, Role)>, COrigin);

/// Aggregates predictions per (input labels, item kind, origin of c).
///
/// With `antecedent` given, only items whose every input item was predicted
/// with its gold label are kept. Every inferred item needs a prediction and,
/// in that mode, every input item an antecedent prediction.
pub fn score(
    inferred: &[InferredItem],
    predictions: &Predictions,
    antecedent: Option<&Predictions>,
) -> Result<Vec<PatternReport>, ScoreError> {
    let mut groups: BTreeMap<GroupKey, (usize, [usize; 3])> = BTreeMap::new();
    for item in inferred {
        let predicted = *predictions
            .get(&item.id)
            .ok_or_else(|| ScoreError::MissingPrediction(item.id.clone()))?;
        if let Some(ante) = antecedent {
            let mut correct = true;
            for input in &item.input_items {
                let p = ante
                    .get(&input.id)
                    .ok_or_else(|| ScoreError::MissingAntecedent(input.id.clone()))?;
                correct &= *p == input.label;
            }
            if !correct {
                continue;
            }
        }
        let mut inputs: Vec<(Label, Role)> = item.input_items.iter().map(|i| (i.label, i.role)).collect();
        inputs.sort_by_key(|&(_, r)| r);
        let entry = groups.entry((item.pattern, inputs, item.c_origin)).or_default();
        entry.0 += 1;
        entry.1[predicted as usize] += 1;
    }

    let mut reports = Vec::with_capacity(groups.len());
    for ((pattern, inputs, c_origin), (count, counts)) in groups {
        reports.push(PatternReport {
            sc: expected_for(Reading::Sc, pattern, &inputs)?,
            ei: expected_for(Reading::Ei, pattern, &inputs)?,
            inputs,
            pattern,
            c_origin,
            count,
            counts,
        });
    }
    reports.sort_by_cached_key(|r| {
        let sig = r.signature();
        let published = PUBLISHED_PATTERNS
            .iter()
            .position(|p| p.pattern == r.pattern && p.inputs == sig && p.c_origin == r.c_origin)
            .unwrap_or(usize::MAX);
        (block_rank(r.pattern), published, sig, r.c_origin)
    });
    Ok(reports)
}

/// Keeps only the rows of the published table.
pub fn published_rows(reports: Vec<PatternReport>) -> Vec<PatternReport> {
    reports
        .into_iter()
        .filter(|r| {
            let sig = r.signature();
            PUBLISHED_PATTERNS
                .iter()
                .any(|p| p.pattern == r.pattern && p.inputs == sig && p.c_origin == r.c_origin)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "input items",
    "item",
    "c",
    "count",
    "E",
    "C",
    "N",
    "SC",
    "SC✓",
    "EI",
    "EI✓",
];

fn cells(r: &PatternReport) -> Vec<String> {
    let mut row = vec![
        r.signature(),
        r.pattern.name().to_owned(),
        match r.c_origin {
            COrigin::None => "--".to_owned(),
            c => c.symbol().to_owned(),
        },
        r.count.to_string(),
    ];
    row.extend(Label::ALL.map(|l| format_pct(r.counts[l as usize], r.count)));
    for reading in [Reading::Sc, Reading::Ei] {
        row.push(r.constraint(reading));
        row.push(match r.consistent(reading) {
            Some(k) => format_pct(k, r.count),
            None => "--".into(),
        });
    }
    row
}

pub fn render_report(reports: &[PatternReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(REPORT_COLUMNS).expect("write to memory");
            for r in reports {
                writer.write_record(cells(r)).expect("write to memory");
            }
            String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 fields")
        }
        ReportFormat::Markdown => {
            let mut out = format!("| {} |\n", REPORT_COLUMNS.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(REPORT_COLUMNS.len())));
            for r in reports {
                out.push_str(&format!("| {} |\n", cells(r).join(" | ")));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::InputItem;

    fn ba(id: usize, label: Label) -> InferredItem {
        InferredItem {
            id: format!("ba:{id}"),
            pattern: Pattern::Ba,
            premise: "b".into(),
            hypothesis: "a".into(),
            input_items: vec![InputItem {
                id: id.to_string(),
                label,
                role: Role::Ab,
            }],
            c_origin: COrigin::None,
        }
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(format_pct(8, 10), "80.0");
        assert_eq!(format_pct(1, 8), "12.5");
        assert_eq!(format_pct(1, 16), "6.3");
        assert_eq!(format_pct(2, 3), "66.7");
        assert_eq!(format_pct(1, 2000), "0.1");
        assert_eq!(format_pct(1, 2001), "0.0");
        assert_eq!(format_pct(5, 5), "100.0");
    }

    #[test]
    fn expected_sets() {
        let item = ba(1, Label::C);
        assert_eq!(expected_label_set(Reading::Ei, &item).unwrap().constraint_name(Some(("b", "a"))), "¬Eba");
        assert!(expected_label_set(Reading::Sc, &ba(1, Label::E)).unwrap().is_full());
    }

    #[test]
    fn published_rows_reproduce() {
        for row in PUBLISHED_PATTERNS {
            let (sc, ei) = row.compute().unwrap();
            let target = Some(row.pattern.target());
            assert_eq!(sc.constraint_name(target), row.sc, "SC {} {}", row.inputs, row.pattern.name());
            assert_eq!(ei.constraint_name(target), row.ei, "EI {} {}", row.inputs, row.pattern.name());
        }
    }

    #[test]
    fn predictions_both_formats() {
        let tsv = "item_id\tlabel\nba:1\tcontradiction\nba:2\tN\n";
        let p = read_predictions(tsv.as_bytes()).unwrap();
        assert_eq!(p["ba:1"], Label::C);
        assert_eq!(p["ba:2"], Label::N);
        let jsonl = "{\"item_id\":\"x\",\"label\":\"entailment\"}\n\n{\"item_id\":\"x\",\"label\":\"E\"}\n";
        assert!(matches!(
            read_predictions(jsonl.as_bytes()),
            Err(ScoreError::DuplicatePrediction { line: 3, .. })
        ));
        assert!(matches!(
            read_predictions("a b\n".as_bytes()),
            Err(ScoreError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let items = [ba(1, Label::C)];
        assert!(matches!(
            score(&items, &Predictions::new(), None),
            Err(ScoreError::MissingPrediction(_))
        ));
        let preds = Predictions::from([("ba:1".to_owned(), Label::C)]);
        assert!(matches!(
            score(&items, &preds, Some(&Predictions::new())),
            Err(ScoreError::MissingAntecedent(_))
        ));
    }

    #[test]
    fn render_empty_and_markdown() {
        assert_eq!(
            render_report(&[], ReportFormat::Csv),
            "input items,item,c,count,E,C,N,SC,SC✓,EI,EI✓\n"
        );
        let items: Vec<_> = (0..4).map(|i| ba(i, Label::E)).collect();
        let preds = items.iter().map(|i| (i.id.clone(), Label::N)).collect();
        let reports = score(&items, &preds, None).unwrap();
        let md = render_report(&reports, ReportFormat::Markdown);
        assert_eq!(
            md.lines().nth(2).unwrap(),
            "| Eab | ba | -- | 4 | 0.0 | 0.0 | 100.0 | -- | -- | ¬Cba | 100.0 |"
        );
    }
}
