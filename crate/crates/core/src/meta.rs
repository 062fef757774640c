//! Meta-inferential relations between NLI labels: the 21-statement catalog
//! with its expected status under each reading, a classifier, residual
//! verification, and the possible-label deriver.

use std::fmt;

use thiserror::Error;

use crate::formula::{parse, Formula};
use crate::kripke::KripkeModel;
use crate::readings::{encode, Label, Reading};
use crate::tableau::{Prover, ProverError, Verdict};

/// A meta-inference schema over relation literals such as `Eab` or `¬Cba`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schema {
    Relation {
        label: Label,
        premise: String,
        hypothesis: String,
    },
    Not(Box<Schema>),
    And(Box<Schema>, Box<Schema>),
    Implies(Box<Schema>, Box<Schema>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad schema {text:?}: {reason}")]
pub struct SchemaError {
    pub text: String,
    pub reason: String,
}

impl Schema {
    /// Parses the catalog notation: `Eab ∧ Cbc → ¬Cac`. Atoms are single
    /// lowercase letters; `∧` binds tighter than `→`.
    pub fn parse(text: &str) -> Result<Schema, SchemaError> {
        let err = |reason: &str| SchemaError {
            text: text.to_owned(),
            reason: reason.to_owned(),
        };
        let literal = |lit: &str| -> Result<Schema, SchemaError> {
            let lit = lit.trim();
            let (negated, body) = match lit.strip_prefix('¬').or_else(|| lit.strip_prefix('~')) {
                Some(rest) => (true, rest.trim()),
                None => (false, lit),
            };
            let chars: Vec<char> = body.chars().collect();
            if chars.len() != 3 || !chars[1].is_ascii_lowercase() || !chars[2].is_ascii_lowercase() {
                return Err(err(&format!("expected a relation like Eab, found {body:?}")));
            }
            let label: Label = chars[0].to_string().parse().map_err(|e: String| err(&e))?;
            let rel = Schema::Relation {
                label,
                premise: chars[1].to_string(),
                hypothesis: chars[2].to_string(),
            };
            Ok(if negated { Schema::Not(Box::new(rel)) } else { rel })
        };
        let conjunction = |part: &str| -> Result<Schema, SchemaError> {
            part.split(['∧', '&'])
                .map(literal)
                .reduce(|l, r| Ok(Schema::And(Box::new(l?), Box::new(r?))))
                .unwrap_or_else(|| Err(err("empty conjunction")))
        };
        let parts: Vec<&str> = text.split("→").flat_map(|p| p.split("->")).collect();
        match parts.as_slice() {
            [single] => conjunction(single),
            [lhs, rhs] => Ok(Schema::Implies(Box::new(conjunction(lhs)?), Box::new(conjunction(rhs)?))),
            _ => Err(err("at most one implication is supported")),
        }
    }

    pub fn instantiate(&self, reading: Reading) -> Formula {
        match self {
            Schema::Relation {
                label,
                premise,
                hypothesis,
            } => encode(reading, *label, premise, hypothesis),
            Schema::Not(s) => Formula::not(s.instantiate(reading)),
            Schema::And(l, r) => Formula::and(l.instantiate(reading), r.instantiate(reading)),
            Schema::Implies(l, r) => Formula::implies(l.instantiate(reading), r.instantiate(reading)),
        }
    }

    /// Left operand of a top-level implication.
    pub fn antecedent(&self) -> Option<&Schema> {
        match self {
            Schema::Implies(l, _) => Some(l),
            _ => None,
        }
    }
}

/// Groups of the catalog, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    SamePair,
    Swap,
    Chain,
    ReverseChain,
    SharedPremise,
}

/// Expected cell value as published.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Valid,
    Contradictory,
    VacuouslyTrue,
    /// Residual formula text; `name` is the Greek-letter alias, if any.
    Residual { name: Option<&'static str>, text: &'static str },
}

impl Expected {
    pub fn residual(&self) -> Option<Formula> {
        match self {
            Expected::Residual { text, .. } => Some(parse(text).expect("catalog residuals parse")),
            _ => None,
        }
    }

    pub fn symbol(&self) -> String {
        match self {
            Expected::Valid => "✓".into(),
            Expected::Contradictory => "⊥".into(),
            Expected::VacuouslyTrue => "∅".into(),
            Expected::Residual { name: Some(n), .. } => (*n).into(),
            Expected::Residual { name: None, text } => parse(text).unwrap().render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaStatement {
    pub name: &'static str,
    pub schema: Schema,
    pub block: Block,
    /// Literature attribution marks (★ † ‡); inert.
    pub marks: &'static str,
    /// Expected status under MC, SC and EI.
    pub expected: [Expected; 3],
}

impl MetaStatement {
    pub fn expected(&self, reading: Reading) -> Expected {
        self.expected[reading as usize]
    }

    pub fn instantiate(&self, reading: Reading) -> Formula {
        self.schema.instantiate(reading)
    }
}

const ALPHA: &str = "◇(b ∨ ¬a ∧ c) ∨ □(¬a ∨ ¬c)";
const BETA: &str = "□(¬a ∨ ¬b) ∨ ◇(a ∧ ¬b ∨ c)";
const GAMMA: &str = "□(¬b ∨ ¬c) ∨ ◇(a ∨ b ∧ ¬c) ∨ ◇(a ∧ c)";
const DELTA: &str = "□(a ∨ ¬b ∨ ¬c) ∨ ◇(a ∧ (¬b ∨ c))";
const EPSILON: &str = "□(a ∨ ¬b ∨ ¬c) ∨ ◇(a ∧ (¬b ∨ c)) ∨ □(¬a ∨ c)";

/// Greek-letter residuals and their formulas.
pub const GREEK_RESIDUALS: [(&str, &str); 5] = [
    ("α", ALPHA),
    ("β", BETA),
    ("γ", GAMMA),
    ("δ", DELTA),
    ("ε", EPSILON),
];

const fn res(text: &'static str) -> Expected {
    Expected::Residual { name: None, text }
}

const fn greek(name: &'static str, text: &'static str) -> Expected {
    Expected::Residual { name: Some(name), text }
}

use Expected::{Contradictory as BOT, VacuouslyTrue as VAC, Valid as OK};

#[rustfmt::skip]
const CATALOG: [(&str, Block, &str, [Expected; 3]); 21] = [
    ("Eaa", Block::SamePair, "★", [OK, OK, res("◇a")]),
    ("Caa", Block::SamePair, "", [res("¬a"), res("¬◇a"), BOT]),
    ("Naa", Block::SamePair, "", [BOT, BOT, res("¬◇a")]),
    ("Cab → Cba", Block::Swap, "★,†", [OK, OK, res("¬◇a ∨ ◇b")]),
    ("Cab → ¬Eba", Block::Swap, "", [res("b"), res("◇b"), OK]),
    ("Eab → ¬Cba", Block::Swap, "★", [res("a"), res("◇a"), OK]),
    ("Nab → ¬Cba", Block::Swap, "★", [VAC, OK, res("◇a ∨ ¬◇b")]),
    ("Eab ∧ Ebc → Eac", Block::Chain, "★,†", [OK, OK, OK]),
    ("Eab ∧ Cbc → Cac", Block::Chain, "†", [OK, OK, OK]),
    ("Nab ∧ Ebc → ¬Cac", Block::Chain, "†", [VAC, OK, OK]),
    ("Nab ∧ Cbc → ¬Eac", Block::Chain, "†", [VAC, OK, OK]),
    ("Cab ∧ Nbc → ¬Eca", Block::ReverseChain, "", [VAC, OK, greek("α", ALPHA)]),
    ("Eab ∧ Ebc → ¬Cca", Block::ReverseChain, "", [res("a"), res("◇a"), OK]),
    ("Eab ∧ Cbc → Cca", Block::ReverseChain, "", [OK, OK, greek("β", BETA)]),
    ("Eab ∧ Cbc → ¬Eca", Block::ReverseChain, "", [res("a ∧ ¬b ∨ c"), res("◇(a ∧ ¬b ∨ c)"), OK]),
    ("Nab ∧ Ebc → ¬Cca", Block::ReverseChain, "", [VAC, OK, greek("γ", GAMMA)]),
    ("Eab ∧ Cac → ¬Ebc", Block::SharedPremise, "", [res("a ∨ b ∧ ¬c"), res("◇(a ∨ b ∧ ¬c)"), OK]),
    ("Eab ∧ Cac → Cbc", Block::SharedPremise, "‡", [res("a ∨ ¬b ∨ ¬c"), greek("δ", DELTA), greek("ε", EPSILON)]),
    ("Eab ∧ Nac → Nbc", Block::SharedPremise, "", [VAC, OK, OK]),
    ("Nab ∧ Eac → ¬Cbc", Block::SharedPremise, "", [VAC, OK, OK]),
    ("Nab ∧ Cac → ¬Ebc", Block::SharedPremise, "‡", [VAC, OK, OK]),
];

/// The 21 meta-inference statements with their expected cells.
pub fn catalog() -> Vec<MetaStatement> {
    CATALOG
        .iter()
        .map(|&(name, block, marks, expected)| MetaStatement {
            name,
            schema: Schema::parse(name).expect("catalog schemas parse"),
            block,
            marks,
            expected,
        })
        .collect()
}

/// Catalog cells whose listed residual is not K-equivalent to the statement,
/// with a residual that is. `(statement, reading, listed, corrected)`.
///
/// For `Eab ∧ Ebc → ¬Cca` the statement also holds whenever `b ∧ ¬c` is
/// possible, since that falsifies `Ebc`; the model with a false, b true and
/// c false separates it from the listed residual.
pub const KNOWN_ERRATA: [(&str, Reading, &str, &str); 2] = [
    ("Eab ∧ Ebc → ¬Cca", Reading::Mc, "a", "a ∨ b ∧ ¬c"),
    ("Eab ∧ Ebc → ¬Cca", Reading::Sc, "◇a", "◇(a ∨ b ∧ ¬c)"),
];

pub fn lookup(name: &str) -> Option<MetaStatement> {
    let wanted: String = name.split_whitespace().collect();
    catalog()
        .into_iter()
        .find(|s| s.name.split_whitespace().collect::<String>() == wanted)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaStatus {
    Valid,
    Contradictory,
    VacuouslyTrue,
    Residual(Formula),
    Contingent,
}

impl MetaStatus {
    pub fn symbol(&self) -> String {
        match self {
            MetaStatus::Valid => "✓".into(),
            MetaStatus::Contradictory => "⊥".into(),
            MetaStatus::VacuouslyTrue => "∅".into(),
            MetaStatus::Residual(f) => f.render(),
            MetaStatus::Contingent => "contingent".into(),
        }
    }
}

/// Checks, in order: unsatisfiable statement, implication with an
/// unsatisfiable antecedent, validity. Anything else is `Contingent`.
pub fn classify(reading: Reading, statement: &MetaStatement) -> Result<MetaStatus, ProverError> {
    classify_with(&Prover::default(), reading, statement)
}

pub fn classify_with(
    prover: &Prover,
    reading: Reading,
    statement: &MetaStatement,
) -> Result<MetaStatus, ProverError> {
    let formula = statement.instantiate(reading);
    if !prover.is_satisfiable(&formula)?.is_satisfiable() {
        return Ok(MetaStatus::Contradictory);
    }
    if let Some(antecedent) = statement.schema.antecedent() {
        if !prover.is_satisfiable(&antecedent.instantiate(reading))?.is_satisfiable() {
            return Ok(MetaStatus::VacuouslyTrue);
        }
    }
    if prover.is_valid(&formula)?.holds {
        return Ok(MetaStatus::Valid);
    }
    Ok(MetaStatus::Contingent)
}

/// Whether the instantiated statement is K-equivalent to `residual`.
pub fn verify_residual(
    reading: Reading,
    statement: &MetaStatement,
    residual: &Formula,
) -> Result<Verdict, ProverError> {
    Prover::default().are_equivalent(&statement.instantiate(reading), residual)
}

// ---------------------------------------------------------------------------
// Possible labels

/// A subset of {E, C, N}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LabelSet(u8);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);
    pub const FULL: LabelSet = LabelSet(0b111);

    pub fn contains(self, label: Label) -> bool {
        self.0 & bit(label) != 0
    }

    pub fn insert(&mut self, label: Label) {
        self.0 |= bit(label);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_full(self) -> bool {
        self == LabelSet::FULL
    }

    pub fn is_subset(self, other: LabelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn complement(self) -> LabelSet {
        LabelSet(!self.0 & 0b111)
    }

    pub fn iter(self) -> impl Iterator<Item = Label> {
        Label::ALL.into_iter().filter(move |&l| self.contains(l))
    }

    /// Constraint notation: `--` for no constraint, `Cba` for a singleton,
    /// `¬Eba` for a complement pair and `⊥` for the empty set. The pair is
    /// appended when given.
    pub fn constraint_name(self, pair: Option<(&str, &str)>) -> String {
        let suffix = pair.map(|(p, h)| format!("{p}{h}")).unwrap_or_default();
        match self.len() {
            3 => "--".into(),
            0 => "⊥".into(),
            1 => format!("{}{suffix}", self.iter().next().unwrap()),
            _ => format!("¬{}{suffix}", self.complement().iter().next().unwrap()),
        }
    }
}

fn bit(label: Label) -> u8 {
    1 << (label as u8)
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        let mut set = LabelSet::EMPTY;
        for l in iter {
            set.insert(l);
        }
        set
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// A known label on an ordered sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub label: Label,
    pub premise: String,
    pub hypothesis: String,
}

impl Constraint {
    pub fn new(label: Label, premise: &str, hypothesis: &str) -> Self {
        Constraint {
            label,
            premise: premise.to_owned(),
            hypothesis: hypothesis.to_owned(),
        }
    }

    fn formula(&self, reading: Reading) -> Formula {
        encode(reading, self.label, &self.premise, &self.hypothesis)
    }
}

/// How a candidate target label is checked against the constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetSemantics {
    /// The target pair stands in relation `l` and in no other relation.
    /// Under SC, where E and C can overlap, this keeps a forced relation a
    /// singleton.
    #[default]
    Exclusive,
    /// The target pair stands in relation `l`, possibly alongside others.
    Overlapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PossibleLabels {
    pub labels: LabelSet,
    /// The constraints alone are unsatisfiable.
    pub vacuous: bool,
}

/// Labels the target pair may carry given the constraints.
pub fn possible_labels(
    reading: Reading,
    constraints: &[Constraint],
    target: (&str, &str),
) -> Result<PossibleLabels, ProverError> {
    possible_labels_with(&Prover::default(), reading, constraints, target, TargetSemantics::Exclusive)
}

pub fn possible_labels_with(
    prover: &Prover,
    reading: Reading,
    constraints: &[Constraint],
    target: (&str, &str),
    semantics: TargetSemantics,
) -> Result<PossibleLabels, ProverError> {
    let given = Formula::conjunction(constraints.iter().map(|c| c.formula(reading)));
    if !prover.is_satisfiable(&given)?.is_satisfiable() {
        return Ok(PossibleLabels {
            labels: LabelSet::EMPTY,
            vacuous: true,
        });
    }
    let relation = |l: Label| encode(reading, l, target.0, target.1);
    let mut labels = LabelSet::EMPTY;
    for label in Label::ALL {
        let mut parts = vec![given.clone(), relation(label)];
        if semantics == TargetSemantics::Exclusive {
            parts.extend(
                Label::ALL
                    .into_iter()
                    .filter(|&other| other != label)
                    .map(|other| Formula::not(relation(other))),
            );
        }
        if prover.is_satisfiable(&Formula::conjunction(parts))?.is_satisfiable() {
            labels.insert(label);
        }
    }
    Ok(PossibleLabels {
        labels,
        vacuous: false,
    })
}

/// Parses `C(a,b);E(b,c)` into constraints. Empty input gives no constraints.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| {
            let (label, rest) = part
                .split_once('(')
                .ok_or_else(|| format!("expected L(x,y), found {part:?}"))?;
            let label: Label = label.parse()?;
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("missing `)` in {part:?}"))?;
            let (p, h) = parse_pair(inner)?;
            Ok(Constraint {
                label,
                premise: p,
                hypothesis: h,
            })
        })
        .collect()
}

/// Parses an ordered atom pair `a,c`.
pub fn parse_pair(text: &str) -> Result<(String, String), String> {
    let (p, h) = text
        .split_once(',')
        .ok_or_else(|| format!("expected an atom pair like a,c, found {text:?}"))?;
    let (p, h) = (p.trim(), h.trim());
    for atom in [p, h] {
        if !crate::formula::is_atom_name(atom) {
            return Err(format!("invalid atom name {atom:?}"));
        }
    }
    Ok((p.to_owned(), h.to_owned()))
}

// ---------------------------------------------------------------------------
// Catalog reproduction

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellReport {
    pub reading: Reading,
    pub statement: &'static str,
    pub marks: &'static str,
    pub expected: Expected,
    pub computed: MetaStatus,
    pub matches: bool,
    /// For a residual that failed to verify: a model where statement and
    /// residual differ.
    pub countermodel: Option<KripkeModel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table2Report {
    pub readings: Vec<Reading>,
    pub cells: Vec<CellReport>,
}

impl Table2Report {
    pub fn mismatches(&self) -> Vec<&CellReport> {
        self.cells.iter().filter(|c| !c.matches).collect()
    }

    pub fn matched(&self) -> usize {
        self.cells.iter().filter(|c| c.matches).count()
    }

    pub fn cell(&self, reading: Reading, statement: &str) -> Option<&CellReport> {
        let wanted: String = statement.split_whitespace().collect();
        self.cells.iter().find(|c| {
            c.reading == reading && c.statement.split_whitespace().collect::<String>() == wanted
        })
    }

    /// Markdown table with one row per statement and one column per reading.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| statement |");
        for r in &self.readings {
            out.push_str(&format!(" {r} |"));
        }
        out.push_str(" marks |\n|---|");
        for _ in &self.readings {
            out.push_str("---|");
        }
        out.push_str("---|\n");
        for statement in catalog() {
            out.push_str(&format!("| {} |", statement.name));
            for &r in &self.readings {
                let cell = self.cell(r, statement.name).expect("cell computed");
                let flag = if cell.matches { "" } else { " ✗" };
                out.push_str(&format!(" {}{} |", cell.expected.symbol(), flag));
            }
            out.push_str(&format!(" {} |\n", statement.marks));
        }
        out
    }

    /// One CSV record per cell.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["statement", "reading", "expected", "computed", "match"])
            .expect("in-memory write");
        for cell in &self.cells {
            writer
                .write_record([
                    cell.statement,
                    cell.reading.name(),
                    &cell.expected.symbol(),
                    &cell.computed.symbol(),
                    if cell.matches { "yes" } else { "no" },
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

pub fn reproduce_cell(reading: Reading, statement: &MetaStatement) -> Result<CellReport, ProverError> {
    let expected = statement.expected(reading);
    let mut computed = classify(reading, statement)?;
    let mut countermodel = None;
    if computed == MetaStatus::Contingent {
        if let Some(residual) = expected.residual() {
            let verdict = verify_residual(reading, statement, &residual)?;
            if verdict.holds {
                computed = MetaStatus::Residual(residual);
            } else {
                countermodel = verdict.countermodel;
            }
        }
    }
    let matches = matches!(
        (&expected, &computed),
        (Expected::Valid, MetaStatus::Valid)
            | (Expected::Contradictory, MetaStatus::Contradictory)
            | (Expected::VacuouslyTrue, MetaStatus::VacuouslyTrue)
            | (Expected::Residual { .. }, MetaStatus::Residual(_))
    );
    Ok(CellReport {
        reading,
        statement: statement.name,
        marks: statement.marks,
        expected,
        computed,
        matches,
        countermodel,
    })
}

/// Classifies every catalog cell for the given readings.
pub fn reproduce_table2_for(readings: &[Reading]) -> Result<Table2Report, ProverError> {
    let statements = catalog();
    let mut cells = Vec::with_capacity(statements.len() * readings.len());
    for statement in &statements {
        for &reading in readings {
            cells.push(reproduce_cell(reading, statement)?);
        }
    }
    Ok(Table2Report {
        readings: readings.to_vec(),
        cells,
    })
}

pub fn reproduce_table2() -> Result<Table2Report, ProverError> {
    reproduce_table2_for(&Reading::ALL)
}
