//! NLI relations E, C, N as modal formulas under three readings, and the
//! structural theorems relating them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::kripke::KripkeModel;
use crate::tableau::{Prover, ProverError};

/// How the NLI relations are read as formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reading {
    /// Material conditional.
    Mc,
    /// Strict conditional.
    Sc,
    /// Strict conditional with existential import.
    Ei,
}

impl Reading {
    pub const ALL: [Reading; 3] = [Reading::Mc, Reading::Sc, Reading::Ei];

    pub fn name(self) -> &'static str {
        match self {
            Reading::Mc => "MC",
            Reading::Sc => "SC",
            Reading::Ei => "EI",
        }
    }
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reading {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(Reading::Mc),
            "sc" => Ok(Reading::Sc),
            "ei" => Ok(Reading::Ei),
            _ => Err(format!("unknown reading {s:?} (expected mc, sc or ei)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum Label {
    E,
    C,
    N,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::E, Label::C, Label::N];

    pub fn letter(self) -> char {
        match self {
            Label::E => 'E',
            Label::C => 'C',
            Label::N => 'N',
        }
    }

    /// SNLI spelling: `entailment`, `contradiction`, `neutral`.
    pub fn word(self) -> &'static str {
        match self {
            Label::E => "entailment",
            Label::C => "contradiction",
            Label::N => "neutral",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Accepts `E`/`C`/`N` and the full SNLI words, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e" | "entailment" => Ok(Label::E),
            "c" | "contradiction" => Ok(Label::C),
            "n" | "neutral" => Ok(Label::N),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

impl From<Label> for &'static str {
    fn from(l: Label) -> Self {
        l.word()
    }
}

impl TryFrom<String> for Label {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// The formula for relation `label` between `premise` and `hypothesis`.
///
/// | | E | C | N |
/// |---|---|---|---|
/// | MC | a → b | a → ¬b | ¬(a → b) ∧ ¬(a → ¬b) |
/// | SC | □(a → b) | □(a → ¬b) | ◇(a ∧ b) ∧ ◇(a ∧ ¬b) |
/// | EI | ◇a ∧ □(a → b) | ◇a ∧ □(a → ¬b) | (□¬a ∨ ◇(a ∧ b)) ∧ (□¬a ∨ ◇(a ∧ ¬b)) |
///
/// Equal atom names are allowed and give the same-sentence relations.
pub fn encode(reading: Reading, label: Label, premise: &str, hypothesis: &str) -> Formula {
    let a = Formula::atom(premise);
    let b = Formula::atom(hypothesis);
    let not_b = Formula::not(b.clone());
    let entails = Formula::implies(a.clone(), b.clone());
    let excludes = Formula::implies(a.clone(), not_b.clone());
    match (reading, label) {
        (Reading::Mc, Label::E) => entails,
        (Reading::Mc, Label::C) => excludes,
        (Reading::Mc, Label::N) => Formula::and(Formula::not(entails), Formula::not(excludes)),
        (Reading::Sc, Label::E) => Formula::necessarily(entails),
        (Reading::Sc, Label::C) => Formula::necessarily(excludes),
        (Reading::Sc, Label::N) => Formula::and(
            Formula::possibly(Formula::and(a.clone(), b)),
            Formula::possibly(Formula::and(a, not_b)),
        ),
        (Reading::Ei, Label::E) => Formula::and(Formula::possibly(a), Formula::necessarily(entails)),
        (Reading::Ei, Label::C) => Formula::and(Formula::possibly(a), Formula::necessarily(excludes)),
        (Reading::Ei, Label::N) => {
            let impossible = Formula::necessarily(Formula::not(a.clone()));
            Formula::and(
                Formula::or(impossible.clone(), Formula::possibly(Formula::and(a.clone(), b))),
                Formula::or(impossible, Formula::possibly(Formula::and(a, not_b))),
            )
        }
    }
}

/// What a structural check claims about its formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Valid,
    Satisfiable,
    Unsatisfiable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremCheck {
    pub name: &'static str,
    pub formula: Formula,
    pub claim: Claim,
    pub holds: bool,
    /// Countermodel for a failed validity claim, or the witness of a
    /// satisfiability claim.
    pub model: Option<KripkeModel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport {
    pub reading: Reading,
    pub checks: Vec<TheoremCheck>,
}

impl TheoremReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn check(&self, name: &str) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Coverage, exclusivity and trichotomy facts for one reading, over atoms
/// `a` and `b`.
pub fn structural_theorems(reading: Reading) -> Result<TheoremReport, ProverError> {
    structural_theorems_with(&Prover::default(), reading)
}

pub fn structural_theorems_with(prover: &Prover, reading: Reading) -> Result<TheoremReport, ProverError> {
    let rel = |l: Label| encode(reading, l, "a", "b");
    let (e, c, n) = (rel(Label::E), rel(Label::C), rel(Label::N));
    let not = Formula::not;

    let mut specs: Vec<(&'static str, Formula, Claim)> = vec![(
        "coverage: Eab ∨ Cab ∨ Nab",
        Formula::disjunction([e.clone(), c.clone(), n.clone()]),
        Claim::Valid,
    )];
    match reading {
        Reading::Mc => {
            specs.push(("neutral is contradictory: Nab", n.clone(), Claim::Unsatisfiable));
        }
        Reading::Sc => {
            specs.push((
                "not all three: ¬Eab ∨ ¬Cab ∨ ¬Nab",
                Formula::disjunction([not(e.clone()), not(c.clone()), not(n.clone())]),
                Claim::Valid,
            ));
            specs.push((
                "neutral excludes: Nab → ¬Eab ∧ ¬Cab",
                Formula::implies(n.clone(), Formula::and(not(e.clone()), not(c.clone()))),
                Claim::Valid,
            ));
            specs.push((
                "overlap: Eab ∧ Cab",
                Formula::and(e.clone(), c.clone()),
                Claim::Satisfiable,
            ));
        }
        Reading::Ei => {
            let exactly = |x: &Formula, y: &Formula, z: &Formula| {
                Formula::conjunction([x.clone(), not(y.clone()), not(z.clone())])
            };
            specs.push((
                "trichotomy",
                Formula::disjunction([exactly(&e, &c, &n), exactly(&c, &e, &n), exactly(&n, &e, &c)]),
                Claim::Valid,
            ));
        }
    }

    let checks = specs
        .into_iter()
        .map(|(name, formula, claim)| {
            let (holds, model) = match claim {
                Claim::Valid => {
                    let v = prover.is_valid(&formula)?;
                    (v.holds, v.countermodel)
                }
                Claim::Satisfiable => {
                    let r = prover.is_satisfiable(&formula)?;
                    (r.is_satisfiable(), r.into_model())
                }
                Claim::Unsatisfiable => {
                    let r = prover.is_satisfiable(&formula)?;
                    (!r.is_satisfiable(), r.into_model())
                }
            };
            Ok(TheoremCheck {
                name,
                formula,
                claim,
                holds,
                model,
            })
        })
        .collect::<Result<_, ProverError>>()?;
    Ok(TheoremReport { reading, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::tableau::is_satisfiable;

    #[test]
    fn encodings_match_table() {
        assert_eq!(
            encode(Reading::Sc, Label::N, "a", "b"),
            parse("<>(a & b) & <>(a & ~b)").unwrap()
        );
        assert_eq!(encode(Reading::Mc, Label::C, "a", "b"), parse("a -> ~b").unwrap());
        assert_eq!(encode(Reading::Ei, Label::E, "p", "q"), parse("<>p & [](p -> q)").unwrap());
        assert_eq!(
            encode(Reading::Ei, Label::N, "a", "b"),
            parse("([]~a | <>(a & b)) & ([]~a | <>(a & ~b))").unwrap()
        );
        assert_eq!(
            encode(Reading::Mc, Label::N, "a", "b"),
            parse("~(a -> b) & ~(a -> ~b)").unwrap()
        );
    }

    #[test]
    fn encode_is_injective() {
        let pairs = [("a", "b"), ("b", "a"), ("a", "c")];
        for r in Reading::ALL {
            let mut seen = std::collections::HashSet::new();
            for l in Label::ALL {
                for (p, h) in pairs {
                    assert!(seen.insert(encode(r, l, p, h)));
                }
            }
        }
    }

    #[test]
    fn ei_labels_are_mutually_exclusive() {
        for (i, l1) in Label::ALL.iter().enumerate() {
            for l2 in &Label::ALL[i + 1..] {
                let both = Formula::and(
                    encode(Reading::Ei, *l1, "a", "b"),
                    encode(Reading::Ei, *l2, "a", "b"),
                );
                assert!(!is_satisfiable(&both).unwrap().is_satisfiable(), "{l1} {l2}");
            }
        }
    }

    #[test]
    fn theorem_reports() {
        let ei = structural_theorems(Reading::Ei).unwrap();
        assert!(ei.all_hold());
        assert!(ei.check("trichotomy").unwrap().holds);

        let sc = structural_theorems(Reading::Sc).unwrap();
        assert!(sc.all_hold());
        let overlap = sc.check("overlap: Eab ∧ Cab").unwrap();
        let witness = overlap.model.as_ref().unwrap();
        assert!(!witness.satisfies(&parse("<>a").unwrap()).unwrap());

        let mc = structural_theorems(Reading::Mc).unwrap();
        assert!(mc.all_hold());
        assert!(mc.check("neutral is contradictory: Nab").unwrap().model.is_none());
    }

    #[test]
    fn label_parsing() {
        assert_eq!("entailment".parse::<Label>(), Ok(Label::E));
        assert_eq!("c".parse::<Label>(), Ok(Label::C));
        assert!("-".parse::<Label>().is_err());
        assert_eq!("EI".parse::<Reading>(), Ok(Reading::Ei));
        assert_eq!(serde_json::to_string(&Label::N).unwrap(), "\"neutral\"");
        assert_eq!(serde_json::from_str::<Label>("\"E\"").unwrap(), Label::E);
    }
}
