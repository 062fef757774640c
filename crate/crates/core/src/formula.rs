//! Propositional modal formulas: AST, text grammar, canonical printer and
//! normal-form utilities.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! iff     := implies ( ("<->" | "↔") iff )?        right-associative
//! implies := or ( ("->" | "→") implies )?          right-associative
//! or      := and ( ("|" | "∨") and )*              left-associative
//! and     := unary ( ("&" | "∧") unary )*          left-associative
//! unary   := ("~" | "¬" | "[]" | "□" | "<>" | "◇") unary | primary
//! primary := atom | "1" | "⊤" | "0" | "⊥" | "(" iff ")"
//! atom    := [a-z][a-zA-Z0-9_]*
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    Top,
    Bottom,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    Diamond(Box<Formula>),
}

impl Formula {
    /// Builds an atom. Panics if `name` is not a valid atom name; use
    /// [`parse`] for untrusted input.
    pub fn atom(name: &str) -> Formula {
        assert!(is_atom_name(name), "invalid atom name {name:?}");
        Formula::Atom(name.to_owned())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Formula {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    pub fn necessarily(f: Formula) -> Formula {
        Formula::Box(Box::new(f))
    }

    pub fn possibly(f: Formula) -> Formula {
        Formula::Diamond(Box::new(f))
    }

    /// Left-folded conjunction; `⊤` for an empty iterator.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    /// Left-folded disjunction; `⊥` for an empty iterator.
    pub fn disjunction<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Bottom)
    }

    /// Maximum nesting of `□`/`◇`.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
            Formula::Box(f) | Formula::Diamond(f) => 1 + f.modal_depth(),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => 1,
            Formula::Not(f) | Formula::Box(f) | Formula::Diamond(f) => 1 + f.size(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                1 + l.size() + r.size()
            }
        }
    }

    /// Sorted, distinct atom names.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            Formula::Top | Formula::Bottom => {}
            Formula::Not(f) | Formula::Box(f) | Formula::Diamond(f) => f.collect_atoms(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Simultaneous substitution of atoms; unmapped atoms are left alone.
    pub fn substitute(&self, mapping: &BTreeMap<String, Formula>) -> Formula {
        match self {
            Formula::Atom(name) => mapping.get(name).cloned().unwrap_or_else(|| self.clone()),
            Formula::Top | Formula::Bottom => self.clone(),
            Formula::Not(f) => Formula::not(f.substitute(mapping)),
            Formula::Box(f) => Formula::necessarily(f.substitute(mapping)),
            Formula::Diamond(f) => Formula::possibly(f.substitute(mapping)),
            Formula::And(l, r) => Formula::and(l.substitute(mapping), r.substitute(mapping)),
            Formula::Or(l, r) => Formula::or(l.substitute(mapping), r.substitute(mapping)),
            Formula::Implies(l, r) => Formula::implies(l.substitute(mapping), r.substitute(mapping)),
            Formula::Iff(l, r) => Formula::iff(l.substitute(mapping), r.substitute(mapping)),
        }
    }

    /// Negation normal form: `¬` only on atoms, no `→`/`↔`, modal duals
    /// pushed through. `¬⊤` and `¬⊥` fold to constants.
    pub fn nnf(&self) -> Formula {
        nnf_pos(self)
    }

    /// True when the formula is already in negation normal form.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            Formula::And(l, r) | Formula::Or(l, r) => l.is_nnf() && r.is_nnf(),
            Formula::Implies(..) | Formula::Iff(..) => false,
            Formula::Box(f) | Formula::Diamond(f) => f.is_nnf(),
        }
    }

    /// Canonical Unicode rendering with minimal parentheses.
    pub fn render(&self) -> String {
        let mut out = String::new();
        write_formula(self, &mut out);
        out
    }

    /// Same as [`Formula::render`] but with the ASCII token set.
    pub fn render_ascii(&self) -> String {
        self.render()
            .replace('¬', "~")
            .replace('∧', "&")
            .replace('∨', "|")
            .replace('↔', "<->")
            .replace('→', "->")
            .replace('□', "[]")
            .replace('◇', "<>")
            .replace('⊤', "1")
            .replace('⊥', "0")
    }
}

fn nnf_pos(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bottom => f.clone(),
        Formula::Not(inner) => nnf_neg(inner),
        Formula::And(l, r) => Formula::and(nnf_pos(l), nnf_pos(r)),
        Formula::Or(l, r) => Formula::or(nnf_pos(l), nnf_pos(r)),
        Formula::Implies(l, r) => Formula::or(nnf_neg(l), nnf_pos(r)),
        // (l → r) ∧ (r → l)
        Formula::Iff(l, r) => Formula::and(
            Formula::or(nnf_neg(l), nnf_pos(r)),
            Formula::or(nnf_neg(r), nnf_pos(l)),
        ),
        Formula::Box(inner) => Formula::necessarily(nnf_pos(inner)),
        Formula::Diamond(inner) => Formula::possibly(nnf_pos(inner)),
    }
}

/// NNF of `¬f`.
fn nnf_neg(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => Formula::not(f.clone()),
        Formula::Top => Formula::Bottom,
        Formula::Bottom => Formula::Top,
        Formula::Not(inner) => nnf_pos(inner),
        Formula::And(l, r) => Formula::or(nnf_neg(l), nnf_neg(r)),
        Formula::Or(l, r) => Formula::and(nnf_neg(l), nnf_neg(r)),
        Formula::Implies(l, r) => Formula::and(nnf_pos(l), nnf_neg(r)),
        // (l ∧ ¬r) ∨ (r ∧ ¬l)
        Formula::Iff(l, r) => Formula::or(
            Formula::and(nnf_pos(l), nnf_neg(r)),
            Formula::and(nnf_pos(r), nnf_neg(l)),
        ),
        Formula::Box(inner) => Formula::possibly(nnf_neg(inner)),
        Formula::Diamond(inner) => Formula::necessarily(nnf_neg(inner)),
    }
}

pub fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

// ---------------------------------------------------------------------------
// Printing

const PREC_IFF: u8 = 1;
const PREC_IMPLIES: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;
const PREC_ATOMIC: u8 = 6;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Atom(_) | Formula::Top | Formula::Bottom => PREC_ATOMIC,
        Formula::Not(_) | Formula::Box(_) | Formula::Diamond(_) => PREC_UNARY,
        Formula::And(..) => PREC_AND,
        Formula::Or(..) => PREC_OR,
        Formula::Implies(..) => PREC_IMPLIES,
        Formula::Iff(..) => PREC_IFF,
    }
}

fn write_child(f: &Formula, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atom(name) => out.push_str(name),
        Formula::Top => out.push('⊤'),
        Formula::Bottom => out.push('⊥'),
        Formula::Not(inner) | Formula::Box(inner) | Formula::Diamond(inner) => {
            out.push(match f {
                Formula::Not(_) => '¬',
                Formula::Box(_) => '□',
                _ => '◇',
            });
            write_child(inner, precedence(inner) < PREC_UNARY, out);
        }
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
            let (prec, symbol, right_assoc) = match f {
                Formula::And(..) => (PREC_AND, " ∧ ", false),
                Formula::Or(..) => (PREC_OR, " ∨ ", false),
                Formula::Implies(..) => (PREC_IMPLIES, " → ", true),
                _ => (PREC_IFF, " ↔ ", true),
            };
            let (left_parens, right_parens) = if right_assoc {
                (precedence(l) <= prec, precedence(r) < prec)
            } else {
                (precedence(l) < prec, precedence(r) <= prec)
            };
            write_child(l, left_parens, out);
            out.push_str(symbol);
            write_child(r, right_parens, out);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty formula")]
    Empty,
    #[error("unknown symbol {symbol:?} at byte {offset}")]
    UnknownSymbol { offset: usize, symbol: String },
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Atom(String),
    Top,
    Bottom,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Box,
    Diamond,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Atom(name) => format!("atom `{name}`"),
            Tok::Top => "`⊤`".into(),
            Tok::Bottom => "`⊥`".into(),
            Tok::Not => "`¬`".into(),
            Tok::And => "`∧`".into(),
            Tok::Or => "`∨`".into(),
            Tok::Implies => "`→`".into(),
            Tok::Iff => "`↔`".into(),
            Tok::Box => "`□`".into(),
            Tok::Diamond => "`◇`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    const SYMBOLS: &[(&str, Tok)] = &[
        ("<->", Tok::Iff),
        ("->", Tok::Implies),
        ("[]", Tok::Box),
        ("<>", Tok::Diamond),
        ("~", Tok::Not),
        ("¬", Tok::Not),
        ("&", Tok::And),
        ("∧", Tok::And),
        ("|", Tok::Or),
        ("∨", Tok::Or),
        ("→", Tok::Implies),
        ("↔", Tok::Iff),
        ("□", Tok::Box),
        ("◇", Tok::Diamond),
        ("1", Tok::Top),
        ("⊤", Tok::Top),
        ("0", Tok::Bottom),
        ("⊥", Tok::Bottom),
        ("(", Tok::LParen),
        (")", Tok::RParen),
    ];

    let mut tokens = Vec::new();
    let mut pos = 0;
    'outer: while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if c.is_ascii_lowercase() {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            tokens.push((pos, Tok::Atom(rest[..len].to_owned())));
            pos += len;
            continue;
        }
        for (symbol, tok) in SYMBOLS {
            if let Some(after) = rest.strip_prefix(symbol) {
                // `1`/`0` must not swallow the start of a longer number.
                if matches!(tok, Tok::Top | Tok::Bottom) && after.starts_with(|ch: char| ch.is_ascii_alphanumeric()) {
                    break;
                }
                tokens.push((pos, tok.clone()));
                pos += symbol.len();
                continue 'outer;
            }
        }
        let len = rest
            .find(|ch: char| ch.is_whitespace() || "()".contains(ch))
            .filter(|&n| n > 0)
            .unwrap_or(c.len_utf8());
        return Err(ParseError::UnknownSymbol {
            offset: pos,
            symbol: rest[..len].to_owned(),
        });
    }
    tokens.push((text.len(), Tok::End));
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

const EXPECT_OPERAND: &[&str] = &["atom", "constant", "unary operator", "`(`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let left = self.implies()?;
        if *self.peek() == Tok::Iff {
            self.bump();
            let right = self.iff()?;
            return Ok(Formula::iff(left, right));
        }
        Ok(left)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let left = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let right = self.implies()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            left = Formula::or(left, self.and()?);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Box => {
                self.bump();
                Ok(Formula::necessarily(self.unary()?))
            }
            Tok::Diamond => {
                self.bump();
                Ok(Formula::possibly(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Atom(name) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            Tok::Top => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Bottom => {
                self.bump();
                Ok(Formula::Bottom)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.iff()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["`)`", "binary operator"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(EXPECT_OPERAND)),
        }
    }
}

/// Parses a formula. Accepts the Unicode and ASCII token sets.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let formula = parser.iff()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(&["binary operator", "end of input"]));
    }
    Ok(formula)
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
