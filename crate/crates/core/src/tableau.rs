//! Prefixed tableau decision procedure for the modal logic K.
//!
//! Formulas are put in negation normal form and hash-consed into an arena.
//! Each prefix names a world of the tree model under construction. Within a
//! prefix, conjunctions are split first, then disjunctions branch
//! left-first, and only a propositionally saturated open prefix spawns one
//! child prefix per `◇`-formula, carrying every `□`-argument along. A branch
//! closes on `⊥` or a complementary literal pair at one prefix.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::Formula;
use crate::kripke::KripkeModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("prefix budget of {0} exhausted")]
    PrefixBudget(usize),
    #[error("branch budget of {0} exhausted")]
    BranchBudget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Statistics {
    /// Branches opened by disjunction splits (the initial branch counts as one).
    pub branches: usize,
    /// Prefixes created, the root prefix included.
    pub prefixes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Satisfiable(KripkeModel),
    Unsatisfiable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableauResult {
    pub outcome: Outcome,
    pub statistics: Statistics,
}

impl TableauResult {
    pub fn is_satisfiable(&self) -> bool {
        matches!(self.outcome, Outcome::Satisfiable(_))
    }

    pub fn model(&self) -> Option<&KripkeModel> {
        match &self.outcome {
            Outcome::Satisfiable(m) => Some(m),
            Outcome::Unsatisfiable => None,
        }
    }

    pub fn into_model(self) -> Option<KripkeModel> {
        match self.outcome {
            Outcome::Satisfiable(m) => Some(m),
            Outcome::Unsatisfiable => None,
        }
    }
}

/// Result of a validity, equivalence or entailment query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub countermodel: Option<KripkeModel>,
    pub statistics: Statistics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prover {
    pub prefix_budget: usize,
    pub branch_budget: usize,
}

impl Default for Prover {
    fn default() -> Self {
        Prover {
            prefix_budget: 10_000,
            branch_budget: 1_000_000,
        }
    }
}

impl Prover {
    pub fn is_satisfiable(&self, f: &Formula) -> Result<TableauResult, ProverError> {
        let mut arena = Arena::default();
        let root = arena.intern(&f.nnf());
        let mut search = Search {
            arena: &arena,
            prover: self,
            stats: Statistics::default(),
        };
        search.stats.prefixes = 1;
        search.stats.branches = 1;
        let world = search.world(WorldState::new(vec![root]))?;
        let outcome = match world {
            Some(tree) => {
                let model = tree_to_model(&tree, &arena, &f.atoms());
                debug_assert_eq!(model.satisfies(f), Ok(true));
                Outcome::Satisfiable(model)
            }
            None => Outcome::Unsatisfiable,
        };
        Ok(TableauResult {
            outcome,
            statistics: search.stats,
        })
    }

    /// `f` is valid iff `¬f` is unsatisfiable; otherwise the model of `¬f`
    /// is returned as a countermodel.
    pub fn is_valid(&self, f: &Formula) -> Result<Verdict, ProverError> {
        let result = self.is_satisfiable(&Formula::not(f.clone()))?;
        let statistics = result.statistics;
        let countermodel = result.into_model();
        Ok(Verdict {
            holds: countermodel.is_none(),
            countermodel,
            statistics,
        })
    }

    /// K-equivalence, decided as validity of `f ↔ g`.
    pub fn are_equivalent(&self, f: &Formula, g: &Formula) -> Result<Verdict, ProverError> {
        self.is_valid(&Formula::iff(f.clone(), g.clone()))
    }

    pub fn entails(&self, premises: &[Formula], conclusion: &Formula) -> Result<Verdict, ProverError> {
        let antecedent = Formula::conjunction(premises.iter().cloned());
        self.is_valid(&Formula::implies(antecedent, conclusion.clone()))
    }
}

pub fn is_satisfiable(f: &Formula) -> Result<TableauResult, ProverError> {
    Prover::default().is_satisfiable(f)
}

pub fn is_valid(f: &Formula) -> Result<Verdict, ProverError> {
    Prover::default().is_valid(f)
}

pub fn are_equivalent(f: &Formula, g: &Formula) -> Result<Verdict, ProverError> {
    Prover::default().are_equivalent(f, g)
}

pub fn entails(premises: &[Formula], conclusion: &Formula) -> Result<Verdict, ProverError> {
    Prover::default().entails(premises, conclusion)
}

type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Top,
    Bottom,
    Literal { atom: u32, positive: bool },
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Box(NodeId),
    Diamond(NodeId),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    atoms: Vec<String>,
    atom_index: HashMap<String, u32>,
}

impl Arena {
    fn add(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.index.insert(node, id);
        id
    }

    fn atom(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.atom_index.get(name) {
            return i;
        }
        let i = self.atoms.len() as u32;
        self.atoms.push(name.to_owned());
        self.atom_index.insert(name.to_owned(), i);
        i
    }

    /// Interns a formula that is already in negation normal form.
    fn intern(&mut self, f: &Formula) -> NodeId {
        let node = match f {
            Formula::Top => Node::Top,
            Formula::Bottom => Node::Bottom,
            Formula::Atom(name) => Node::Literal {
                atom: self.atom(name),
                positive: true,
            },
            Formula::Not(inner) => match &**inner {
                Formula::Atom(name) => Node::Literal {
                    atom: self.atom(name),
                    positive: false,
                },
                _ => unreachable!("input is in negation normal form"),
            },
            Formula::And(l, r) => Node::And(self.intern(l), self.intern(r)),
            Formula::Or(l, r) => Node::Or(self.intern(l), self.intern(r)),
            Formula::Box(g) => Node::Box(self.intern(g)),
            Formula::Diamond(g) => Node::Diamond(self.intern(g)),
            Formula::Implies(..) | Formula::Iff(..) => unreachable!("input is in negation normal form"),
        };
        self.add(node)
    }

    fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }
}

/// Formulas labelled with one prefix on the current branch.
#[derive(Clone)]
struct WorldState {
    pending: Vec<NodeId>,
    seen: BTreeSet<NodeId>,
    literals: BTreeMap<u32, bool>,
    disjunctions: Vec<NodeId>,
    boxes: Vec<NodeId>,
    diamonds: Vec<NodeId>,
}

impl WorldState {
    fn new(formulas: Vec<NodeId>) -> Self {
        WorldState {
            pending: formulas,
            seen: BTreeSet::new(),
            literals: BTreeMap::new(),
            disjunctions: Vec::new(),
            boxes: Vec::new(),
            diamonds: Vec::new(),
        }
    }
}

/// Open saturated prefix: its literals and the subtrees of its children.
struct WorldTree {
    literals: BTreeMap<u32, bool>,
    children: Vec<WorldTree>,
}

struct Search<'a> {
    arena: &'a Arena,
    prover: &'a Prover,
    stats: Statistics,
}

impl Search<'_> {
    /// Saturates one prefix. `Ok(None)` means every branch closed.
    fn world(&mut self, mut state: WorldState) -> Result<Option<WorldTree>, ProverError> {
        // α-rules and literal bookkeeping
        while let Some(id) = state.pending.pop() {
            if !state.seen.insert(id) {
                continue;
            }
            match self.arena.node(id) {
                Node::Top => {}
                Node::Bottom => return Ok(None),
                Node::Literal { atom, positive } => match state.literals.get(&atom) {
                    Some(&p) if p != positive => return Ok(None),
                    _ => {
                        state.literals.insert(atom, positive);
                    }
                },
                Node::And(l, r) => {
                    state.pending.push(r);
                    state.pending.push(l);
                }
                Node::Or(..) => state.disjunctions.push(id),
                Node::Box(g) => state.boxes.push(g),
                Node::Diamond(g) => state.diamonds.push(g),
            }
        }

        // β-rule on the first disjunction not yet satisfied on this branch
        while let Some(id) = state.disjunctions.first().copied() {
            state.disjunctions.remove(0);
            let Node::Or(l, r) = self.arena.node(id) else {
                unreachable!()
            };
            if state.seen.contains(&l) || state.seen.contains(&r) {
                continue;
            }
            for disjunct in [l, r] {
                if disjunct == r {
                    self.stats.branches += 1;
                    if self.stats.branches > self.prover.branch_budget {
                        return Err(ProverError::BranchBudget(self.prover.branch_budget));
                    }
                }
                let mut branch = state.clone();
                branch.pending.push(disjunct);
                if let Some(tree) = self.world(branch)? {
                    return Ok(Some(tree));
                }
            }
            return Ok(None);
        }

        // π-rule per ◇-formula, ν-rule copies every □-argument
        let mut children = Vec::with_capacity(state.diamonds.len());
        for &d in &state.diamonds {
            self.stats.prefixes += 1;
            if self.stats.prefixes > self.prover.prefix_budget {
                return Err(ProverError::PrefixBudget(self.prover.prefix_budget));
            }
            let mut formulas = state.boxes.clone();
            formulas.push(d);
            formulas.reverse();
            match self.world(WorldState::new(formulas))? {
                Some(tree) => children.push(tree),
                None => return Ok(None),
            }
        }
        Ok(Some(WorldTree {
            literals: state.literals,
            children,
        }))
    }
}

fn tree_to_model(tree: &WorldTree, arena: &Arena, atoms: &BTreeSet<String>) -> KripkeModel {
    let mut valuation: BTreeMap<String, BTreeSet<usize>> =
        atoms.iter().map(|a| (a.clone(), BTreeSet::new())).collect();
    let mut accessibility = BTreeSet::new();
    let mut next_id = 0usize;
    let mut stack: Vec<(&WorldTree, Option<usize>)> = vec![(tree, None)];
    while let Some((node, parent)) = stack.pop() {
        let id = next_id;
        next_id += 1;
        if let Some(p) = parent {
            accessibility.insert((p, id));
        }
        for (&atom, &positive) in &node.literals {
            if positive {
                let name = &arena.atoms[atom as usize];
                valuation.entry(name.clone()).or_default().insert(id);
            }
        }
        for child in node.children.iter().rev() {
            stack.push((child, Some(id)));
        }
    }
    KripkeModel::new(next_id, accessibility, valuation, 0).expect("tableau model is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn sat(text: &str) -> TableauResult {
        is_satisfiable(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn satisfiability_examples() {
        assert!(!sat("<>a & [](a -> ~a)").is_satisfiable());
        let f = parse("<>a & <>b & [](a -> ~b)").unwrap();
        let r = is_satisfiable(&f).unwrap();
        let m = r.model().unwrap();
        assert!(m.satisfies(&f).unwrap());
        assert_eq!(m.successors(0).count(), 2);
        assert!(!sat("a & ~a").is_satisfiable());
        assert!(!sat("0").is_satisfiable());
        assert!(sat("1").is_satisfiable());
    }

    #[test]
    fn validity_examples() {
        let v = is_valid(&parse("[](a->b) & [](b->c) -> [](a->c)").unwrap()).unwrap();
        assert!(v.holds);
        assert!(v.countermodel.is_none());

        let v = is_valid(&parse("[]a -> a").unwrap()).unwrap();
        assert!(!v.holds);
        let m = v.countermodel.unwrap();
        assert_eq!(m.worlds(), 1);
        assert!(m.accessibility().is_empty());
        assert!(!m.satisfies(&parse("a").unwrap()).unwrap());
    }

    #[test]
    fn equivalence_examples() {
        let eq = |l: &str, r: &str| are_equivalent(&parse(l).unwrap(), &parse(r).unwrap()).unwrap();
        assert!(eq("a -> ~b", "b -> ~a").holds);
        assert!(eq("<>a & [](a->~b) -> <>b & [](b->~a)", "~<>a | <>b").holds);
        assert!(eq("[](a & b)", "[]a & []b").holds);
        let v = eq("<>(a | b)", "<>a & <>b");
        assert!(!v.holds);
        let m = v.countermodel.unwrap();
        let lhs = m.satisfies(&parse("<>(a | b)").unwrap()).unwrap();
        let rhs = m.satisfies(&parse("<>a & <>b").unwrap()).unwrap();
        assert_ne!(lhs, rhs);
    }

    #[test]
    fn entailment_examples() {
        let p = |s: &str| parse(s).unwrap();
        assert!(entails(&[p("[](a->b)"), p("[](a->~b)")], &p("[]~a")).unwrap().holds);
        assert!(entails(&[], &p("a -> a")).unwrap().holds);
        let v = entails(&[p("<>a")], &p("[]a")).unwrap();
        assert!(!v.holds);
        let m = v.countermodel.unwrap();
        assert!(m.satisfies(&p("<>a & ~[]a")).unwrap());
    }

    #[test]
    fn budgets_are_errors_not_verdicts() {
        let tight = Prover {
            prefix_budget: 2,
            branch_budget: 1_000,
        };
        let f = parse("<>a & <>b & <>c").unwrap();
        assert_eq!(tight.is_satisfiable(&f), Err(ProverError::PrefixBudget(2)));
        let narrow = Prover {
            prefix_budget: 100,
            branch_budget: 1,
        };
        let g = parse("(a | b) & (~a | c) & ~b & ~c").unwrap();
        assert_eq!(narrow.is_satisfiable(&g), Err(ProverError::BranchBudget(1)));
    }

    #[test]
    fn deterministic_results() {
        let f = parse("(<>a | <>b) & [](a -> c) & <>(~c | b)").unwrap();
        assert_eq!(is_satisfiable(&f).unwrap(), is_satisfiable(&f).unwrap());
    }
}
