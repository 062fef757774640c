//! Finite Kripke models, the satisfaction relation, and a brute-force
//! tree-model enumerator used as an independent satisfiability oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("world {0} does not exist")]
    InvalidWorld(usize),
    #[error("atom `{0}` has no valuation in this model")]
    UnknownAtom(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("world bound must be at least 1")]
    InvalidBound,
    #[error("enumeration needs {required} candidate worlds, limit is {limit}")]
    EnumerationLimit { required: u128, limit: u128 },
}

/// A finite Kripke model with a designated evaluation world.
///
/// Serialized as
/// `{"worlds": n, "accessibility": [[i, j], ...], "valuation": {"a": [..]}, "designated": i}`
/// where each valuation entry lists the worlds at which the atom is true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct KripkeModel {
    worlds: usize,
    accessibility: BTreeSet<(usize, usize)>,
    valuation: BTreeMap<String, BTreeSet<usize>>,
    designated: usize,
}

#[derive(Deserialize)]
struct RawModel {
    worlds: usize,
    accessibility: BTreeSet<(usize, usize)>,
    valuation: BTreeMap<String, BTreeSet<usize>>,
    designated: usize,
}

impl TryFrom<RawModel> for KripkeModel {
    type Error = KripkeError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        KripkeModel::new(raw.worlds, raw.accessibility, raw.valuation, raw.designated)
    }
}

impl KripkeModel {
    pub fn new(
        worlds: usize,
        accessibility: BTreeSet<(usize, usize)>,
        valuation: BTreeMap<String, BTreeSet<usize>>,
        designated: usize,
    ) -> Result<Self, KripkeError> {
        if worlds == 0 {
            return Err(KripkeError::InvalidModel("a model needs at least one world".into()));
        }
        if designated >= worlds {
            return Err(KripkeError::InvalidWorld(designated));
        }
        if let Some(&(i, j)) = accessibility.iter().find(|&&(i, j)| i >= worlds || j >= worlds) {
            return Err(KripkeError::InvalidWorld(i.max(j)));
        }
        for (atom, true_at) in &valuation {
            if !crate::formula::is_atom_name(atom) {
                return Err(KripkeError::InvalidModel(format!("invalid atom name {atom:?}")));
            }
            if let Some(&w) = true_at.iter().find(|&&w| w >= worlds) {
                return Err(KripkeError::InvalidWorld(w));
            }
        }
        Ok(KripkeModel {
            worlds,
            accessibility,
            valuation,
            designated,
        })
    }

    pub fn worlds(&self) -> usize {
        self.worlds
    }

    pub fn accessibility(&self) -> &BTreeSet<(usize, usize)> {
        &self.accessibility
    }

    pub fn valuation(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.valuation
    }

    pub fn designated(&self) -> usize {
        self.designated
    }

    pub fn successors(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        self.accessibility.range((w, 0)..=(w, usize::MAX)).map(|&(_, j)| j)
    }

    /// Truth of `f` at world `w`.
    pub fn evaluate(&self, w: usize, f: &Formula) -> Result<bool, KripkeError> {
        if w >= self.worlds {
            return Err(KripkeError::InvalidWorld(w));
        }
        if let Some(missing) = f.atoms().into_iter().find(|a| !self.valuation.contains_key(a)) {
            return Err(KripkeError::UnknownAtom(missing));
        }
        Ok(self.eval(w, f))
    }

    /// Truth of `f` at the designated world.
    pub fn satisfies(&self, f: &Formula) -> Result<bool, KripkeError> {
        self.evaluate(self.designated, f)
    }

    fn eval(&self, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(name) => self.valuation[name].contains(&w),
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Not(g) => !self.eval(w, g),
            Formula::And(l, r) => self.eval(w, l) && self.eval(w, r),
            Formula::Or(l, r) => self.eval(w, l) || self.eval(w, r),
            Formula::Implies(l, r) => !self.eval(w, l) || self.eval(w, r),
            Formula::Iff(l, r) => self.eval(w, l) == self.eval(w, r),
            Formula::Box(g) => self.successors(w).all(|v| self.eval(v, g)),
            Formula::Diamond(g) => self.successors(w).any(|v| self.eval(v, g)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }
}

/// Default cap on candidate worlds examined per enumeration level.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 50_000_000;

/// Number of successors a world at each modal level may need in a tree model.
///
/// For formulas in negation normal form only `◇` subformulas need witnesses;
/// otherwise every modal subformula is counted, because a negated `□` needs a
/// counter-witness too.
fn branching(f: &Formula) -> Vec<usize> {
    let count_boxes = !f.is_nnf();
    let mut per_level: Vec<BTreeSet<&Formula>> = vec![BTreeSet::new(); f.modal_depth()];
    fn walk<'a>(g: &'a Formula, level: usize, boxes: bool, out: &mut Vec<BTreeSet<&'a Formula>>) {
        match g {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => {}
            Formula::Not(x) => walk(x, level, boxes, out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                walk(l, level, boxes, out);
                walk(r, level, boxes, out);
            }
            Formula::Box(x) => {
                if boxes {
                    out[level].insert(g);
                }
                walk(x, level + 1, boxes, out);
            }
            Formula::Diamond(x) => {
                out[level].insert(g);
                walk(x, level + 1, boxes, out);
            }
        }
    }
    walk(f, 0, count_boxes, &mut per_level);
    per_level.iter().map(BTreeSet::len).collect()
}

/// World count sufficient for deciding satisfiability of `f` by tree-model
/// enumeration: `1 + b0 + b0·b1 + …` where `bj` is the per-level branching.
///
/// A formula of modal depth `d` is satisfiable iff it has a tree model of
/// depth at most `d` in which each world at level `j` has at most `bj`
/// successors, so enumerating up to this many worlds is complete.
pub fn tree_model_bound(f: &Formula) -> usize {
    let mut total = 1usize;
    let mut layer = 1usize;
    for b in branching(f) {
        layer = layer.saturating_mul(b);
        total = total.saturating_add(layer);
    }
    total
}

/// Searches tree-shaped models of `f` with at most `max_worlds` worlds.
///
/// Returns the first model in a fixed enumeration order (root valuation,
/// then successor sets by increasing size). Worlds are only distinguished by
/// the truth of the subformulas their parent can observe, so successor sets
/// range over distinct observable profiles; this is exhaustive over tree
/// models up to the bound.
pub fn sat_by_enumeration(f: &Formula, max_worlds: usize) -> Result<Option<KripkeModel>, KripkeError> {
    sat_by_enumeration_with_limit(f, max_worlds, DEFAULT_ENUMERATION_LIMIT)
}

pub fn sat_by_enumeration_with_limit(
    f: &Formula,
    max_worlds: usize,
    limit: u128,
) -> Result<Option<KripkeModel>, KripkeError> {
    if max_worlds == 0 {
        return Err(KripkeError::InvalidBound);
    }
    Enumerator::new(f, limit).run(max_worlds)
}

/// Formula compiled for evaluation at one modal level. Modal nodes refer to
/// a bit in the successor profiles (index into the next level's roots).
enum Node {
    Atom(usize),
    Const(bool),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Implies(Box<Node>, Box<Node>),
    Iff(Box<Node>, Box<Node>),
    Box(usize),
    Diamond(usize),
}

impl Node {
    fn eval(&self, valuation: u64, children: &[u64]) -> bool {
        match self {
            Node::Atom(i) => valuation & (1 << i) != 0,
            Node::Const(b) => *b,
            Node::Not(x) => !x.eval(valuation, children),
            Node::And(l, r) => l.eval(valuation, children) && r.eval(valuation, children),
            Node::Or(l, r) => l.eval(valuation, children) || r.eval(valuation, children),
            Node::Implies(l, r) => !l.eval(valuation, children) || r.eval(valuation, children),
            Node::Iff(l, r) => l.eval(valuation, children) == r.eval(valuation, children),
            Node::Box(i) => children.iter().all(|p| p & (1 << i) != 0),
            Node::Diamond(i) => children.iter().any(|p| p & (1 << i) != 0),
        }
    }
}

struct Level {
    roots: Vec<Node>,
    atoms: Vec<usize>,
    branching: usize,
}

/// Candidate world at some level: the profile its parent observes, the
/// smallest subtree realizing it, and how to rebuild that subtree.
#[derive(Clone)]
struct Entry {
    profile: u64,
    size: usize,
    valuation: u64,
    children: Vec<usize>,
}

struct Enumerator {
    atom_names: Vec<String>,
    levels: Vec<Level>,
    limit: u128,
}

impl Enumerator {
    fn new(f: &Formula, limit: u128) -> Self {
        let atom_names: Vec<String> = f.atoms().into_iter().collect();
        let atom_index: HashMap<&str, usize> =
            atom_names.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let branching = branching(f);

        let mut levels = Vec::new();
        let mut current: Vec<Formula> = vec![f.clone()];
        for level in 0..=f.modal_depth() {
            let mut next: Vec<Formula> = Vec::new();
            let mut next_index: HashMap<Formula, usize> = HashMap::new();
            let mut atoms = BTreeSet::new();
            let roots = current
                .iter()
                .map(|g| compile(g, &atom_index, &mut atoms, &mut next, &mut next_index))
                .collect();
            levels.push(Level {
                roots,
                atoms: atoms.into_iter().collect(),
                branching: branching.get(level).copied().unwrap_or(0),
            });
            current = next;
        }
        Enumerator {
            atom_names,
            levels,
            limit,
        }
    }

    fn valuations(&self, level: &Level) -> impl Iterator<Item = u64> + '_ {
        let atoms = level.atoms.clone();
        (0u64..1 << atoms.len()).map(move |bits| {
            atoms
                .iter()
                .enumerate()
                .filter(|(k, _)| bits & (1 << k) != 0)
                .fold(0u64, |acc, (_, &i)| acc | (1 << i))
        })
    }

    fn check_budget(&self, level: &Level, candidates: usize) -> Result<(), KripkeError> {
        let subsets: u128 = (0..=level.branching.min(candidates))
            .map(|k| binomial(candidates as u128, k as u128))
            .sum();
        let required = subsets.saturating_mul(1u128 << level.atoms.len());
        if required > self.limit {
            return Err(KripkeError::EnumerationLimit {
                required,
                limit: self.limit,
            });
        }
        Ok(())
    }

    fn run(&self, max_worlds: usize) -> Result<Option<KripkeModel>, KripkeError> {
        if self.levels.iter().any(|l| l.roots.len() > 64) || self.atom_names.len() > 64 {
            return Err(KripkeError::EnumerationLimit {
                required: u128::MAX,
                limit: self.limit,
            });
        }
        let depth = self.levels.len() - 1;
        // entries[j] holds candidate worlds for level j (j >= 1)
        let mut entries: Vec<Vec<Entry>> = vec![Vec::new(); depth + 1];
        for j in (1..=depth).rev() {
            let level = &self.levels[j];
            let below: Vec<Entry> = if j < depth {
                entries[j + 1].clone()
            } else {
                Vec::new()
            };
            // a world at level j leaves room for its ancestors
            let room = max_worlds.saturating_sub(j);
            self.check_budget(level, below.len())?;
            let mut by_profile: HashMap<u64, usize> = HashMap::new();
            let mut found: Vec<Entry> = Vec::new();
            for valuation in self.valuations(level) {
                for k in 0..=level.branching.min(below.len()) {
                    for subset in (0..below.len()).combinations(k) {
                        let size = 1 + subset.iter().map(|&i| below[i].size).sum::<usize>();
                        if size > room {
                            continue;
                        }
                        let profiles: Vec<u64> = subset.iter().map(|&i| below[i].profile).collect();
                        let profile = level
                            .roots
                            .iter()
                            .enumerate()
                            .filter(|(_, r)| r.eval(valuation, &profiles))
                            .fold(0u64, |acc, (i, _)| acc | (1 << i));
                        match by_profile.get(&profile) {
                            Some(&idx) if found[idx].size <= size => {}
                            Some(&idx) => {
                                found[idx] = Entry {
                                    profile,
                                    size,
                                    valuation,
                                    children: subset,
                                }
                            }
                            None => {
                                by_profile.insert(profile, found.len());
                                found.push(Entry {
                                    profile,
                                    size,
                                    valuation,
                                    children: subset,
                                });
                            }
                        }
                    }
                }
            }
            entries[j] = found;
        }

        let root = &self.levels[0];
        let below: &[Entry] = if depth >= 1 { &entries[1] } else { &[] };
        self.check_budget(root, below.len())?;
        for valuation in self.valuations(root) {
            for k in 0..=root.branching.min(below.len()) {
                for subset in (0..below.len()).combinations(k) {
                    let size = 1 + subset.iter().map(|&i| below[i].size).sum::<usize>();
                    if size > max_worlds {
                        continue;
                    }
                    let profiles: Vec<u64> = subset.iter().map(|&i| below[i].profile).collect();
                    if root.roots[0].eval(valuation, &profiles) {
                        let top = Entry {
                            profile: 1,
                            size,
                            valuation,
                            children: subset,
                        };
                        return Ok(Some(self.build_model(&top, &entries)));
                    }
                }
            }
        }
        Ok(None)
    }

    fn build_model(&self, root: &Entry, entries: &[Vec<Entry>]) -> KripkeModel {
        let mut accessibility = BTreeSet::new();
        let mut valuation: BTreeMap<String, BTreeSet<usize>> =
            self.atom_names.iter().map(|a| (a.clone(), BTreeSet::new())).collect();
        let mut next_id = 0usize;
        // preorder numbering, root is world 0
        let mut stack: Vec<(Entry, usize, Option<usize>)> = vec![(root.clone(), 0, None)];
        while let Some((entry, level, parent)) = stack.pop() {
            let id = next_id;
            next_id += 1;
            if let Some(p) = parent {
                accessibility.insert((p, id));
            }
            for (i, name) in self.atom_names.iter().enumerate() {
                if entry.valuation & (1 << i) != 0 {
                    valuation.get_mut(name).unwrap().insert(id);
                }
            }
            for &child in entry.children.iter().rev() {
                stack.push((entries[level + 1][child].clone(), level + 1, Some(id)));
            }
        }
        KripkeModel::new(next_id, accessibility, valuation, 0).expect("enumerated model is well formed")
    }
}

fn compile(
    f: &Formula,
    atom_index: &HashMap<&str, usize>,
    atoms: &mut BTreeSet<usize>,
    next: &mut Vec<Formula>,
    next_index: &mut HashMap<Formula, usize>,
) -> Node {
    match f {
        Formula::Atom(name) => {
            let i = atom_index[name.as_str()];
            atoms.insert(i);
            Node::Atom(i)
        }
        Formula::Top => Node::Const(true),
        Formula::Bottom => Node::Const(false),
        Formula::Not(g) => Node::Not(Box::new(compile(g, atom_index, atoms, next, next_index))),
        Formula::And(l, r) => Node::And(
            Box::new(compile(l, atom_index, atoms, next, next_index)),
            Box::new(compile(r, atom_index, atoms, next, next_index)),
        ),
        Formula::Or(l, r) => Node::Or(
            Box::new(compile(l, atom_index, atoms, next, next_index)),
            Box::new(compile(r, atom_index, atoms, next, next_index)),
        ),
        Formula::Implies(l, r) => Node::Implies(
            Box::new(compile(l, atom_index, atoms, next, next_index)),
            Box::new(compile(r, atom_index, atoms, next, next_index)),
        ),
        Formula::Iff(l, r) => Node::Iff(
            Box::new(compile(l, atom_index, atoms, next, next_index)),
            Box::new(compile(r, atom_index, atoms, next, next_index)),
        ),
        Formula::Box(g) => Node::Box(intern(g, next, next_index)),
        Formula::Diamond(g) => Node::Diamond(intern(g, next, next_index)),
    }
}

fn intern(g: &Formula, next: &mut Vec<Formula>, next_index: &mut HashMap<Formula, usize>) -> usize {
    *next_index.entry(g.clone()).or_insert_with(|| {
        next.push(g.clone());
        next.len() - 1
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn single_world(a_true: bool) -> KripkeModel {
        let mut valuation = BTreeMap::new();
        valuation.insert(
            "a".to_owned(),
            if a_true { BTreeSet::from([0]) } else { BTreeSet::new() },
        );
        KripkeModel::new(1, BTreeSet::new(), valuation, 0).unwrap()
    }

    #[test]
    fn vacuous_box_and_empty_diamond() {
        let m = single_world(false);
        assert!(m.evaluate(0, &parse("[]a").unwrap()).unwrap());
        assert!(!m.evaluate(0, &parse("<>a").unwrap()).unwrap());
    }

    #[test]
    fn two_world_evaluation() {
        let mut valuation = BTreeMap::new();
        valuation.insert("a".to_owned(), BTreeSet::from([1]));
        let m = KripkeModel::new(2, BTreeSet::from([(0, 1)]), valuation, 0).unwrap();
        assert!(m.evaluate(0, &parse("<>a & []a").unwrap()).unwrap());
        assert!(!m.evaluate(0, &parse("a").unwrap()).unwrap());
        assert!(m.evaluate(1, &parse("[]0").unwrap()).unwrap());
    }

    #[test]
    fn evaluation_errors() {
        let m = single_world(true);
        assert_eq!(m.evaluate(3, &parse("a").unwrap()), Err(KripkeError::InvalidWorld(3)));
        assert_eq!(
            m.evaluate(0, &parse("a & b").unwrap()),
            Err(KripkeError::UnknownAtom("b".into()))
        );
        assert!(KripkeModel::new(2, BTreeSet::from([(0, 2)]), BTreeMap::new(), 0).is_err());
        assert!(KripkeModel::new(1, BTreeSet::new(), BTreeMap::new(), 1).is_err());
    }

    #[test]
    fn json_shape() {
        let mut valuation = BTreeMap::new();
        valuation.insert("a".to_owned(), BTreeSet::from([1]));
        let m = KripkeModel::new(2, BTreeSet::from([(0, 1)]), valuation, 0).unwrap();
        assert_eq!(
            m.to_json(),
            r#"{"worlds":2,"accessibility":[[0,1]],"valuation":{"a":[1]},"designated":0}"#
        );
        let back: KripkeModel = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"worlds":1,"accessibility":[[0,4]],"valuation":{},"designated":0}"#;
        assert!(serde_json::from_str::<KripkeModel>(bad).is_err());
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(sat_by_enumeration(&parse("<>a & []~a").unwrap(), 3).unwrap(), None);

        let f = parse("<>(a & b) & <>(a & ~b)").unwrap();
        let m = sat_by_enumeration(&f, 3).unwrap().unwrap();
        assert_eq!(m.worlds(), 3);
        assert!(m.satisfies(&f).unwrap());
        assert_eq!(sat_by_enumeration(&f, 2).unwrap(), None);

        let m = sat_by_enumeration(&parse("a -> a").unwrap(), 1).unwrap().unwrap();
        assert_eq!(m.worlds(), 1);
        assert_eq!(sat_by_enumeration(&parse("a").unwrap(), 0), Err(KripkeError::InvalidBound));
    }

    #[test]
    fn depth_two_models() {
        let f = parse("<><>a & []<>~a & <>b").unwrap();
        let m = sat_by_enumeration(&f, tree_model_bound(&f)).unwrap().unwrap();
        assert!(m.satisfies(&f).unwrap());
        let g = parse("<><>a & [][]~a").unwrap();
        assert_eq!(sat_by_enumeration(&g, tree_model_bound(&g)).unwrap(), None);
    }

    #[test]
    fn bound_counts_levels() {
        assert_eq!(tree_model_bound(&parse("a & b").unwrap()), 1);
        assert_eq!(tree_model_bound(&parse("<>a & <>b & []c").unwrap()), 3);
        // not in nnf: boxes count as well
        assert_eq!(tree_model_bound(&parse("~([]a & <>b)").unwrap()), 3);
        assert_eq!(tree_model_bound(&parse("<><>a & <>b").unwrap()), 1 + 2 + 2);
    }

    #[test]
    fn limit_is_reported() {
        let f = parse("<>a & <>b & <>c & <>(a&b) & <>(b&c)").unwrap();
        assert!(matches!(
            sat_by_enumeration_with_limit(&f, 10, 4),
            Err(KripkeError::EnumerationLimit { .. })
        ));
    }
}
