//! Construction of the inferred test set.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{COrigin, GeneratedItem, InferredItem, InputItem, NliItem, Pattern, Role};
use crate::readings::Label;

/// Items share a group when they share a caption id, or, lacking one, the
/// same trimmed premise text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Caption(String),
    Premise(String),
}

impl GroupKey {
    pub fn of(item: &NliItem) -> GroupKey {
        match &item.caption_id {
            Some(c) => GroupKey::Caption(c.clone()),
            None => GroupKey::Premise(item.premise.trim().to_owned()),
        }
    }
}

/// Groups in key order; items keep their input order within a group.
pub fn group_by_premise(items: &[NliItem]) -> BTreeMap<GroupKey, Vec<&NliItem>> {
    let mut groups: BTreeMap<GroupKey, Vec<&NliItem>> = BTreeMap::new();
    for item in items {
        groups.entry(GroupKey::of(item)).or_default().push(item);
    }
    groups
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildOptions {
    /// Drop an item when an earlier one has the same pattern, premise and
    /// hypothesis text.
    pub dedup: bool,
}

/// A generated item that joined no labelled SNLI hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub generated_id: String,
    pub premise: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildOutput {
    pub items: Vec<InferredItem>,
    pub skipped: Vec<SkipEntry>,
}

/// Applies the four construction rules. Output is in pattern blocks
/// (ba, bc, ac, ca), each walking the premise groups in key order.
pub fn build_inferred(snli: &[NliItem], generated: &[GeneratedItem], options: BuildOptions) -> BuildOutput {
    let groups = group_by_premise(snli);
    let labelled: Vec<(&NliItem, Label)> = groups
        .values()
        .flatten()
        .filter_map(|item| item.gold_label.map(|l| (*item, l)))
        .collect();

    let mut items = Vec::new();

    for &(item, label) in &labelled {
        items.push(InferredItem {
            id: format!("ba:{}", item.id),
            pattern: Pattern::Ba,
            premise: item.hypothesis.clone(),
            hypothesis: item.premise.clone(),
            input_items: vec![input(item.id.clone(), label, Role::Ab)],
            c_origin: COrigin::None,
        });
    }

    for group in groups.values() {
        let members: Vec<(&NliItem, Label)> = group
            .iter()
            .filter_map(|item| item.gold_label.map(|l| (*item, l)))
            .collect();
        for (i, &(first, l1)) in members.iter().enumerate() {
            for (j, &(second, l2)) in members.iter().enumerate() {
                if i == j {
                    continue;
                }
                items.push(InferredItem {
                    id: format!("bc:{}:{}", first.id, second.id),
                    pattern: Pattern::Bc,
                    premise: first.hypothesis.clone(),
                    hypothesis: second.hypothesis.clone(),
                    input_items: vec![
                        input(first.id.clone(), l1, Role::Ab),
                        input(second.id.clone(), l2, Role::Ac),
                    ],
                    c_origin: COrigin::H,
                });
            }
        }
    }

    let mut by_premise: HashMap<&str, Vec<&GeneratedItem>> = HashMap::new();
    for g in generated {
        by_premise.entry(g.premise.trim()).or_default().push(g);
    }
    let mut joined: HashSet<&str> = HashSet::new();
    let mut joins = Vec::new();
    for &(item, label) in &labelled {
        for &g in by_premise.get(item.hypothesis.trim()).into_iter().flatten() {
            joined.insert(&g.id);
            joins.push((item, label, g));
        }
    }
    for (pattern, id_prefix) in [(Pattern::Ac, "ac"), (Pattern::Ca, "ca")] {
        for &(item, label, g) in &joins {
            let (premise, hypothesis) = match pattern {
                Pattern::Ac => (&item.premise, &g.hypothesis),
                _ => (&g.hypothesis, &item.premise),
            };
            items.push(InferredItem {
                id: format!("{id_prefix}:{}:{}", item.id, g.id),
                pattern,
                premise: premise.clone(),
                hypothesis: hypothesis.clone(),
                input_items: vec![
                    input(item.id.clone(), label, Role::Ab),
                    input(g.id.clone(), g.label, Role::Bc),
                ],
                c_origin: COrigin::G,
            });
        }
    }

    let skipped = generated
        .iter()
        .filter(|g| !joined.contains(g.id.as_str()))
        .map(|g| SkipEntry {
            generated_id: g.id.clone(),
            premise: g.premise.clone(),
            reason: "premise matches no labelled SNLI hypothesis".into(),
        })
        .collect();

    if options.dedup {
        let mut seen = HashSet::new();
        items.retain(|it| seen.insert((it.pattern, it.premise.trim().to_owned(), it.hypothesis.trim().to_owned())));
    }

    BuildOutput { items, skipped }
}

fn input(id: String, label: Label, role: Role) -> InputItem {
    InputItem { id, label, role }
}
