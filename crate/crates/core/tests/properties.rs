use proptest::prelude::*;

use modal_nli::dataset::{
    build_inferred, BuildOptions, COrigin, GeneratedItem, InferredItem, InputItem, NliItem, Pattern, Role, Source,
};
use modal_nli::kripke::{sat_by_enumeration, tree_model_bound};
use modal_nli::meta::{possible_labels, Constraint};
use modal_nli::scorer::{score, Predictions};
use modal_nli::{parse, tableau, Formula, Label, Reading};

fn formula(atoms: usize, depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        8 => (0..atoms).prop_map(|i| Formula::atom(["a", "b", "c"][i])),
        1 => Just(Formula::Top),
        1 => Just(Formula::Bottom),
    ];
    leaf.prop_recursive(depth * 2, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::iff(l, r)),
            inner.clone().prop_map(Formula::necessarily),
            inner.prop_map(Formula::possibly),
        ]
    })
}

/// Small enough for the enumeration oracle.
fn small_formula() -> impl Strategy<Value = Formula> {
    formula(3, 3).prop_filter("oracle-sized", |f| f.modal_depth() <= 2 && f.size() <= 14)
}

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::E), Just(Label::C), Just(Label::N)]
}

fn reading() -> impl Strategy<Value = Reading> {
    prop_oneof![Just(Reading::Mc), Just(Reading::Sc), Just(Reading::Ei)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn render_parse_round_trip(f in formula(3, 4)) {
        prop_assert_eq!(parse(&f.render()).unwrap(), f.clone());
        prop_assert_eq!(parse(&f.render_ascii()).unwrap(), f);
    }

    #[test]
    fn nnf_is_idempotent(f in formula(3, 4)) {
        let once = f.nnf();
        prop_assert!(once.is_nnf());
        prop_assert_eq!(once.nnf(), once);
    }

    #[test]
    fn nnf_preserves_equivalence(f in small_formula()) {
        let g = f.nnf();
        prop_assert!(tableau::are_equivalent(&f, &g).unwrap().holds);
        let differ = Formula::not(Formula::iff(f.clone(), g));
        let bound = tree_model_bound(&differ);
        prop_assert!(sat_by_enumeration(&differ, bound).unwrap().is_none());
    }

    #[test]
    fn tableau_agrees_with_enumeration(f in small_formula()) {
        let result = tableau::is_satisfiable(&f).unwrap();
        let oracle = sat_by_enumeration(&f, tree_model_bound(&f)).unwrap();
        prop_assert_eq!(result.is_satisfiable(), oracle.is_some());
        if let Some(m) = result.model() {
            prop_assert!(m.satisfies(&f).unwrap());
        }
        if let Some(m) = oracle {
            prop_assert!(m.satisfies(&f).unwrap());
        }
    }

    #[test]
    fn enumeration_is_monotone_in_world_count(f in small_formula(), k in 1usize..5) {
        if sat_by_enumeration(&f, k).unwrap().is_some() {
            prop_assert!(sat_by_enumeration(&f, k + 1).unwrap().is_some());
        }
    }

    #[test]
    fn validity_is_unsatisfiability_of_negation(f in formula(2, 3)) {
        let valid = tableau::is_valid(&f).unwrap();
        let neg = tableau::is_satisfiable(&Formula::not(f.clone())).unwrap();
        prop_assert_eq!(valid.holds, !neg.is_satisfiable());
        if let Some(m) = valid.countermodel {
            prop_assert!(!m.satisfies(&f).unwrap());
        }
    }

    #[test]
    fn more_constraints_allow_fewer_labels(
        r in reading(),
        l1 in label(),
        l2 in label(),
        target in prop_oneof![Just(("b", "a")), Just(("a", "c")), Just(("c", "a")), Just(("b", "c"))],
    ) {
        let first = Constraint::new(l1, "a", "b");
        let second = Constraint::new(l2, "b", "c");
        let one = possible_labels(r, std::slice::from_ref(&first), target).unwrap();
        let two = possible_labels(r, &[first, second], target).unwrap();
        prop_assert!(two.labels.is_subset(one.labels));
    }

    #[test]
    fn score_percentages_are_consistent(preds in prop::collection::vec((0usize..3, label(), label()), 1..40)) {
        let items: Vec<_> = preds
            .iter()
            .enumerate()
            .map(|(i, &(kind, gold, _))| {
                let inputs = match kind {
                    0 => vec![(gold, Role::Ab)],
                    _ => vec![(gold, Role::Ab), (Label::E, Role::Bc)],
                };
                InferredItem {
                    id: i.to_string(),
                    pattern: [Pattern::Ba, Pattern::Ac, Pattern::Ca][kind],
                    premise: String::new(),
                    hypothesis: String::new(),
                    input_items: inputs
                        .into_iter()
                        .enumerate()
                        .map(|(j, (label, role))| InputItem { id: format!("{i}.{j}"), label, role })
                        .collect(),
                    c_origin: if kind == 0 { COrigin::None } else { COrigin::G },
                }
            })
            .collect();
        let predictions: Predictions = preds.iter().enumerate().map(|(i, &(_, _, p))| (i.to_string(), p)).collect();
        // Antecedents predicted correctly except on every third item.
        let antecedent: Predictions = items
            .iter()
            .enumerate()
            .flat_map(|(i, item)| {
                item.input_items.iter().map(move |x| {
                    let label = if i % 3 == 0 { Label::ALL[(x.label as usize + 1) % 3] } else { x.label };
                    (x.id.clone(), label)
                })
            })
            .collect();

        let unfiltered = score(&items, &predictions, None).unwrap();
        let filtered = score(&items, &predictions, Some(&antecedent)).unwrap();
        prop_assert_eq!(unfiltered.iter().map(|r| r.count).sum::<usize>(), items.len());
        for r in &unfiltered {
            let total: f64 = Label::ALL.iter().map(|&l| r.pct(l)).sum();
            prop_assert!((total - 100.0).abs() < 1e-9);
            for reading in [Reading::Sc, Reading::Ei] {
                if let Some(c) = r.consistency(reading) {
                    let sum: f64 = r.expected(reading).iter().map(|l| r.pct(l)).sum();
                    prop_assert!((c - sum).abs() < 1e-9);
                }
            }
            let f = filtered.iter().find(|x| x.inputs == r.inputs && x.pattern == r.pattern);
            prop_assert!(f.map_or(0, |f| f.count) <= r.count);
        }
    }

    #[test]
    fn builder_counting_law(n in 1usize..6, joins in prop::collection::vec(0usize..3, 6)) {
        let snli: Vec<NliItem> = (0..n)
            .map(|i| NliItem {
                id: format!("s{i}"),
                premise: "A premise.".into(),
                hypothesis: format!("Hypothesis {i}."),
                gold_label: Some(Label::ALL[i % 3]),
                annotator_labels: vec![],
                caption_id: Some("cap".into()),
                source: Source::Snli,
            })
            .collect();
        let generated: Vec<GeneratedItem> = (0..n)
            .flat_map(|i| {
                (0..joins[i]).map(move |j| GeneratedItem {
                    id: format!("g{i}.{j}"),
                    premise: format!("Hypothesis {i}."),
                    hypothesis: format!("Generated {i}.{j}."),
                    label: Label::ALL[j % 3],
                    source_item_id: format!("s{i}"),
                    generator: "m".into(),
                })
            })
            .collect();
        let built = build_inferred(&snli, &generated, BuildOptions::default());
        let count = |p: Pattern| built.items.iter().filter(|i| i.pattern == p).count();
        let total_joins: usize = joins[..n].iter().sum();
        prop_assert_eq!(count(Pattern::Ba), n);
        prop_assert_eq!(count(Pattern::Bc), n * (n - 1));
        prop_assert_eq!(count(Pattern::Ac), total_joins);
        prop_assert_eq!(count(Pattern::Ca), total_joins);
        for item in &built.items {
            let expected_inputs = if item.pattern == Pattern::Ba { 1 } else { 2 };
            prop_assert_eq!(item.input_items.len(), expected_inputs);
        }
    }
}
