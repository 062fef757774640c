use modal_nli::dataset::{COrigin, InferredItem, InputItem, Pattern, Role};
use modal_nli::scorer::{render_report, score, PatternReport, Predictions, ReportFormat};
use modal_nli::{Label, Reading};

fn ba_items(n: usize) -> Vec<InferredItem> {
    (0..n)
        .map(|i| InferredItem {
            id: format!("ba:{i}"),
            pattern: Pattern::Ba,
            premise: format!("b{i}"),
            hypothesis: format!("a{i}"),
            input_items: vec![InputItem {
                id: i.to_string(),
                label: Label::C,
                role: Role::Ab,
            }],
            c_origin: COrigin::None,
        })
        .collect()
}

/// Eight C and two N predictions on ten ba items with input C.
fn fixture() -> (Vec<InferredItem>, Predictions) {
    let items = ba_items(10);
    let preds = items
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.clone(), if i < 8 { Label::C } else { Label::N }))
        .collect();
    (items, preds)
}

fn single(reports: Vec<PatternReport>) -> PatternReport {
    assert_eq!(reports.len(), 1);
    reports.into_iter().next().unwrap()
}

#[test]
fn unfiltered_percentages() {
    let (items, preds) = fixture();
    let r = single(score(&items, &preds, None).unwrap());
    assert_eq!(r.signature(), "Cab");
    assert_eq!(r.count, 10);
    assert_eq!(r.counts, [0, 8, 2]);
    assert_eq!(r.constraint(Reading::Sc), "Cba");
    assert_eq!(r.constraint(Reading::Ei), "¬Eba");
    assert_eq!(r.consistent(Reading::Sc), Some(8));
    assert_eq!(r.consistent(Reading::Ei), Some(10));

    let csv = render_report(&[r], ReportFormat::Csv);
    assert_eq!(
        csv,
        "input items,item,c,count,E,C,N,SC,SC✓,EI,EI✓\nCab,ba,--,10,0.0,80.0,20.0,Cba,80.0,¬Eba,100.0\n"
    );
}

#[test]
fn filtered_drops_wrong_antecedents() {
    let (items, preds) = fixture();
    // Antecedents 0, 4 and 9 mispredicted.
    let antecedent: Predictions = (0..10)
        .map(|i| (i.to_string(), if [0, 4, 9].contains(&i) { Label::N } else { Label::C }))
        .collect();
    let r = single(score(&items, &preds, Some(&antecedent)).unwrap());
    assert_eq!(r.count, 7);
    assert_eq!(r.counts, [0, 6, 1]);
    let csv = render_report(&[r], ReportFormat::Csv);
    assert!(csv.ends_with("Cab,ba,--,7,0.0,85.7,14.3,Cba,85.7,¬Eba,100.0\n"), "{csv}");
}

#[test]
fn trivial_constraint_has_no_score() {
    let mut items = ba_items(2);
    for it in &mut items {
        it.input_items[0].label = Label::E;
    }
    let preds = items.iter().map(|i| (i.id.clone(), Label::N)).collect();
    let r = single(score(&items, &preds, None).unwrap());
    assert_eq!(r.consistency(Reading::Sc), None);
    assert_eq!(r.constraint(Reading::Sc), "--");
    assert_eq!(r.consistency(Reading::Ei), Some(100.0));
}

#[test]
fn csv_reparses() {
    let (items, preds) = fixture();
    let reports = score(&items, &preds, None).unwrap();
    let text = render_report(&reports, ReportFormat::Csv);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(headers[8], "SC✓");
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][3], "10");
    assert_eq!(rows[0][5].parse::<f64>().unwrap(), 80.0);
    assert_eq!(&rows[0][9], "¬Eba");
}

#[test]
fn rows_follow_table_order() {
    let mk = |id: &str, pattern, inputs: &[(Label, Role)], c_origin| InferredItem {
        id: id.into(),
        pattern,
        premise: String::new(),
        hypothesis: String::new(),
        input_items: inputs
            .iter()
            .enumerate()
            .map(|(j, &(label, role))| InputItem {
                id: format!("{id}.{j}"),
                label,
                role,
            })
            .collect(),
        c_origin,
    };
    let items = vec![
        mk("1", Pattern::Bc, &[(Label::N, Role::Ab), (Label::C, Role::Ac)], COrigin::H),
        mk("2", Pattern::Ba, &[(Label::N, Role::Ab)], COrigin::None),
        mk("3", Pattern::Ba, &[(Label::C, Role::Ab)], COrigin::None),
        mk("4", Pattern::Ca, &[(Label::C, Role::Ab), (Label::C, Role::Bc)], COrigin::G),
        mk("5", Pattern::Ca, &[(Label::E, Role::Ab), (Label::E, Role::Bc)], COrigin::G),
        mk("6", Pattern::Ac, &[(Label::E, Role::Ab), (Label::C, Role::Bc)], COrigin::G),
    ];
    let preds = items.iter().map(|i| (i.id.clone(), Label::N)).collect();
    let reports = score(&items, &preds, None).unwrap();
    let order: Vec<String> = reports.iter().map(|r| format!("{} {}", r.pattern.name(), r.signature())).collect();
    assert_eq!(order, ["ba Cab", "ba Nab", "ac Eab∧Cbc", "ca Eab∧Ebc", "ca Cab∧Cbc", "bc Nab∧Cac"]);
    let published = modal_nli::scorer::published_rows(reports);
    assert_eq!(published.len(), 5);
}
