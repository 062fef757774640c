//! wasm-bindgen exports behind `www/index.html`. Each export returns a JSON
//! string; errors come back as a JS string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use modal_nli::meta::{self, parse_constraints, parse_pair};
use modal_nli::{parse, tableau, Reading};

fn reading(name: &str) -> Result<Reading, String> {
    name.parse()
}

/// `mode` is `valid` or `sat`. The result carries the verdict, the parsed
/// formula and, when there is one, the countermodel or witness.
pub fn prove_json(formula: &str, mode: &str) -> Result<String, String> {
    let f = parse(formula).map_err(|e| e.to_string())?;
    let (verdict, model) = match mode {
        "valid" => {
            let v = tableau::is_valid(&f).map_err(|e| e.to_string())?;
            (if v.holds { "valid" } else { "not valid" }, v.countermodel)
        }
        "sat" => {
            let r = tableau::is_satisfiable(&f).map_err(|e| e.to_string())?;
            let verdict = if r.is_satisfiable() { "satisfiable" } else { "unsatisfiable" };
            (verdict, r.into_model())
        }
        other => return Err(format!("unknown mode {other:?}")),
    };
    let model = match model {
        Some(m) => serde_json::to_value(&m).map_err(|e| e.to_string())?,
        None => Value::Null,
    };
    Ok(json!({ "verdict": verdict, "formula": f.render(), "model": model }).to_string())
}

pub fn labels_json(reading_name: &str, given: &str, target: &str) -> Result<String, String> {
    let constraints = parse_constraints(given)?;
    let (p, h) = parse_pair(target)?;
    let result = meta::possible_labels(reading(reading_name)?, &constraints, (&p, &h)).map_err(|e| e.to_string())?;
    let labels: Vec<String> = result.labels.iter().map(|l| l.to_string()).collect();
    Ok(json!({
        "labels": labels,
        "constraint": result.labels.constraint_name(Some((&p, &h))),
        "display": format!("{} ({})", result.labels, result.labels.constraint_name(None)),
        "vacuous": result.vacuous,
    })
    .to_string())
}

/// `reading_name` is `mc`, `sc`, `ei` or `all`.
pub fn table2_json(reading_name: &str) -> Result<String, String> {
    let readings = match reading_name {
        "all" => Reading::ALL.to_vec(),
        r => vec![reading(r)?],
    };
    let report = meta::reproduce_table2_for(&readings).map_err(|e| e.to_string())?;
    let cells: Vec<Value> = report
        .cells
        .iter()
        .map(|c| {
            json!({
                "statement": c.statement,
                "reading": c.reading.name(),
                "expected": c.expected.symbol(),
                "computed": c.computed.symbol(),
                "match": c.matches,
            })
        })
        .collect();
    Ok(json!({ "matched": report.matched(), "total": report.cells.len(), "cells": cells }).to_string())
}

#[wasm_bindgen]
pub fn prove(formula: &str, mode: &str) -> Result<String, JsValue> {
    prove_json(formula, mode).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn possible_labels(reading: &str, given: &str, target: &str) -> Result<String, JsValue> {
    labels_json(reading, given, target).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn table2(reading: &str) -> Result<String, JsValue> {
    table2_json(reading).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn prove_shapes() {
        let v = parsed(prove_json("[]a -> a", "valid").unwrap());
        assert_eq!(v["verdict"], "not valid");
        assert_eq!(v["formula"], "□a → a");
        assert_eq!(v["model"]["designated"], 0);
        let v = parsed(prove_json("<>a & []~a", "sat").unwrap());
        assert_eq!(v["verdict"], "unsatisfiable");
        assert!(v["model"].is_null());
        assert!(prove_json("a &", "valid").is_err());
        assert!(prove_json("a", "maybe").is_err());
    }

    #[test]
    fn labels_shape() {
        let v = parsed(labels_json("ei", "C(a,b)", "b,a").unwrap());
        assert_eq!(v["display"], "{C, N} (¬E)");
        assert_eq!(v["constraint"], "¬Eba");
        assert_eq!(v["labels"], json!(["C", "N"]));
    }

    #[test]
    fn catalog_shape() {
        let v = parsed(table2_json("ei").unwrap());
        assert_eq!(v["total"], 21);
        assert_eq!(v["matched"], 21);
        assert!(table2_json("xx").is_err());
    }
}
