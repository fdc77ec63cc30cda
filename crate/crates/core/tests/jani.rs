mod common;

use std::path::PathBuf;

use common::*;
use pomdp_shield::analysis::{ExplicitBeliefSupportMdp, DEFAULT_NODE_CAP};
use pomdp_shield::benchmarks::{cheese, obstacle};
use pomdp_shield::jani::export_jani;
use serde_json::Value;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares with the stored file; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, text: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let stored = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(stored == text, "{name} differs from the golden file");
}

#[test]
fn interpreted_export_matches_the_explicit_support_mdp() {
    let mut checked = 0;
    for (seed, inst) in small_corpus(6) {
        let doc = export_jani(&inst.pomdp, &inst.spec);
        let mdp = ExplicitBeliefSupportMdp::full(&inst.pomdp, &inst.spec, DEFAULT_NODE_CAP).unwrap();
        let jani = jani_support_graph(&doc, &inst.pomdp, &mdp);
        assert_eq!(jani, explicit_support_graph(&inst.pomdp, &mdp), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 30);
}

#[test]
fn cheese_and_obstacle_round_trip() {
    for inst in [cheese::generate(), obstacle::generate(6)] {
        let doc = export_jani(&inst.pomdp, &inst.spec);
        let mdp = ExplicitBeliefSupportMdp::from_initial(&inst.pomdp, &inst.spec, DEFAULT_NODE_CAP).unwrap();
        assert_eq!(jani_support_graph(&doc, &inst.pomdp, &mdp), explicit_support_graph(&inst.pomdp, &mdp));
    }
}

fn probabilities<'a>(v: &'a Value, out: &mut Vec<&'a Value>) {
    match v {
        Value::Object(map) => {
            if let Some(p) = map.get("probability") {
                out.push(&p["exp"]);
            }
            map.values().for_each(|x| probabilities(x, out));
        }
        Value::Array(items) => items.iter().for_each(|x| probabilities(x, out)),
        _ => {}
    }
}

#[test]
fn only_the_parameter_is_a_proper_probability() {
    let inst = cheese::generate();
    let doc: Value = serde_json::from_str(&export_jani(&inst.pomdp, &inst.spec).text).unwrap();
    let mut found = Vec::new();
    probabilities(&doc, &mut found);
    assert!(!found.is_empty());
    for p in found {
        assert_eq!(p["op"], "ite");
        assert_eq!(p["then"], "p");
        assert_eq!(p["else"], 0);
    }
}

#[test]
fn cheese_jani_is_byte_stable() {
    let inst = cheese::generate();
    let text = export_jani(&inst.pomdp, &inst.spec).text;
    assert_eq!(text, export_jani(&inst.pomdp, &inst.spec).text);
    check_golden("cheese.jani", &text);
}
