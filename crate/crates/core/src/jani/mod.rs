//! Symbolic belief-support MDP in the JANI model-exchange format.
//!
//! A support is a vector of booleans `belsup_<s>`. One step of the POMDP
//! is split in two: an action edge picks the next observation, stored in
//! `newobs`, and remembers the action in `lact`; then a single `update`
//! edge recomputes every `belsup_<s>` and clears both. In `newobs` and
//! `lact`, 0 means "none" and `k + 1` stands for index `k`.

pub mod interpret;

use serde_json::{json, Value};

use crate::pomdp::{Pomdp, Specification};

pub const AUTOMATON: &str = "belief_support";
pub const LOCATION: &str = "l";

#[derive(Debug, Clone, PartialEq)]
pub struct JaniMetadata {
    /// `belsup` variable of each state.
    pub belsup: Vec<String>,
    pub newobs: String,
    pub lact: String,
    pub update_action: String,
    pub probability_constant: String,
    pub action_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JaniDocument {
    pub text: String,
    pub metadata: JaniMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JaniOptions {
    /// Closes the model by fixing `p = 1/|Ω|`.
    pub pin_probability: bool,
}

fn balanced(op: &str, mut items: Vec<Value>, empty: bool) -> Value {
    match items.len() {
        0 => Value::Bool(empty),
        1 => items.pop().expect("one item"),
        n => {
            let right = items.split_off(n / 2);
            json!({"op": op, "left": balanced(op, items, empty), "right": balanced(op, right, empty)})
        }
    }
}

fn any(items: Vec<Value>) -> Value {
    balanced("∨", items, false)
}

fn all(items: Vec<Value>) -> Value {
    balanced("∧", items, true)
}

fn not(e: Value) -> Value {
    json!({"op": "¬", "exp": e})
}

fn eq(var: &str, k: usize) -> Value {
    json!({"op": "=", "left": var, "right": k})
}

fn bounded(upper: usize) -> Value {
    json!({"kind": "bounded", "base": "int", "lower-bound": 0, "upper-bound": upper})
}

fn fresh_name(base: &str, taken: &[String]) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

pub fn export_jani(pomdp: &Pomdp, spec: &Specification) -> JaniDocument {
    export_jani_with(pomdp, spec, JaniOptions::default())
}

pub fn export_jani_with(pomdp: &Pomdp, spec: &Specification, options: JaniOptions) -> JaniDocument {
    let n = pomdp.num_states();
    let belsup: Vec<String> = (0..n).map(|s| format!("belsup_{s}")).collect();
    let (newobs, lact, p) = ("newobs", "lact", "p");
    let update = fresh_name("update", pomdp.action_names());
    let var = |s: usize| Value::String(belsup[s].clone());

    let mut edges = Vec::new();
    for z in 0..pomdp.num_observations() {
        let here: Vec<usize> = pomdp.states_with_obs(z).iter().collect();
        let guard = all(vec![eq(newobs, 0), any(here.iter().map(|&s| var(s)).collect())]);
        for &a in pomdp.enabled_obs(z) {
            let mut destinations = Vec::new();
            for zi in 0..pomdp.num_observations() {
                let from: Vec<Value> = here
                    .iter()
                    .filter(|&&s| pomdp.post(s, a).iter().any(|&t| pomdp.obs(t) == zi))
                    .map(|&s| var(s))
                    .collect();
                if from.is_empty() {
                    continue;
                }
                destinations.push(json!({
                    "location": LOCATION,
                    "probability": {"exp": {"op": "ite", "if": any(from), "then": p, "else": 0}},
                    "assignments": [
                        {"ref": newobs, "value": zi + 1},
                        {"ref": lact, "value": a + 1},
                    ],
                }));
            }
            edges.push(json!({
                "location": LOCATION,
                "action": pomdp.action_name(a),
                "guard": {"exp": guard.clone()},
                "destinations": destinations,
            }));
        }
    }
    let action_edges = edges.len();

    let mut assignments = Vec::new();
    for (t, name) in belsup.iter().enumerate() {
        let mut sources = Vec::new();
        for s in 0..n {
            for &a in pomdp.enabled(s) {
                if pomdp.post(s, a).contains(&t) {
                    sources.push(all(vec![var(s), eq(lact, a + 1)]));
                }
            }
        }
        let value = all(vec![eq(newobs, pomdp.obs(t) + 1), any(sources)]);
        assignments.push(json!({"ref": name, "value": value}));
    }
    assignments.push(json!({"ref": newobs, "value": 0}));
    assignments.push(json!({"ref": lact, "value": 0}));
    edges.push(json!({
        "location": LOCATION,
        "action": update,
        "guard": {"exp": {"op": ">", "left": newobs, "right": 0}},
        "destinations": [{"location": LOCATION, "assignments": assignments}],
    }));

    let mut variables: Vec<Value> = (0..n)
        .map(|s| json!({"name": belsup[s], "type": "bool", "initial-value": pomdp.initial().contains(s)}))
        .collect();
    variables.push(json!({"name": newobs, "type": bounded(pomdp.num_observations()), "initial-value": 0}));
    variables.push(json!({"name": lact, "type": bounded(pomdp.num_actions()), "initial-value": 0}));

    let mut constant = json!({"name": p, "type": "real"});
    if options.pin_probability {
        constant["value"] = json!({"op": "/", "left": 1, "right": pomdp.num_observations()});
    }

    let settled = eq(newobs, 0);
    let reach = all(vec![settled.clone(), all((0..n).filter(|&s| !spec.reach.contains(s)).map(|s| not(var(s))).collect())]);
    let avoid_free = all(spec.avoid.iter().map(|s| not(var(s))).collect());
    let query = |name: &str, op: &str, path: Value| {
        json!({
            "name": name,
            "expression": {
                "op": "filter",
                "fun": "values",
                "values": {"op": op, "exp": path},
                "states": {"op": "initial"},
            },
        })
    };
    let properties = vec![
        query("reach", "Pmax", json!({"op": "F", "exp": reach.clone()})),
        query("avoid_free", "Pmax", json!({"op": "G", "exp": avoid_free.clone()})),
        query("reach_avoid", "Pmax", json!({"op": "U", "left": avoid_free, "right": reach})),
    ];

    let mut actions: Vec<Value> = pomdp.action_names().iter().map(|a| json!({"name": a})).collect();
    actions.push(json!({"name": update}));

    let doc = json!({
        "jani-version": 1,
        "name": "belief-support-mdp",
        "type": "mdp",
        "actions": actions,
        "constants": [constant],
        "variables": variables,
        "properties": properties,
        "automata": [{
            "name": AUTOMATON,
            "locations": [{"name": LOCATION}],
            "initial-locations": [LOCATION],
            "edges": edges,
        }],
        "system": {"elements": [{"automaton": AUTOMATON}]},
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("json value");
    text.push('\n');
    JaniDocument {
        text,
        metadata: JaniMetadata {
            belsup,
            newobs: newobs.into(),
            lact: lact.into(),
            update_action: update,
            probability_constant: p.into(),
            action_edges,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::cheese;
    use crate::pomdp::{PomdpBuilder, Transition};

    #[test]
    fn cheese_edge_count() {
        let inst = cheese::generate();
        let doc = export_jani(&inst.pomdp, &inst.spec);
        let expected: usize = (0..inst.pomdp.num_observations()).map(|z| inst.pomdp.enabled_obs(z).len()).sum();
        assert_eq!(doc.metadata.action_edges, expected);
        let v: Value = serde_json::from_str(&doc.text).unwrap();
        let edges = v["automata"][0]["edges"].as_array().unwrap();
        assert_eq!(edges.len(), expected + 1);
        assert_eq!(edges.iter().filter(|e| e["action"] == "update").count(), 1);
        assert!(v["constants"][0].get("value").is_none());
    }

    #[test]
    fn single_state_model() {
        let mut b = PomdpBuilder::new(1, vec!["go".into()], vec!["only".into()]);
        b.set_observation(0, 0).unwrap();
        b.add_transition(0, 0, Transition::dirac(0)).unwrap();
        b.set_initial([0]);
        let p = b.build();
        let spec = Specification::from_states(1, &[0], &[]);
        let doc = export_jani_with(&p, &spec, JaniOptions { pin_probability: true });
        let v: Value = serde_json::from_str(&doc.text).unwrap();
        assert_eq!(v["variables"][0]["initial-value"], true);
        let dummy = &v["automata"][0]["edges"][1];
        assert_eq!(dummy["destinations"][0]["location"], dummy["location"]);
        assert!(v["constants"][0].get("value").is_some());
    }
}
