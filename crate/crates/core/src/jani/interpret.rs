//! Explicit semantics for the JANI fragment produced by the exporter:
//! one automaton, one location, bool and bounded int variables, guarded
//! edges with probabilistic destinations.

use std::collections::HashMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum JaniError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("type error in {0}")]
    Type(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Val {
    Bool(bool),
    Int(i64),
    Real(f64),
}

impl Val {
    fn as_bool(self) -> Result<bool, JaniError> {
        match self {
            Val::Bool(b) => Ok(b),
            other => Err(JaniError::Type(format!("{other:?} used as bool"))),
        }
    }

    fn as_f64(self) -> Result<f64, JaniError> {
        match self {
            Val::Int(i) => Ok(i as f64),
            Val::Real(r) => Ok(r),
            Val::Bool(_) => Err(JaniError::Type("bool used as number".into())),
        }
    }
}

/// Values of all variables in declaration order.
pub type Valuation = Vec<Val>;

/// Per enabled edge, its action and weighted successors.
pub type Successors = Vec<(String, Vec<(f64, Valuation)>)>;

#[derive(Debug, Clone)]
struct Destination {
    probability: Option<Value>,
    assignments: Vec<(usize, Value)>,
}

#[derive(Debug, Clone)]
struct Edge {
    action: String,
    guard: Value,
    destinations: Vec<Destination>,
}

#[derive(Debug, Clone)]
pub struct Interpreter {
    names: Vec<String>,
    index: HashMap<String, usize>,
    initial: Valuation,
    constants: HashMap<String, Val>,
    edges: Vec<Edge>,
}

fn literal(v: &Value) -> Option<Val> {
    match v {
        Value::Bool(b) => Some(Val::Bool(*b)),
        Value::Number(n) => Some(n.as_i64().map(Val::Int).unwrap_or_else(|| Val::Real(n.as_f64().unwrap_or(f64::NAN)))),
        _ => None,
    }
}

impl Interpreter {
    /// Parses a document; `p` is used for the probability constant when the
    /// document leaves it open.
    pub fn from_text(text: &str, p: f64) -> Result<Self, JaniError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| JaniError::Json(e.to_string()))?;
        let mut names = Vec::new();
        let mut index = HashMap::new();
        let mut initial = Vec::new();
        for v in doc["variables"].as_array().ok_or_else(|| JaniError::Unsupported("no variables".into()))? {
            let name = v["name"].as_str().ok_or_else(|| JaniError::Unsupported("variable name".into()))?;
            let init = literal(&v["initial-value"]).ok_or_else(|| JaniError::Unsupported(format!("initial value of {name}")))?;
            index.insert(name.to_string(), names.len());
            names.push(name.to_string());
            initial.push(init);
        }
        let mut interp = Interpreter { names, index, initial, constants: HashMap::new(), edges: Vec::new() };
        for c in doc["constants"].as_array().into_iter().flatten() {
            let name = c["name"].as_str().ok_or_else(|| JaniError::Unsupported("constant name".into()))?;
            let value = match c.get("value") {
                Some(e) => interp.eval(e, &interp.initial)?,
                None => Val::Real(p),
            };
            interp.constants.insert(name.to_string(), value);
        }
        let automata = doc["automata"].as_array().ok_or_else(|| JaniError::Unsupported("no automata".into()))?;
        if automata.len() != 1 {
            return Err(JaniError::Unsupported("more than one automaton".into()));
        }
        for e in automata[0]["edges"].as_array().into_iter().flatten() {
            let mut destinations = Vec::new();
            for d in e["destinations"].as_array().into_iter().flatten() {
                let mut assignments = Vec::new();
                for a in d["assignments"].as_array().into_iter().flatten() {
                    let target = a["ref"].as_str().ok_or_else(|| JaniError::Unsupported("assignment target".into()))?;
                    let i = *interp.index.get(target).ok_or_else(|| JaniError::Unknown(target.into()))?;
                    assignments.push((i, a["value"].clone()));
                }
                destinations.push(Destination { probability: d.get("probability").map(|p| p["exp"].clone()), assignments });
            }
            interp.edges.push(Edge {
                action: e["action"].as_str().unwrap_or("").to_string(),
                guard: e.get("guard").map_or(Value::Bool(true), |g| g["exp"].clone()),
                destinations,
            });
        }
        Ok(interp)
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn variables(&self) -> &[String] {
        &self.names
    }

    pub fn initial(&self) -> &Valuation {
        &self.initial
    }

    pub fn eval(&self, e: &Value, at: &Valuation) -> Result<Val, JaniError> {
        if let Some(v) = literal(e) {
            return Ok(v);
        }
        if let Value::String(id) = e {
            if let Some(&i) = self.index.get(id) {
                return Ok(at[i]);
            }
            return self.constants.get(id).copied().ok_or_else(|| JaniError::Unknown(id.clone()));
        }
        let op = e["op"].as_str().ok_or_else(|| JaniError::Unsupported(e.to_string()))?;
        let arg = |k: &str| self.eval(&e[k], at);
        Ok(match op {
            "∧" => Val::Bool(arg("left")?.as_bool()? && arg("right")?.as_bool()?),
            "∨" => Val::Bool(arg("left")?.as_bool()? || arg("right")?.as_bool()?),
            "¬" => Val::Bool(!arg("exp")?.as_bool()?),
            "=" => Val::Bool(match (arg("left")?, arg("right")?) {
                (Val::Bool(a), Val::Bool(b)) => a == b,
                (a, b) => a.as_f64()? == b.as_f64()?,
            }),
            ">" => Val::Bool(arg("left")?.as_f64()? > arg("right")?.as_f64()?),
            "/" => Val::Real(arg("left")?.as_f64()? / arg("right")?.as_f64()?),
            "ite" => {
                if arg("if")?.as_bool()? {
                    arg("then")?
                } else {
                    arg("else")?
                }
            }
            other => return Err(JaniError::Unsupported(format!("operator {other}"))),
        })
    }

    /// Enabled edges as `(action, [(probability, successor)])`, keeping only
    /// destinations of positive probability.
    pub fn successors(&self, at: &Valuation) -> Result<Successors, JaniError> {
        let mut out = Vec::new();
        for e in &self.edges {
            if !self.eval(&e.guard, at)?.as_bool()? {
                continue;
            }
            let mut dests = Vec::new();
            for d in &e.destinations {
                let prob = match &d.probability {
                    Some(p) => self.eval(p, at)?.as_f64()?,
                    None => 1.0,
                };
                if prob <= 0.0 {
                    continue;
                }
                let mut next = at.clone();
                for (i, value) in &d.assignments {
                    next[*i] = self.eval(value, at)?;
                }
                dests.push((prob, next));
            }
            out.push((e.action.clone(), dests));
        }
        Ok(out)
    }

    /// Takes every non-`update` edge and then the `update` edge, so that only
    /// the settled states remain. Per action, the settled successors.
    pub fn contracted(&self, at: &Valuation, update: &str) -> Result<Vec<(String, Vec<Valuation>)>, JaniError> {
        let mut out = Vec::new();
        for (action, dests) in self.successors(at)? {
            if action == update {
                continue;
            }
            let mut settled = Vec::new();
            for (_, mid) in dests {
                let steps = self.successors(&mid)?;
                let mut updates = steps.into_iter().filter(|(a, _)| a == update);
                let (_, finals) = updates.next().ok_or_else(|| JaniError::Unsupported("no update edge enabled".into()))?;
                if updates.next().is_some() {
                    return Err(JaniError::Unsupported("several update edges enabled".into()));
                }
                settled.extend(finals.into_iter().map(|(_, v)| v));
            }
            out.push((action, settled));
        }
        Ok(out)
    }
}
