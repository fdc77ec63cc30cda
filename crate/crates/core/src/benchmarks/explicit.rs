//! Line-oriented explicit POMDP format.
//!
//! ```text
//! # comment
//! states 3
//! actions go stay
//! observations start goal
//! obs 0 start
//! tr 0 go 1:1/2 2:1/2
//! init 0
//! reach 2
//! avoid 1
//! ```
//!
//! `obs` lines are required for every state; `tr` lines are optional per
//! `(state, action)` but may not repeat. Probabilities are `num/den` or integers.

use std::fmt::Write as _;

use thiserror::Error;

use crate::bits::StateSet;
use crate::pomdp::{make_absorbing, validate, Diagnostic, Pomdp, PomdpBuilder, Prob, Specification, Transition};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid model: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Semantic(Vec<Diagnostic>),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_prob(text: &str, line: usize) -> Result<Prob, ParseError> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num: u64 = num
        .parse()
        .map_err(|_| syntax(line, format!("bad probability `{text}`")))?;
    let den: u64 = den
        .parse()
        .map_err(|_| syntax(line, format!("bad probability `{text}`")))?;
    if num == 0 || den == 0 {
        return Err(syntax(line, format!("probability `{text}` must be positive")));
    }
    Ok(Prob::new(num, den))
}

struct Header {
    states: usize,
    actions: Vec<String>,
    observations: Vec<String>,
}

/// Parses, validates and normalizes a model in the explicit format.
pub fn parse_explicit(text: &str) -> Result<(Pomdp, Specification), ParseError> {
    let mut states: Option<usize> = None;
    let mut actions: Option<Vec<String>> = None;
    let mut observations: Option<Vec<String>> = None;
    let mut builder: Option<PomdpBuilder> = None;
    let mut obs_seen: Vec<bool> = Vec::new();
    let mut initial: Option<Vec<usize>> = None;
    let mut reach: Vec<usize> = Vec::new();
    let mut avoid: Vec<usize> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let keyword = words.next().expect("nonempty line");
        let rest: Vec<&str> = words.collect();

        match keyword {
            "states" | "actions" | "observations" => {
                if builder.is_some() {
                    return Err(syntax(line, format!("`{keyword}` after the model body started")));
                }
                match keyword {
                    "states" => {
                        if states.is_some() || rest.len() != 1 {
                            return Err(syntax(line, "expected a single `states N` line"));
                        }
                        states = Some(
                            rest[0]
                                .parse()
                                .map_err(|_| syntax(line, "state count must be a number"))?,
                        );
                    }
                    "actions" => {
                        if actions.is_some() {
                            return Err(syntax(line, "repeated `actions` line"));
                        }
                        actions = Some(rest.iter().map(|s| s.to_string()).collect());
                    }
                    _ => {
                        if observations.is_some() {
                            return Err(syntax(line, "repeated `observations` line"));
                        }
                        observations = Some(rest.iter().map(|s| s.to_string()).collect());
                    }
                }
                continue;
            }
            _ => {}
        }

        if builder.is_none() {
            let header = match (&states, &actions, &observations) {
                (Some(s), Some(a), Some(o)) => Header {
                    states: *s,
                    actions: a.clone(),
                    observations: o.clone(),
                },
                _ => {
                    return Err(syntax(
                        line,
                        "`states`, `actions` and `observations` must come first",
                    ))
                }
            };
            if header.states == 0 {
                return Err(syntax(line, "model needs at least one state"));
            }
            obs_seen = vec![false; header.states];
            builder = Some(PomdpBuilder::new(header.states, header.actions, header.observations));
        }
        let n = states.expect("header read");
        let state = |w: &str| -> Result<usize, ParseError> {
            let s: usize = w.parse().map_err(|_| syntax(line, format!("bad state `{w}`")))?;
            if s >= n {
                return Err(syntax(line, format!("state {s} out of range")));
            }
            Ok(s)
        };
        let b = builder.as_mut().expect("created above");

        match keyword {
            "obs" => {
                if rest.len() != 2 {
                    return Err(syntax(line, "expected `obs <state> <observation>`"));
                }
                let s = state(rest[0])?;
                let z = observations
                    .as_ref()
                    .expect("header read")
                    .iter()
                    .position(|o| o == rest[1])
                    .ok_or_else(|| syntax(line, format!("unknown observation `{}`", rest[1])))?;
                if obs_seen[s] {
                    return Err(syntax(line, format!("second `obs` line for state {s}")));
                }
                obs_seen[s] = true;
                b.set_observation(s, z).expect("checked ranges");
            }
            "tr" => {
                if rest.len() < 3 {
                    return Err(syntax(line, "expected `tr <state> <action> <succ>:<p> ...`"));
                }
                let s = state(rest[0])?;
                let a = actions
                    .as_ref()
                    .expect("header read")
                    .iter()
                    .position(|x| x == rest[1])
                    .ok_or_else(|| syntax(line, format!("unknown action `{}`", rest[1])))?;
                let mut pairs = Vec::new();
                for item in &rest[2..] {
                    let (succ, p) = item
                        .split_once(':')
                        .ok_or_else(|| syntax(line, format!("expected `succ:p`, got `{item}`")))?;
                    pairs.push((state(succ)?, parse_prob(p, line)?));
                }
                b.add_transition(s, a, Transition::new(pairs))
                    .map_err(|e| syntax(line, e.to_string()))?;
            }
            "init" | "reach" | "avoid" => {
                let list = rest.iter().map(|w| state(w)).collect::<Result<Vec<_>, _>>()?;
                let slot = match keyword {
                    "init" => {
                        if initial.is_some() {
                            return Err(syntax(line, "repeated `init` line"));
                        }
                        initial = Some(list);
                        continue;
                    }
                    "reach" => &mut reach,
                    _ => &mut avoid,
                };
                slot.extend(list);
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let mut builder = builder.ok_or_else(|| syntax(last, "no model body"))?;
    if let Some(missing) = obs_seen.iter().position(|seen| !seen) {
        return Err(syntax(last, format!("state {missing} has no `obs` line")));
    }
    builder.set_initial(initial.ok_or_else(|| syntax(last, "missing `init` line"))?);
    let pomdp = builder.build();
    let n = pomdp.num_states();
    let spec = Specification::new(
        StateSet::from_iter_with_width(n, reach),
        StateSet::from_iter_with_width(n, avoid),
    );
    let diags: Vec<Diagnostic> = validate(&pomdp, &spec)
        .into_iter()
        .filter(|d| !d.is_absorbing_violation())
        .collect();
    if !diags.is_empty() {
        return Err(ParseError::Semantic(diags));
    }
    let pomdp = make_absorbing(&pomdp, &spec);
    Ok((pomdp, spec))
}

fn join(set: &StateSet) -> String {
    set.iter().map(|s| format!(" {s}")).collect()
}

/// Writes a model in the explicit format. `parse_explicit` reads it back unchanged.
pub fn emit_explicit(pomdp: &Pomdp, spec: &Specification, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        for l in c.lines() {
            let _ = writeln!(out, "# {l}");
        }
    }
    let _ = writeln!(out, "states {}", pomdp.num_states());
    let _ = writeln!(out, "actions {}", pomdp.action_names().join(" "));
    let _ = writeln!(out, "observations {}", pomdp.observation_names().join(" "));
    for s in 0..pomdp.num_states() {
        let _ = writeln!(out, "obs {s} {}", pomdp.observation_name(pomdp.obs(s)));
    }
    for s in 0..pomdp.num_states() {
        for &a in pomdp.enabled(s) {
            let t = pomdp.transition(s, a).expect("enabled");
            let _ = write!(out, "tr {s} {}", pomdp.action_name(a));
            for (succ, p) in t.iter() {
                let _ = write!(out, " {succ}:{}/{}", p.numer(), p.denom());
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "init{}", join(pomdp.initial()));
    let _ = writeln!(out, "reach{}", join(&spec.reach));
    let _ = writeln!(out, "avoid{}", join(&spec.avoid));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::cheese;

    const SMALL: &str = "\
# a coin flip
states 3
actions go stay
observations start end
obs 0 start
obs 1 end
obs 2 end
tr 0 go 1:1/2 2:1/2
tr 0 stay 0:1
tr 1 go 0:1
tr 1 stay 1:1
tr 2 go 2:1
tr 2 stay 2:1
init 0
reach 2
avoid 1
";

    #[test]
    fn parses_and_normalizes() {
        let (p, spec) = parse_explicit(SMALL).unwrap();
        assert_eq!(p.num_states(), 3);
        assert_eq!(p.post(0, 0), &[1, 2]);
        // state 1 is in AVOID, so its `go` move becomes a self-loop
        assert_eq!(p.post(1, 0), &[1]);
        assert!(spec.avoid.contains(1));
    }

    #[test]
    fn duplicate_transition_is_an_error() {
        let text = SMALL.replace("tr 0 stay 0:1", "tr 0 go 0:1");
        match parse_explicit(&text) {
            Err(ParseError::Syntax { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_cite_the_invariant() {
        let text = SMALL.replace("reach 2", "reach 1 2");
        let err = parse_explicit(&text).unwrap_err();
        assert!(err.to_string().contains("overlapping spec"), "{err}");
        let text = SMALL.replace("tr 1 stay 1:1\n", "");
        let err = parse_explicit(&text).unwrap_err();
        assert!(err.to_string().contains("action mismatch"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_explicit("states 1\nactions a\nobservations o\nobs 0 o\ntr 0 a 0:x\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 5, .. }), "{err}");
        let err = parse_explicit("obs 0 o\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
    }

    #[test]
    fn round_trip_cheese() {
        let inst = cheese::generate();
        let text = emit_explicit(&inst.pomdp, &inst.spec, Some("cheese"));
        let (p, spec) = parse_explicit(&text).unwrap();
        assert_eq!(p, inst.pomdp);
        assert_eq!(spec, inst.spec);
        assert_eq!(emit_explicit(&p, &spec, Some("cheese")), text);
    }
}
