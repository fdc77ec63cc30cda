//! SMT-LIB2 rendering and a small s-expression reader.

use std::fmt::Write;

use super::{Sort, Term, VarId};

pub fn declaration(name: &str, sort: Sort) -> String {
    let sort = match sort {
        Sort::Bool => "Bool",
        Sort::Int { .. } => "Int",
        Sort::Real => "Real",
    };
    format!("(declare-fun {name} () {sort})\n")
}

fn int(c: i64) -> String {
    if c < 0 {
        format!("(- {})", c.unsigned_abs())
    } else {
        c.to_string()
    }
}

/// The implicit range constraint of a bounded integer.
pub fn bounds(v: VarId, sort: Sort, name: &dyn Fn(VarId) -> String) -> Option<String> {
    match sort {
        Sort::Int { lo, hi } => {
            let n = name(v);
            Some(format!("(and (<= {} {n}) (<= {n} {}))", int(lo), int(hi)))
        }
        _ => None,
    }
}

pub fn render(t: &Term, name: &dyn Fn(VarId) -> String) -> String {
    let mut out = String::new();
    write_term(&mut out, t, name);
    out
}

fn write_list(out: &mut String, op: &str, ts: &[&Term], name: &dyn Fn(VarId) -> String) {
    out.push('(');
    out.push_str(op);
    for t in ts {
        out.push(' ');
        write_term(out, t, name);
    }
    out.push(')');
}

fn write_term(out: &mut String, t: &Term, name: &dyn Fn(VarId) -> String) {
    match t {
        Term::Const(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::Var(v) => out.push_str(&name(*v)),
        Term::Not(t) => write_list(out, "not", &[t], name),
        Term::And(ts) => write_list(out, "and", &ts.iter().collect::<Vec<_>>(), name),
        Term::Or(ts) => write_list(out, "or", &ts.iter().collect::<Vec<_>>(), name),
        Term::Implies(a, b) => write_list(out, "=>", &[a, b], name),
        Term::Iff(a, b) => write_list(out, "=", &[a, b], name),
        Term::IntLe(v, c) => {
            let _ = write!(out, "(<= {} {})", name(*v), int(*c));
        }
        Term::IntEq(v, c) => {
            let _ = write!(out, "(= {} {})", name(*v), int(*c));
        }
        Term::RealGt(x, y) => {
            let _ = write!(out, "(> {} {})", name(*x), name(*y));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }
}

/// Reads one s-expression from the start of `input`; returns it and the
/// number of bytes consumed, or `None` if the input is incomplete.
pub fn parse_sexp(input: &str) -> Option<Result<(Sexp, usize), String>> {
    let bytes = input.as_bytes();
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                let Some(done) = stack.pop() else {
                    return Some(Err(format!("unbalanced `)` at byte {i}")));
                };
                i += 1;
                let e = Sexp::List(done);
                match stack.last_mut() {
                    Some(parent) => parent.push(e),
                    None => return Some(Ok((e, i))),
                }
            }
            _ => {
                let start = i;
                if c == b'|' {
                    i += 1;
                    while i < bytes.len() && bytes[i] != b'|' {
                        i += 1;
                    }
                    if i == bytes.len() {
                        return None;
                    }
                    i += 1;
                } else if c == b'"' {
                    i += 1;
                    while i < bytes.len() && bytes[i] != b'"' {
                        i += 1;
                    }
                    if i == bytes.len() {
                        return None;
                    }
                    i += 1;
                } else {
                    while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')' | b';') {
                        i += 1;
                    }
                    if i == bytes.len() && stack.is_empty() {
                        // an atom at the very end might continue
                        return None;
                    }
                }
                let e = Sexp::Atom(input[start..i].to_string());
                match stack.last_mut() {
                    Some(parent) => parent.push(e),
                    None => return Some(Ok((e, i))),
                }
            }
        }
    }
    None
}

/// Numeric value of an SMT-LIB constant term such as `3`, `(- 2)`, `1.5`
/// or `(/ 1 3)`.
pub fn numeral(e: &Sexp) -> Option<f64> {
    match e {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(l) => match l.first()?.atom()? {
            "-" if l.len() == 2 => numeral(&l[1]).map(|x| -x),
            "-" if l.len() == 3 => Some(numeral(&l[1])? - numeral(&l[2])?),
            "/" if l.len() == 3 => Some(numeral(&l[1])? / numeral(&l[2])?),
            "+" => l[1..].iter().map(numeral).sum(),
            _ => None,
        },
    }
}
