//! Incremental constraint solving over booleans, bounded integers and real
//! difference constraints.

mod builtin;
mod process;
pub mod smtlib;

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use builtin::BuiltinBackend;
pub use process::ProcessBackend;

/// Environment variable naming an external SMT-LIB2 solver command line.
pub const SOLVER_ENV: &str = "POMDP_SHIELD_SMT_CMD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int { lo: i64, hi: i64 },
    Real,
}

/// Quantifier-free formulas. Integer atoms compare a variable with a
/// constant; real atoms are strict differences `x > y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(bool),
    Var(VarId),
    Not(Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    Iff(Box<Term>, Box<Term>),
    IntLe(VarId, i64),
    IntEq(VarId, i64),
    RealGt(VarId, VarId),
}

impl Term {
    pub fn var(v: VarId) -> Term {
        Term::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(t: Term) -> Term {
        match t {
            Term::Const(b) => Term::Const(!b),
            Term::Not(inner) => *inner,
            other => Term::Not(Box::new(other)),
        }
    }

    pub fn and(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::Const(true) => {}
                Term::Const(false) => return Term::Const(false),
                Term::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Term::Const(true),
            1 => out.pop().unwrap(),
            _ => Term::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out = Vec::new();
        for t in items {
            match t {
                Term::Const(false) => {}
                Term::Const(true) => return Term::Const(true),
                Term::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Term::Const(false),
            1 => out.pop().unwrap(),
            _ => Term::Or(out),
        }
    }

    pub fn implies(lhs: Term, rhs: Term) -> Term {
        match (&lhs, &rhs) {
            (Term::Const(false), _) | (_, Term::Const(true)) => Term::Const(true),
            (Term::Const(true), _) => rhs,
            _ => Term::Implies(Box::new(lhs), Box::new(rhs)),
        }
    }

    pub fn iff(lhs: Term, rhs: Term) -> Term {
        Term::Iff(Box::new(lhs), Box::new(rhs))
    }

    pub fn int_le(v: VarId, c: i64) -> Term {
        Term::IntLe(v, c)
    }

    pub fn int_gt(v: VarId, c: i64) -> Term {
        Term::not(Term::IntLe(v, c))
    }

    pub fn int_eq(v: VarId, c: i64) -> Term {
        Term::IntEq(v, c)
    }

    pub fn int_ne(v: VarId, c: i64) -> Term {
        Term::not(Term::IntEq(v, c))
    }

    pub fn real_gt(x: VarId, y: VarId) -> Term {
        Term::RealGt(x, y)
    }

    /// Calls `f` on every variable occurring in the term.
    pub fn visit_vars(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) | Term::IntLe(v, _) | Term::IntEq(v, _) => f(*v),
            Term::RealGt(x, y) => {
                f(*x);
                f(*y);
            }
            Term::Not(t) => t.visit_vars(f),
            Term::And(ts) | Term::Or(ts) => ts.iter().for_each(|t| t.visit_vars(f)),
            Term::Implies(a, b) | Term::Iff(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
}

/// A satisfying assignment, indexed by variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    values: Vec<Option<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model has no {expected} value for variable {var}")]
pub struct MissingValue {
    pub var: u32,
    pub expected: &'static str,
}

impl Model {
    pub fn set(&mut self, v: VarId, value: Value) {
        if self.values.len() <= v.index() {
            self.values.resize(v.index() + 1, None);
        }
        self.values[v.index()] = Some(value);
    }

    pub fn get(&self, v: VarId) -> Option<Value> {
        self.values.get(v.index()).copied().flatten()
    }

    pub fn bool(&self, v: VarId) -> Result<bool, MissingValue> {
        match self.get(v) {
            Some(Value::Bool(b)) => Ok(b),
            _ => Err(MissingValue { var: v.0, expected: "boolean" }),
        }
    }

    pub fn int(&self, v: VarId) -> Result<i64, MissingValue> {
        match self.get(v) {
            Some(Value::Int(i)) => Ok(i),
            _ => Err(MissingValue { var: v.0, expected: "integer" }),
        }
    }

    pub fn real(&self, v: VarId) -> Result<f64, MissingValue> {
        match self.get(v) {
            Some(Value::Real(r)) => Ok(r),
            Some(Value::Int(i)) => Ok(i as f64),
            _ => Err(MissingValue { var: v.0, expected: "real" }),
        }
    }

    /// Reference evaluation of a term under this model.
    pub fn eval(&self, t: &Term) -> Result<bool, MissingValue> {
        Ok(match t {
            Term::Const(b) => *b,
            Term::Var(v) => self.bool(*v)?,
            Term::Not(t) => !self.eval(t)?,
            Term::And(ts) => {
                for t in ts {
                    if !self.eval(t)? {
                        return Ok(false);
                    }
                }
                true
            }
            Term::Or(ts) => {
                for t in ts {
                    if self.eval(t)? {
                        return Ok(true);
                    }
                }
                false
            }
            Term::Implies(a, b) => !self.eval(a)? || self.eval(b)?,
            Term::Iff(a, b) => self.eval(a)? == self.eval(b)?,
            Term::IntLe(v, c) => self.int(*v)? <= *c,
            Term::IntEq(v, c) => self.int(*v)? == *c,
            Term::RealGt(x, y) => self.real(*x)? > self.real(*y)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckResult {
    Sat(Model),
    Unsat,
    Unknown,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("variable `{0}` is already declared")]
    DuplicateName(String),
    #[error("variable {0} is not declared in an active scope")]
    Undeclared(u32),
    #[error("pop of {requested} exceeds stack depth {depth}")]
    PopBeyondDepth { requested: usize, depth: usize },
    #[error("solver returned a model violating assertion #{0}")]
    ModelMismatch(usize),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver process: {0}")]
    Io(#[from] std::io::Error),
    #[error("session is dead after an earlier failure")]
    Dead,
}

/// What a concrete solver has to provide.
pub trait Backend {
    fn declare(&mut self, var: VarId, name: &str, sort: Sort) -> Result<(), SolverError>;
    fn assert(&mut self, term: &Term) -> Result<(), SolverError>;
    fn push(&mut self) -> Result<(), SolverError>;
    fn pop(&mut self, n: usize) -> Result<(), SolverError>;
    fn check(&mut self, deadline: Option<Instant>) -> Result<CheckResult, SolverError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SessionStats {
    pub checks: u64,
    pub solve_time: Duration,
}

#[derive(Debug, Clone)]
struct VarInfo {
    name: String,
    sort: Sort,
    active: bool,
}

#[derive(Debug, Default)]
struct Frame {
    assertions: Vec<Term>,
    declared: Vec<VarId>,
}

/// A solver session with a scoped assertion stack.
pub struct Session {
    backend: Box<dyn Backend>,
    vars: Vec<VarInfo>,
    names: HashMap<String, VarId>,
    frames: Vec<Frame>,
    stats: SessionStats,
    timeout: Option<Duration>,
    deadline: Option<Instant>,
    validate_models: bool,
    dead: bool,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("vars", &self.vars.len())
            .field("depth", &self.depth())
            .field("stats", &self.stats)
            .finish()
    }
}

impl Session {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Session {
            backend,
            vars: Vec::new(),
            names: HashMap::new(),
            frames: vec![Frame::default()],
            stats: SessionStats::default(),
            timeout: None,
            deadline: None,
            validate_models: true,
            dead: false,
        }
    }

    pub fn builtin() -> Self {
        Session::new(Box::new(BuiltinBackend::new()))
    }

    /// The process backend when the solver environment variable is set,
    /// otherwise the built-in one.
    pub fn from_env() -> Result<Self, SolverError> {
        match std::env::var(SOLVER_ENV) {
            Ok(cmd) if !cmd.trim().is_empty() => Ok(Session::new(Box::new(ProcessBackend::spawn(&cmd)?))),
            _ => Ok(Session::builtin()),
        }
    }

    /// Per-check time limit; a check running out returns [`CheckResult::Unknown`].
    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
    }

    /// Absolute limit shared by all later checks.
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn set_validate_models(&mut self, on: bool) {
        self.validate_models = on;
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    pub fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }

    fn guard<T>(&mut self, r: Result<T, SolverError>) -> Result<T, SolverError> {
        if r.is_err() {
            self.dead = true;
        }
        r
    }

    pub fn declare(&mut self, name: impl Into<String>, sort: Sort) -> Result<VarId, SolverError> {
        if self.dead {
            return Err(SolverError::Dead);
        }
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(SolverError::DuplicateName(name));
        }
        let id = VarId(self.vars.len() as u32);
        let r = self.backend.declare(id, &name, sort);
        self.guard(r)?;
        self.names.insert(name.clone(), id);
        self.vars.push(VarInfo { name, sort, active: true });
        self.frames.last_mut().unwrap().declared.push(id);
        Ok(id)
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn sort(&self, v: VarId) -> Sort {
        self.vars[v.index()].sort
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn assert(&mut self, term: Term) -> Result<(), SolverError> {
        if self.dead {
            return Err(SolverError::Dead);
        }
        let mut bad = None;
        term.visit_vars(&mut |v| {
            if self.vars.get(v.index()).is_none_or(|i| !i.active) {
                bad.get_or_insert(v.0);
            }
        });
        if let Some(v) = bad {
            return Err(SolverError::Undeclared(v));
        }
        if matches!(term, Term::Const(true)) {
            return Ok(());
        }
        let r = self.backend.assert(&term);
        self.guard(r)?;
        self.frames.last_mut().unwrap().assertions.push(term);
        Ok(())
    }

    pub fn assert_all(&mut self, terms: impl IntoIterator<Item = Term>) -> Result<(), SolverError> {
        for t in terms {
            self.assert(t)?;
        }
        Ok(())
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        if self.dead {
            return Err(SolverError::Dead);
        }
        let r = self.backend.push();
        self.guard(r)?;
        self.frames.push(Frame::default());
        Ok(())
    }

    pub fn pop(&mut self, n: usize) -> Result<(), SolverError> {
        if self.dead {
            return Err(SolverError::Dead);
        }
        if n > self.depth() {
            return Err(SolverError::PopBeyondDepth { requested: n, depth: self.depth() });
        }
        let r = self.backend.pop(n);
        self.guard(r)?;
        for _ in 0..n {
            let frame = self.frames.pop().unwrap();
            for v in frame.declared {
                let info = &mut self.vars[v.index()];
                info.active = false;
                self.names.remove(&info.name);
            }
        }
        Ok(())
    }

    pub fn check(&mut self) -> Result<CheckResult, SolverError> {
        if self.dead {
            return Err(SolverError::Dead);
        }
        let start = Instant::now();
        let deadline = match (self.deadline, self.timeout) {
            (Some(d), Some(t)) => Some(d.min(start + t)),
            (d, t) => d.or(t.map(|t| start + t)),
        };
        let r = self.backend.check(deadline);
        self.stats.checks += 1;
        self.stats.solve_time += start.elapsed();
        let result = self.guard(r)?;
        if let CheckResult::Sat(model) = &result {
            if self.validate_models {
                let mismatch = self
                    .frames
                    .iter()
                    .flat_map(|f| &f.assertions)
                    .position(|t| model.eval(t) != Ok(true));
                if let Some(i) = mismatch {
                    self.dead = true;
                    return Err(SolverError::ModelMismatch(i));
                }
            }
        }
        Ok(result)
    }

    /// All active assertions, outermost scope first.
    pub fn assertions(&self) -> impl Iterator<Item = &Term> {
        self.frames.iter().flat_map(|f| &f.assertions)
    }

    /// The active declarations and assertions as an SMT-LIB2 script.
    pub fn to_smtlib(&self) -> String {
        let mut out = String::from("(set-logic QF_LIRA)\n");
        for (i, info) in self.vars.iter().enumerate() {
            if info.active {
                out.push_str(&smtlib::declaration(&info.name, info.sort));
                if let Some(b) = smtlib::bounds(VarId(i as u32), info.sort, &|v| self.name(v).to_string()) {
                    out.push_str(&format!("(assert {b})\n"));
                }
            }
        }
        for t in self.assertions() {
            out.push_str(&format!("(assert {})\n", smtlib::render(t, &|v| self.name(v).to_string())));
        }
        out.push_str("(check-sat)\n");
        out
    }
}
