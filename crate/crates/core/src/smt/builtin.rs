//! In-process backend: a CDCL SAT core with Tseitin clausification, an order
//! encoding for bounded integers and a difference-logic theory for reals.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use batsat::{lbool, BasicCallbacks, Lit, Solver, SolverInterface, SolverOpts, Theory, TheoryArg, Var};

use super::{Backend, CheckResult, Model, SolverError, Sort, Term, Value, VarId};

#[derive(Debug, Clone, Copy)]
struct Atom {
    greater: usize,
    smaller: usize,
}

#[derive(Debug)]
struct IntVar {
    lo: i64,
    hi: i64,
    // literal for `x >= k`
    thresholds: BTreeMap<i64, Lit>,
}

enum Slot {
    Bool(Lit),
    Int(usize),
    Real(usize),
}

pub struct BuiltinBackend {
    solver: Solver<BasicCallbacks>,
    deadline: Arc<Mutex<Option<Instant>>>,
    truth: Lit,
    slots: Vec<Option<Slot>>,
    ints: Vec<IntVar>,
    reals: Vec<VarId>,
    atoms: HashMap<(usize, usize), Lit>,
    atom_of_var: HashMap<Var, Atom>,
    selectors: Vec<Lit>,
    clause: Vec<Lit>,
}

impl Default for BuiltinBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl BuiltinBackend {
    pub fn new() -> Self {
        let deadline: Arc<Mutex<Option<Instant>>> = Arc::new(Mutex::new(None));
        let mut cb = BasicCallbacks::new();
        let watched = Arc::clone(&deadline);
        cb.set_stop(move || watched.lock().ok().and_then(|d| *d).is_some_and(|d| Instant::now() >= d));
        let mut solver = Solver::new(SolverOpts::default(), cb);
        let truth = Lit::new(solver.new_var_default(), true);
        solver.add_clause_reuse(&mut vec![truth]);
        BuiltinBackend {
            solver,
            deadline,
            truth,
            slots: Vec::new(),
            ints: Vec::new(),
            reals: Vec::new(),
            atoms: HashMap::new(),
            atom_of_var: HashMap::new(),
            selectors: Vec::new(),
            clause: Vec::new(),
        }
    }

    fn fresh(&mut self) -> Lit {
        Lit::new(self.solver.new_var_default(), true)
    }

    fn add(&mut self, lits: &[Lit]) {
        self.clause.clear();
        self.clause.extend_from_slice(lits);
        self.solver.add_clause_reuse(&mut self.clause);
    }

    fn slot(&self, v: VarId) -> Result<&Slot, SolverError> {
        self.slots
            .get(v.index())
            .and_then(Option::as_ref)
            .ok_or(SolverError::Undeclared(v.0))
    }

    /// `x >= k` for an integer variable.
    fn at_least(&mut self, int: usize, k: i64) -> Lit {
        let var = &self.ints[int];
        if k <= var.lo {
            return self.truth;
        }
        if k > var.hi {
            return !self.truth;
        }
        if let Some(&l) = var.thresholds.get(&k) {
            return l;
        }
        let below = var.thresholds.range(..k).next_back().map(|(_, &l)| l);
        let above = var.thresholds.range(k + 1..).next().map(|(_, &l)| l);
        let l = self.fresh();
        self.ints[int].thresholds.insert(k, l);
        if let Some(b) = below {
            self.add(&[!l, b]);
        }
        if let Some(a) = above {
            self.add(&[!a, l]);
        }
        l
    }

    fn atom(&mut self, x: usize, y: usize) -> Lit {
        if x == y {
            return !self.truth;
        }
        if let Some(&l) = self.atoms.get(&(x, y)) {
            return l;
        }
        let l = self.fresh();
        self.atoms.insert((x, y), l);
        self.atom_of_var.insert(l.var(), Atom { greater: x, smaller: y });
        l
    }

    fn lit(&mut self, t: &Term) -> Result<Lit, SolverError> {
        Ok(match t {
            Term::Const(true) => self.truth,
            Term::Const(false) => !self.truth,
            Term::Var(v) => match self.slot(*v)? {
                Slot::Bool(l) => *l,
                _ => return Err(SolverError::Protocol(format!("variable {} is not boolean", v.0))),
            },
            Term::Not(t) => !self.lit(t)?,
            Term::And(ts) => {
                let parts = ts.iter().map(|t| self.lit(t)).collect::<Result<Vec<_>, _>>()?;
                let g = self.fresh();
                let mut back = vec![g];
                for &p in &parts {
                    self.add(&[!g, p]);
                    back.push(!p);
                }
                self.add(&back);
                g
            }
            Term::Or(ts) => {
                let parts = ts.iter().map(|t| self.lit(t)).collect::<Result<Vec<_>, _>>()?;
                self.or_gate(&parts)
            }
            Term::Implies(a, b) => {
                let parts = [!self.lit(a)?, self.lit(b)?];
                self.or_gate(&parts)
            }
            Term::Iff(a, b) => {
                let (a, b) = (self.lit(a)?, self.lit(b)?);
                let g = self.fresh();
                self.add(&[!g, !a, b]);
                self.add(&[!g, a, !b]);
                self.add(&[g, a, b]);
                self.add(&[g, !a, !b]);
                g
            }
            Term::IntLe(v, c) => {
                let i = self.int_slot(*v)?;
                !self.at_least(i, c.saturating_add(1))
            }
            Term::IntEq(v, c) => {
                let i = self.int_slot(*v)?;
                let ge = self.at_least(i, *c);
                let gt = self.at_least(i, c.saturating_add(1));
                let g = self.fresh();
                self.add(&[!g, ge]);
                self.add(&[!g, !gt]);
                self.add(&[g, !ge, gt]);
                g
            }
            Term::RealGt(x, y) => {
                let (x, y) = (self.real_slot(*x)?, self.real_slot(*y)?);
                self.atom(x, y)
            }
        })
    }

    fn or_gate(&mut self, parts: &[Lit]) -> Lit {
        let g = self.fresh();
        let mut fwd = vec![!g];
        for &p in parts {
            self.add(&[g, !p]);
            fwd.push(p);
        }
        self.add(&fwd);
        g
    }

    fn int_slot(&self, v: VarId) -> Result<usize, SolverError> {
        match self.slot(v)? {
            Slot::Int(i) => Ok(*i),
            _ => Err(SolverError::Protocol(format!("variable {} is not an integer", v.0))),
        }
    }

    fn real_slot(&self, v: VarId) -> Result<usize, SolverError> {
        match self.slot(v)? {
            Slot::Real(i) => Ok(*i),
            _ => Err(SolverError::Protocol(format!("variable {} is not real", v.0))),
        }
    }

    fn guarded(&mut self, mut lits: Vec<Lit>) {
        if let Some(&s) = self.selectors.last() {
            lits.push(!s);
        }
        self.solver.add_clause_reuse(&mut lits);
    }

    fn model_value(&self, l: Lit) -> bool {
        self.solver.value_lit(l) == lbool::TRUE
    }

    fn real_values(&self) -> Vec<i64> {
        let mut edges = Vec::new();
        for (&(x, y), &l) in &self.atoms {
            match self.solver.value_lit(l) {
                v if v == lbool::TRUE => edges.push((x, y, 1)),
                v if v == lbool::FALSE => edges.push((y, x, 0)),
                _ => {}
            }
        }
        let mut values = vec![0i64; self.reals.len()];
        loop {
            let mut changed = false;
            for &(a, b, w) in &edges {
                if values[a] < values[b] + w {
                    values[a] = values[b] + w;
                    changed = true;
                }
            }
            if !changed {
                return values;
            }
        }
    }
}

impl Backend for BuiltinBackend {
    fn declare(&mut self, var: VarId, _name: &str, sort: Sort) -> Result<(), SolverError> {
        let slot = match sort {
            Sort::Bool => Slot::Bool(self.fresh()),
            Sort::Int { lo, hi } => {
                if lo > hi {
                    return Err(SolverError::Protocol(format!("empty integer range [{lo}, {hi}]")));
                }
                self.ints.push(IntVar { lo, hi, thresholds: BTreeMap::new() });
                Slot::Int(self.ints.len() - 1)
            }
            Sort::Real => {
                self.reals.push(var);
                Slot::Real(self.reals.len() - 1)
            }
        };
        if self.slots.len() <= var.index() {
            self.slots.resize_with(var.index() + 1, || None);
        }
        self.slots[var.index()] = Some(slot);
        Ok(())
    }

    fn assert(&mut self, term: &Term) -> Result<(), SolverError> {
        match term {
            Term::And(ts) => {
                for t in ts {
                    self.assert(t)?;
                }
            }
            Term::Or(ts) => {
                let lits = ts.iter().map(|t| self.lit(t)).collect::<Result<Vec<_>, _>>()?;
                self.guarded(lits);
            }
            Term::Implies(a, b) => {
                let lits = vec![!self.lit(a)?, self.lit(b)?];
                self.guarded(lits);
            }
            other => {
                let l = self.lit(other)?;
                self.guarded(vec![l]);
            }
        }
        Ok(())
    }

    fn push(&mut self) -> Result<(), SolverError> {
        let s = self.fresh();
        self.selectors.push(s);
        Ok(())
    }

    fn pop(&mut self, n: usize) -> Result<(), SolverError> {
        for _ in 0..n {
            let s = self.selectors.pop().expect("session checks depth");
            self.add(&[!s]);
        }
        Ok(())
    }

    fn check(&mut self, deadline: Option<Instant>) -> Result<CheckResult, SolverError> {
        *self.deadline.lock().unwrap() = deadline;
        let mut theory = DifferenceTheory::new(&self.atom_of_var, self.reals.len());
        let assumptions = self.selectors.clone();
        let r = self.solver.solve_limited_th(&mut theory, &assumptions);
        *self.deadline.lock().unwrap() = None;
        if r == lbool::FALSE {
            return Ok(CheckResult::Unsat);
        }
        if r != lbool::TRUE {
            return Ok(CheckResult::Unknown);
        }
        let mut model = Model::default();
        let reals = self.real_values();
        for (i, slot) in self.slots.iter().enumerate() {
            let id = VarId(i as u32);
            match slot {
                None => {}
                Some(Slot::Bool(l)) => model.set(id, Value::Bool(self.model_value(*l))),
                Some(Slot::Int(k)) => {
                    let var = &self.ints[*k];
                    let value = var
                        .thresholds
                        .iter()
                        .rev()
                        .find(|(_, &l)| self.model_value(l))
                        .map_or(var.lo, |(&k, _)| k);
                    model.set(id, Value::Int(value));
                }
                Some(Slot::Real(k)) => model.set(id, Value::Real(reals[*k] as f64)),
            }
        }
        Ok(CheckResult::Sat(model))
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    strict: bool,
    reason: Lit,
}

/// Edges `from >= to` (strictly if `strict`); a cycle through a strict edge is a conflict.
struct DifferenceTheory<'a> {
    atoms: &'a HashMap<Var, Atom>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
    processed: usize,
    levels: Vec<(usize, usize)>,
}

impl<'a> DifferenceTheory<'a> {
    fn new(atoms: &'a HashMap<Var, Atom>, nodes: usize) -> Self {
        DifferenceTheory {
            atoms,
            edges: Vec::new(),
            out: vec![Vec::new(); nodes],
            processed: 0,
            levels: Vec::new(),
        }
    }

    fn truncate(&mut self, len: usize) {
        while self.edges.len() > len {
            let e = self.edges.pop().unwrap();
            let popped = self.out[e.from].pop();
            debug_assert_eq!(popped, Some(self.edges.len()));
        }
    }

    /// A path `start ~> goal` that uses a strict edge unless `have_strict`,
    /// as a list of edge indices.
    fn find_path(&self, start: usize, goal: usize, have_strict: bool) -> Option<Vec<usize>> {
        let n = self.out.len();
        let key = |node: usize, strict: bool| node * 2 + strict as usize;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; 2 * n];
        let mut seen = vec![false; 2 * n];
        let mut queue = VecDeque::new();
        seen[key(start, have_strict)] = true;
        queue.push_back((start, have_strict));
        while let Some((node, strict)) = queue.pop_front() {
            if node == goal && strict {
                let mut path = Vec::new();
                let mut cur = key(node, strict);
                while let Some((prev, edge)) = parent[cur] {
                    path.push(edge);
                    cur = prev;
                }
                path.reverse();
                return Some(path);
            }
            for &ei in &self.out[node] {
                let e = self.edges[ei];
                let next = (e.to, strict || e.strict);
                let k = key(next.0, next.1);
                if !seen[k] {
                    seen[k] = true;
                    parent[k] = Some((key(node, strict), ei));
                    queue.push_back(next);
                }
            }
        }
        None
    }

    fn scan(&mut self, acts: &mut TheoryArg) {
        let model = acts.model();
        let mut conflict = None;
        while self.processed < model.len() {
            let l = model[self.processed];
            self.processed += 1;
            let Some(atom) = self.atoms.get(&l.var()) else { continue };
            let edge = if l.sign() {
                Edge { from: atom.greater, to: atom.smaller, strict: true, reason: l }
            } else {
                Edge { from: atom.smaller, to: atom.greater, strict: false, reason: l }
            };
            if let Some(path) = self.find_path(edge.to, edge.from, edge.strict) {
                let mut clause: Vec<Lit> = path.iter().map(|&i| !self.edges[i].reason).collect();
                clause.push(!edge.reason);
                conflict = Some(clause);
                break;
            }
            self.out[edge.from].push(self.edges.len());
            self.edges.push(edge);
        }
        if let Some(clause) = conflict {
            acts.raise_conflict(&clause, false);
        }
    }
}

impl Theory for DifferenceTheory<'_> {
    fn final_check(&mut self, acts: &mut TheoryArg) {
        self.scan(acts);
    }

    fn partial_check(&mut self, acts: &mut TheoryArg) {
        self.scan(acts);
    }

    fn create_level(&mut self) {
        self.levels.push((self.processed, self.edges.len()));
    }

    fn pop_levels(&mut self, n: usize) {
        let mut target = None;
        for _ in 0..n {
            target = self.levels.pop();
        }
        if let Some((processed, edges)) = target {
            self.truncate(edges);
            self.processed = processed;
        }
    }

    fn n_levels(&self) -> usize {
        self.levels.len()
    }

    fn explain_propagation(&mut self, _p: Lit) -> &[Lit] {
        unreachable!("the difference theory never propagates")
    }
}
