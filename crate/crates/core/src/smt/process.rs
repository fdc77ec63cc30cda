//! SMT-LIB2 over a child process (`z3 -in`, `cvc5 --incremental`, ...).

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::mpsc::{self, Receiver};
use std::thread;
use std::time::Instant;

use super::smtlib::{self, Sexp};
use super::{Backend, CheckResult, Model, SolverError, Sort, Term, Value, VarId};

pub struct ProcessBackend {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    buffer: String,
    // (id, name, sort) per declaration, with the scope depth it belongs to
    declared: Vec<(VarId, String, Sort, usize)>,
    names: Vec<Option<String>>,
    depth: usize,
}

impl ProcessBackend {
    /// Starts `command` (split on whitespace) and configures it for
    /// incremental solving with models.
    pub fn spawn(command: &str) -> Result<Self, SolverError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| SolverError::Protocol("empty solver command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped");
        let stdout: ChildStdout = child.stdout.take().expect("piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            let mut line = String::new();
            loop {
                line.clear();
                match reader.read_line(&mut line) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        if tx.send(line.clone()).is_err() {
                            break;
                        }
                    }
                }
            }
            let _ = reader.read_to_end(&mut Vec::new());
        });
        let mut backend = ProcessBackend {
            child,
            stdin,
            lines: rx,
            buffer: String::new(),
            declared: Vec::new(),
            names: Vec::new(),
            depth: 0,
        };
        backend.send("(set-option :print-success false)")?;
        backend.send("(set-option :produce-models true)")?;
        backend.send("(set-logic QF_LIRA)")?;
        Ok(backend)
    }

    fn send(&mut self, line: &str) -> Result<(), SolverError> {
        writeln!(self.stdin, "{line}")?;
        self.stdin.flush()?;
        Ok(())
    }

    fn name(&self, v: VarId) -> String {
        self.names.get(v.index()).cloned().flatten().unwrap_or_else(|| format!("v{}", v.0))
    }

    fn read_sexp(&mut self, deadline: Option<Instant>) -> Result<Option<Sexp>, SolverError> {
        loop {
            if let Some(parsed) = smtlib::parse_sexp(&self.buffer) {
                let (e, used) = parsed.map_err(SolverError::Protocol)?;
                self.buffer.drain(..used);
                return Ok(Some(e));
            }
            // a bare atom at the end of a line is complete
            let trimmed = self.buffer.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('(') && self.buffer.ends_with('\n') {
                let atom = trimmed.to_string();
                self.buffer.clear();
                return Ok(Some(Sexp::Atom(atom)));
            }
            let line = match deadline {
                Some(d) => match self.lines.recv_timeout(d.saturating_duration_since(Instant::now())) {
                    Ok(l) => l,
                    Err(mpsc::RecvTimeoutError::Timeout) => return Ok(None),
                    Err(mpsc::RecvTimeoutError::Disconnected) => {
                        return Err(SolverError::Protocol("solver exited".into()))
                    }
                },
                None => self.lines.recv().map_err(|_| SolverError::Protocol("solver exited".into()))?,
            };
            self.buffer.push_str(&line);
        }
    }
}

impl Backend for ProcessBackend {
    fn declare(&mut self, var: VarId, name: &str, sort: Sort) -> Result<(), SolverError> {
        let quoted = format!("|{name}|");
        if self.names.len() <= var.index() {
            self.names.resize(var.index() + 1, None);
        }
        self.names[var.index()] = Some(quoted.clone());
        self.send(smtlib::declaration(&quoted, sort).trim_end())?;
        if let Some(b) = smtlib::bounds(var, sort, &|v| self.name(v)) {
            self.send(&format!("(assert {b})"))?;
        }
        self.declared.push((var, quoted, sort, self.depth));
        Ok(())
    }

    fn assert(&mut self, term: &Term) -> Result<(), SolverError> {
        let text = smtlib::render(term, &|v| self.name(v));
        self.send(&format!("(assert {text})"))
    }

    fn push(&mut self) -> Result<(), SolverError> {
        self.depth += 1;
        self.send("(push 1)")
    }

    fn pop(&mut self, n: usize) -> Result<(), SolverError> {
        self.depth -= n;
        let depth = self.depth;
        self.declared.retain(|d| d.3 <= depth);
        self.send(&format!("(pop {n})"))
    }

    fn check(&mut self, deadline: Option<Instant>) -> Result<CheckResult, SolverError> {
        if let Some(d) = deadline {
            let ms = d.saturating_duration_since(Instant::now()).as_millis().max(1);
            self.send(&format!("(set-option :timeout {ms})"))?;
        }
        self.send("(check-sat)")?;
        // allow the solver a grace period past its own timeout
        let wait = deadline.map(|d| d + std::time::Duration::from_secs(2));
        let Some(answer) = self.read_sexp(wait)? else {
            let _ = self.child.kill();
            return Err(SolverError::Protocol("solver did not answer before the deadline".into()));
        };
        match answer.atom() {
            Some("unsat") => return Ok(CheckResult::Unsat),
            Some("unknown") | Some("timeout") => return Ok(CheckResult::Unknown),
            Some("sat") => {}
            _ => return Err(SolverError::Protocol(format!("unexpected check-sat answer {answer:?}"))),
        }
        let mut model = Model::default();
        if self.declared.is_empty() {
            return Ok(CheckResult::Sat(model));
        }
        let names: Vec<String> = self.declared.iter().map(|d| d.1.clone()).collect();
        self.send(&format!("(get-value ({}))", names.join(" ")))?;
        let reply = self
            .read_sexp(None)?
            .ok_or_else(|| SolverError::Protocol("no get-value reply".into()))?;
        let pairs = reply
            .list()
            .ok_or_else(|| SolverError::Protocol(format!("bad get-value reply {reply:?}")))?;
        if pairs.len() != self.declared.len() {
            return Err(SolverError::Protocol("get-value reply has the wrong length".into()));
        }
        for (pair, (id, _, sort, _)) in pairs.iter().zip(&self.declared) {
            let value = pair.list().and_then(|p| p.get(1)).ok_or_else(|| SolverError::Protocol("bad pair".into()))?;
            let parsed = match sort {
                Sort::Bool => match value.atom() {
                    Some("true") => Some(Value::Bool(true)),
                    Some("false") => Some(Value::Bool(false)),
                    _ => None,
                },
                Sort::Int { .. } => smtlib::numeral(value).map(|x| Value::Int(x.round() as i64)),
                Sort::Real => smtlib::numeral(value).map(Value::Real),
            };
            let parsed = parsed.ok_or_else(|| SolverError::Protocol(format!("bad value {value:?}")))?;
            model.set(*id, parsed);
        }
        Ok(CheckResult::Sat(model))
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        let _ = self.send("(exit)");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
