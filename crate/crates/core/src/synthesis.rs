//! Synthesis loops that grow a winning region with a constraint solver.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;
use tracing::debug;

use crate::analysis::graph_preprocessing;
use crate::bits::StateSet;
use crate::encoding::{
    decode, disable_shortcuts, encode_fixed, encode_oneshot, encode_progress, encode_region, encode_region_entry,
    pin_initial, unfold_memory, Decoded, MemoryProduct, PolicyCandidate, ShortcutPomdp, VariableBook,
};
use crate::pomdp::{BeliefSupport, ModelError, Pomdp, Specification};
use crate::region::WinningRegionStore;
use crate::smt::{CheckResult, MissingValue, Session, SolverError, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Explicit shortcut actions, fresh encoding per iteration.
    NaiveExplicit,
    /// Symbolic hand-overs, fresh encoding per iteration.
    NaiveIncremental,
    /// Symbolic hand-overs in one incremental session, with preprocessing.
    Incremental,
    /// A single bounded check on a memory product.
    Oneshot,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::NaiveExplicit, Mode::NaiveIncremental, Mode::Incremental, Mode::Oneshot];

    pub fn name(self) -> &'static str {
        match self {
            Mode::NaiveExplicit => "naive-explicit",
            Mode::NaiveIncremental => "naive-incremental",
            Mode::Incremental => "incremental",
            Mode::Oneshot => "oneshot",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    /// Grow the region until no progress is possible.
    Fixpoint,
    /// Stop once the initial support is winning.
    Initial,
}

impl FromStr for Goal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixpoint" => Ok(Goal::Fixpoint),
            "initial" => Ok(Goal::Initial),
            _ => Err(format!("unknown goal `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverConfig {
    pub mode: Mode,
    pub goal: Goal,
    /// Memory cells for the one-shot product.
    pub memory: usize,
    /// Rank bound for the one-shot encoding; the product size if unset.
    pub rank_bound: Option<usize>,
    /// Rebuild the incremental session after this many outer iterations.
    pub refresh_period: usize,
    pub check_timeout: Option<Duration>,
    pub budget: Option<Duration>,
    pub max_iterations: Option<usize>,
    pub validate_models: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            mode: Mode::Incremental,
            goal: Goal::Fixpoint,
            memory: 1,
            rank_bound: None,
            refresh_period: 50,
            check_timeout: None,
            budget: None,
            max_iterations: None,
            validate_models: true,
        }
    }
}

impl DriverConfig {
    pub fn new(mode: Mode, goal: Goal) -> Self {
        DriverConfig { mode, goal, ..Self::default() }
    }
}

/// One line of the progress log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub solver_calls: u64,
    pub live_entries: usize,
    pub size_estimate: f64,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stats {
    pub iterations: usize,
    pub solver_calls: u64,
    #[serde(serialize_with = "millis")]
    pub elapsed: Duration,
    #[serde(serialize_with = "millis")]
    pub solve_time: Duration,
}

fn millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u128(d.as_millis())
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub store: WinningRegionStore,
    pub stats: Stats,
    /// The budget, a timeout or the iteration limit ended the run early.
    pub partial: bool,
    /// Whether the initial support is winning in `store`.
    pub initial_winning: bool,
    /// The last policy found (one-shot: the winning policy, if any).
    pub policy: Option<PolicyCandidate>,
    pub log: Vec<IterationRecord>,
}

impl Outcome {
    /// The progress log as JSON lines.
    pub fn log_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r).expect("plain record"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("malformed solver model: {0}")]
    Model(#[from] MissingValue),
    #[error(transparent)]
    Memory(#[from] ModelError),
    #[error("the initial states do not form an observation-uniform support")]
    BadInitial,
}

type Observer<'a> = &'a mut dyn FnMut(&WinningRegionStore, &IterationRecord);

struct Run<'a> {
    cfg: &'a DriverConfig,
    start: Instant,
    deadline: Option<Instant>,
    stats: Stats,
    log: Vec<IterationRecord>,
    observer: Observer<'a>,
    partial: bool,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a DriverConfig, observer: Observer<'a>) -> Self {
        let start = Instant::now();
        Run {
            cfg,
            start,
            deadline: cfg.budget.map(|b| start + b),
            stats: Stats::default(),
            log: Vec::new(),
            observer,
            partial: false,
        }
    }

    fn session(&self) -> Result<Session, SolverError> {
        let mut s = Session::from_env()?;
        s.set_deadline(self.deadline);
        s.set_timeout(self.cfg.check_timeout);
        s.set_validate_models(self.cfg.validate_models);
        Ok(s)
    }

    fn absorb(&mut self, session: &Session) {
        let st = session.stats();
        self.stats.solver_calls += st.checks;
        self.stats.solve_time += st.solve_time;
    }

    /// True when the run has to stop before starting another iteration.
    fn exhausted(&mut self) -> bool {
        let out_of_time = self.deadline.is_some_and(|d| Instant::now() >= d);
        let out_of_iterations = self.cfg.max_iterations.is_some_and(|m| self.stats.iterations >= m);
        if out_of_time || out_of_iterations {
            self.partial = true;
        }
        self.partial
    }

    fn record(&mut self, store: &WinningRegionStore, pending_calls: u64) {
        self.stats.iterations += 1;
        let size = store.region_size();
        let r = IterationRecord {
            iteration: self.stats.iterations,
            solver_calls: self.stats.solver_calls + pending_calls,
            live_entries: size.live_entries,
            size_estimate: size.estimate,
            elapsed_ms: self.start.elapsed().as_millis(),
        };
        debug!(iteration = r.iteration, live = r.live_entries, calls = r.solver_calls, "iteration");
        (self.observer)(store, &r);
        self.log.push(r);
    }

    fn finish(mut self, store: WinningRegionStore, initial_winning: bool, policy: Option<PolicyCandidate>) -> Outcome {
        self.stats.elapsed = self.start.elapsed();
        Outcome {
            store,
            stats: self.stats,
            partial: self.partial,
            initial_winning,
            policy,
            log: self.log,
        }
    }
}

fn initial_support(pomdp: &Pomdp) -> Result<BeliefSupport, DriverError> {
    BeliefSupport::new(pomdp, pomdp.initial().clone()).ok_or(DriverError::BadInitial)
}

fn insert_all(store: &mut WinningRegionStore, supports: &[BeliefSupport]) -> bool {
    let mut changed = false;
    for b in supports {
        changed |= store.insert(b).changed();
    }
    changed
}

/// Runs the configured mode.
pub fn run(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    run_observed(pomdp, spec, cfg, &mut |_, _| {})
}

/// [`run`] with a callback after every outer iteration.
pub fn run_observed(
    pomdp: &Pomdp,
    spec: &Specification,
    cfg: &DriverConfig,
    observer: Observer<'_>,
) -> Result<Outcome, DriverError> {
    match cfg.mode {
        Mode::NaiveExplicit => naive_explicit(pomdp, spec, cfg, observer),
        Mode::NaiveIncremental => naive_incremental(pomdp, spec, cfg, observer),
        Mode::Incremental => incremental(pomdp, spec, cfg, observer),
        Mode::Oneshot => oneshot(pomdp, spec, cfg, observer),
    }
}

pub fn run_naive_explicit(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    naive_explicit(pomdp, spec, cfg, &mut |_, _| {})
}

pub fn run_naive_incremental(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    naive_incremental(pomdp, spec, cfg, &mut |_, _| {})
}

pub fn run_incremental(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    incremental(pomdp, spec, cfg, &mut |_, _| {})
}

/// The incremental loop stopping as soon as the initial support is winning.
pub fn run_initial(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    let cfg = DriverConfig { goal: Goal::Initial, ..cfg.clone() };
    incremental(pomdp, spec, &cfg, &mut |_, _| {})
}

pub fn run_oneshot(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig) -> Result<Outcome, DriverError> {
    oneshot(pomdp, spec, cfg, &mut |_, _| {})
}

fn naive_explicit(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig, observer: Observer<'_>) -> Result<Outcome, DriverError> {
    let init = initial_support(pomdp)?;
    let mut run = Run::new(cfg, observer);
    let mut model = ShortcutPomdp::new(pomdp, spec);
    let mut win = WinningRegionStore::from_reach(&model.pomdp, &model.spec);
    let project = |w: &WinningRegionStore, m: &ShortcutPomdp| w.restricted(m.original_observations, m.original_states);
    let mut policy = None;
    loop {
        let current = project(&win, &model);
        if cfg.goal == Goal::Initial && current.is_winning(&init) {
            break;
        }
        if run.exhausted() {
            break;
        }
        let p = &model.pomdp;
        let mut session = run.session()?;
        let book = VariableBook::incremental(&mut session, p)?;
        session.assert_all(encode_fixed(p, &model.spec, &StateSet::empty(p.num_states()), &book))?;
        session.assert_all(disable_shortcuts(&book))?;
        session.assert_all(encode_progress(p, &win, &book))?;
        let result = session.check()?;
        run.absorb(&session);
        let CheckResult::Sat(m) = result else {
            run.partial |= result == CheckResult::Unknown;
            break;
        };
        let d = decode(&m, &book, p)?;
        insert_all(&mut win, &d.supports);
        model = model.with_shortcut(&d.policy.reached);
        policy = Some(d.policy);
        run.record(&project(&win, &model), 0);
    }
    let store = project(&win, &model);
    let winning = store.is_winning(&init);
    Ok(run.finish(store, winning, policy))
}

fn naive_incremental(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig, observer: Observer<'_>) -> Result<Outcome, DriverError> {
    let init = initial_support(pomdp)?;
    let mut run = Run::new(cfg, observer);
    let mut win = WinningRegionStore::from_reach(pomdp, spec);
    let none = StateSet::empty(pomdp.num_states());
    let mut policy = None;
    loop {
        if cfg.goal == Goal::Initial && win.is_winning(&init) {
            break;
        }
        if run.exhausted() {
            break;
        }
        let mut enc = Encoder::new(&run, pomdp, spec, &none, &win)?;
        let result = enc.session.check()?;
        run.absorb(&enc.session);
        let CheckResult::Sat(m) = result else {
            run.partial |= result == CheckResult::Unknown;
            break;
        };
        let d = decode(&m, &enc.book, pomdp)?;
        insert_all(&mut win, &d.supports);
        policy = Some(d.policy);
        run.record(&win, 0);
    }
    let winning = win.is_winning(&init);
    Ok(run.finish(win, winning, policy))
}

/// One solver session holding the fixed layer, the accumulated region
/// layer and a pushed progress layer on top.
struct Encoder<'p> {
    pomdp: &'p Pomdp,
    session: Session,
    book: VariableBook,
    synced: Vec<usize>,
}

impl<'p> Encoder<'p> {
    fn new(
        run: &Run<'_>,
        pomdp: &'p Pomdp,
        spec: &Specification,
        forbidden: &StateSet,
        win: &WinningRegionStore,
    ) -> Result<Self, SolverError> {
        let mut session = run.session()?;
        let book = VariableBook::incremental(&mut session, pomdp)?;
        session.assert_all(encode_fixed(pomdp, spec, forbidden, &book))?;
        session.assert_all(encode_region(pomdp, win, &book))?;
        let synced = (0..win.num_observations()).map(|z| win.index_bound(z)).collect();
        session.push()?;
        session.assert_all(encode_progress(pomdp, win, &book))?;
        Ok(Encoder { pomdp, session, book, synced })
    }

    /// Adds the region constraints of new entries and renews the progress layer.
    fn sync(&mut self, win: &WinningRegionStore) -> Result<(), SolverError> {
        self.session.pop(1)?;
        for z in 0..win.num_observations() {
            for e in &win.entries(z)[self.synced[z]..] {
                self.session.assert_all(encode_region_entry(self.pomdp, &self.book, z, e.index, &e.support))?;
            }
            self.synced[z] = win.index_bound(z);
        }
        self.session.push()?;
        self.session.assert_all(encode_progress(self.pomdp, win, &self.book))
    }

    fn check_with(&mut self, extra: Vec<Term>) -> Result<CheckResult, SolverError> {
        if extra.is_empty() {
            return self.session.check();
        }
        self.session.push()?;
        self.session.assert_all(extra)?;
        let r = self.session.check();
        self.session.pop(1)?;
        r
    }

    /// Action literals of the observations where `d` made progress.
    fn pins(&self, d: &Decoded) -> Vec<Term> {
        let mut out = Vec::new();
        for (z, progressed) in d.policy.progress.iter().enumerate() {
            if *progressed {
                for &a in &d.policy.actions[z] {
                    out.push(Term::var(self.book.act_var(z, a).expect("decoded from the book")));
                }
            }
        }
        out
    }
}

fn incremental(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig, observer: Observer<'_>) -> Result<Outcome, DriverError> {
    let init = initial_support(pomdp)?;
    let mut run = Run::new(cfg, observer);
    let mut win = WinningRegionStore::from_reach(pomdp, spec);
    let forbidden = graph_preprocessing(pomdp, spec, &mut win).unsafe_states;
    let mut policy = None;
    if cfg.goal == Goal::Initial && win.is_winning(&init) {
        return Ok(run.finish(win, true, None));
    }
    let mut enc = Encoder::new(&run, pomdp, spec, &forbidden, &win)?;
    let mut since_refresh = 0;
    loop {
        if run.exhausted() {
            break;
        }
        if cfg.goal == Goal::Initial {
            match enc.check_with(pin_initial(&enc.book, &init.members))? {
                CheckResult::Sat(m) => {
                    let d = decode(&m, &enc.book, pomdp)?;
                    insert_all(&mut win, &d.supports);
                    policy = Some(d.policy);
                    run.record(&win, enc.session.stats().checks);
                    break;
                }
                CheckResult::Unknown => {
                    run.partial = true;
                    break;
                }
                CheckResult::Unsat => {}
            }
        }
        let result = enc.check_with(Vec::new())?;
        let CheckResult::Sat(m) = result else {
            run.partial |= result == CheckResult::Unknown;
            break;
        };
        let mut d = decode(&m, &enc.book, pomdp)?;
        insert_all(&mut win, &d.supports);
        // keep the actions that made progress and look for more of the same policy
        loop {
            let pins = enc.pins(&d);
            enc.sync(&win)?;
            match enc.check_with(pins)? {
                CheckResult::Sat(m) => {
                    let next = decode(&m, &enc.book, pomdp)?;
                    insert_all(&mut win, &next.supports);
                    d = next;
                }
                CheckResult::Unsat => break,
                CheckResult::Unknown => {
                    run.partial = true;
                    break;
                }
            }
        }
        policy = Some(d.policy);
        graph_preprocessing(pomdp, spec, &mut win);
        since_refresh += 1;
        if since_refresh >= cfg.refresh_period.max(1) || win.tombstone_count() > 2 * win.live_count() {
            run.absorb(&enc.session);
            win = win.compacted();
            enc = Encoder::new(&run, pomdp, spec, &forbidden, &win)?;
            since_refresh = 0;
        } else {
            enc.sync(&win)?;
        }
        run.record(&win, enc.session.stats().checks);
        if run.partial || (cfg.goal == Goal::Initial && win.is_winning(&init)) {
            break;
        }
    }
    run.absorb(&enc.session);
    let winning = win.is_winning(&init);
    Ok(run.finish(win, winning, policy))
}

/// Projects every memory cell of every live product support.
fn project_store(product: &MemoryProduct, pomdp: &Pomdp, supports: impl IntoIterator<Item = BeliefSupport>) -> WinningRegionStore {
    let mut store = WinningRegionStore::for_pomdp(pomdp);
    for b in supports {
        let cell = b.observation % product.cells;
        let members = product.project(&b.members, cell);
        if !members.is_empty() {
            store.insert_set(b.observation / product.cells, &members);
        }
    }
    store
}

fn oneshot(pomdp: &Pomdp, spec: &Specification, cfg: &DriverConfig, observer: Observer<'_>) -> Result<Outcome, DriverError> {
    let init = initial_support(pomdp)?;
    let mut run = Run::new(cfg, observer);
    let product = unfold_memory(pomdp, spec, cfg.memory.max(1))?;
    let (p, pspec) = (&product.pomdp, &product.spec);
    let mut win = WinningRegionStore::from_reach(p, pspec);
    let forbidden = graph_preprocessing(p, pspec, &mut win).unsafe_states;
    // whole winning observation classes are as good as REACH
    let mut reach = pspec.reach.clone();
    for z in 0..p.num_observations() {
        let all = p.states_with_obs(z);
        if !all.is_empty() && win.is_winning_set(z, all) {
            reach.union_with(all);
        }
    }
    let extended = Specification::new(reach, pspec.avoid.union(&forbidden));
    let k = cfg.rank_bound.unwrap_or(p.num_states()).max(1);
    let mut session = run.session()?;
    let book = VariableBook::oneshot(&mut session, p, k)?;
    session.assert_all(encode_oneshot(p, &extended, &product.lift(&init.members, 0), &book))?;
    let result = session.check()?;
    run.absorb(&session);
    let mut supports = win.live_supports();
    let mut policy = None;
    match result {
        CheckResult::Sat(m) => {
            let d = decode(&m, &book, p)?;
            supports.extend(d.supports);
            policy = Some(d.policy);
        }
        CheckResult::Unknown => run.partial = true,
        CheckResult::Unsat => {}
    }
    let store = project_store(&product, pomdp, supports);
    run.record(&store, 0);
    let winning = store.is_winning(&init);
    Ok(run.finish(store, winning, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{maximal_winning_region, OracleScope, DEFAULT_NODE_CAP};
    use crate::benchmarks::cheese::{self, cell};

    fn cheese_from(states: &[usize]) -> (Pomdp, Specification) {
        let inst = cheese::generate_with_initial(&states.iter().map(|&k| cell(k)).collect::<Vec<_>>());
        (inst.pomdp, inst.spec)
    }

    #[test]
    fn oneshot_on_cheese() {
        let cfg = DriverConfig { rank_bound: Some(11), ..DriverConfig::new(Mode::Oneshot, Goal::Initial) };
        let (p, spec) = cheese_from(&[6, 8]);
        assert!(!run(&p, &spec, &cfg).unwrap().initial_winning);
        let (p, spec) = cheese_from(&[1]);
        assert!(run(&p, &spec, &cfg).unwrap().initial_winning);
        let (p, spec) = cheese_from(&[6, 8]);
        let two = DriverConfig { memory: 2, rank_bound: Some(22), ..cfg };
        assert!(run(&p, &spec, &two).unwrap().initial_winning);
    }

    #[test]
    fn every_mode_reaches_the_oracle_on_cheese() {
        let (p, spec) = cheese_from(&[6, 8]);
        let oracle = maximal_winning_region(&p, &spec, DEFAULT_NODE_CAP, OracleScope::Full).unwrap();
        for mode in [Mode::NaiveExplicit, Mode::NaiveIncremental, Mode::Incremental] {
            let mut checks = 0;
            let out = run_observed(&p, &spec, &DriverConfig::new(mode, Goal::Fixpoint), &mut |w, _| {
                assert!(w.is_deadlock_free(&p) && w.is_productive(&p, &spec));
                assert!(w.is_subregion_of(&oracle));
                checks += 1;
            })
            .unwrap();
            assert!(checks > 0);
            assert!(!out.partial);
            assert!(out.initial_winning, "{mode}");
            assert!(out.store.covers_same(&oracle), "{mode}: {:?}", out.store.maximal_supports());
        }
    }

    #[test]
    fn initial_goal_stops_early() {
        let (p, spec) = cheese_from(&[1]);
        let out = run_initial(&p, &spec, &DriverConfig::default()).unwrap();
        assert!(out.initial_winning);
        let (p, spec) = cheese_from(&[6, 8]);
        let out = run_initial(&p, &spec, &DriverConfig::default()).unwrap();
        assert!(out.initial_winning);
        let full = run(&p, &spec, &DriverConfig::default()).unwrap();
        assert!(out.store.is_subregion_of(&full.store));
        assert!(out.log_json_lines().lines().count() == out.log.len());
    }

    #[test]
    fn trapped_initial_is_not_winning() {
        let (p, spec) = cheese_from(&[9, 11]);
        for mode in Mode::ALL {
            let out = run(&p, &spec, &DriverConfig::new(mode, Goal::Initial)).unwrap();
            assert!(!out.initial_winning, "{mode}");
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }
}
