//! Agent runs on a POMDP with belief-support tracking and an optional shield.

use std::fmt::Write as _;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::benchmarks::GridLayout;
use crate::bits::StateSet;
use crate::pomdp::{BeliefSupport, Pomdp, Specification};
use crate::region::Shield;

pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// How the agent picks among the offered actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agent {
    UniformRandom,
    /// One preferred action per observation; falls back to a uniform choice
    /// when the preferred action is not offered.
    FixedPolicy(Vec<Option<usize>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub max_steps: usize,
    /// Only safety is claimed; the store may be deadlock-free without being
    /// productive.
    pub safety_only: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { max_steps: DEFAULT_MAX_STEPS, safety_only: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub state: usize,
    pub observation: usize,
    pub support: Vec<usize>,
    pub offered: Vec<usize>,
    pub action: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Reached,
    AvoidedViolation,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub seed: u64,
    pub steps: Vec<Step>,
    pub outcome: RunOutcome,
    pub step_count: usize,
    /// State and support when the run stopped.
    pub final_state: usize,
    pub final_support: Vec<usize>,
}

impl Trace {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("the initial support is not winning in the shield's region")]
    NotWinning,
    #[error("the initial states do not form an observation-uniform support")]
    BadInitial,
    #[error("no action offered at step {0}")]
    Deadlock(usize),
}

fn sample_state(pomdp: &Pomdp, s: usize, a: usize, rng: &mut ChaCha8Rng) -> usize {
    let t = pomdp.transition(s, a).expect("offered actions are enabled");
    let weights: Vec<f64> = t.weights().iter().map(|w| *w.numer() as f64 / *w.denom() as f64).collect();
    let pick = WeightedIndex::new(&weights).expect("positive weights");
    t.successors()[pick.sample(rng)]
}

/// One run from a uniformly drawn initial state.
pub fn simulate(
    pomdp: &Pomdp,
    spec: &Specification,
    shield: Option<&Shield<'_>>,
    agent: &Agent,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Trace, SimError> {
    let mut support = BeliefSupport::new(pomdp, pomdp.initial().clone()).ok_or(SimError::BadInitial)?;
    if let Some(sh) = shield {
        if !sh.store.is_winning(&support) {
            return Err(SimError::NotWinning);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<usize> = support.members.iter().collect();
    let mut state = *initial.choose(&mut rng).expect("nonempty support");
    let lifted = spec.lifted();
    let mut steps = Vec::new();
    let outcome = loop {
        if spec.avoid.contains(state) {
            break RunOutcome::AvoidedViolation;
        }
        if lifted.reach(&support.members) {
            break RunOutcome::Reached;
        }
        if steps.len() >= cfg.max_steps {
            break RunOutcome::StepLimit;
        }
        let offered = match shield {
            Some(sh) => sh.allowed(&support).map_err(|_| SimError::NotWinning)?,
            None => pomdp.enabled_obs(support.observation).to_vec(),
        };
        if offered.is_empty() {
            return Err(SimError::Deadlock(steps.len()));
        }
        let preferred = match agent {
            Agent::FixedPolicy(table) => table.get(support.observation).copied().flatten().filter(|a| offered.contains(a)),
            Agent::UniformRandom => None,
        };
        let action = preferred.unwrap_or_else(|| *offered.choose(&mut rng).expect("nonempty"));
        let next = sample_state(pomdp, state, action, &mut rng);
        let z = pomdp.obs(next);
        let members = pomdp.successor_set(&support.members, action).intersection(pomdp.states_with_obs(z));
        steps.push(Step {
            state,
            observation: support.observation,
            support: support.members.iter().collect(),
            offered,
            action,
        });
        state = next;
        support = BeliefSupport { observation: z, members };
        debug_assert!(support.members.contains(state));
    };
    Ok(Trace {
        seed,
        step_count: steps.len(),
        steps,
        outcome,
        final_state: state,
        final_support: support.members.iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub reached: usize,
    pub avoid_violations: usize,
    pub step_limits: usize,
    pub reach_rate: f64,
    pub violation_rate: f64,
    pub step_limit_rate: f64,
    pub mean_steps_to_reach: f64,
    pub max_steps_to_reach: usize,
}

impl Summary {
    /// Whether the runs are consistent with the claim being tested.
    pub fn holds(&self, safety_only: bool) -> bool {
        self.avoid_violations == 0 && (safety_only || self.reached == self.runs)
    }

    pub fn table(&self) -> String {
        let rows: [(&str, String); 9] = [
            ("runs", self.runs.to_string()),
            ("reached", self.reached.to_string()),
            ("avoid violations", self.avoid_violations.to_string()),
            ("step limit", self.step_limits.to_string()),
            ("reach rate", format!("{:.4}", self.reach_rate)),
            ("violation rate", format!("{:.4}", self.violation_rate)),
            ("step-limit rate", format!("{:.4}", self.step_limit_rate)),
            ("mean steps to reach", format!("{:.2}", self.mean_steps_to_reach)),
            ("max steps to reach", self.max_steps_to_reach.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            writeln!(out, "{k:<20} {v:>10}").expect("write to string");
        }
        out
    }
}

pub fn evaluate(traces: &[Trace]) -> Summary {
    let mut s = Summary { runs: traces.len(), ..Summary::default() };
    let mut total_steps = 0usize;
    for t in traces {
        match t.outcome {
            RunOutcome::Reached => {
                s.reached += 1;
                total_steps += t.step_count;
                s.max_steps_to_reach = s.max_steps_to_reach.max(t.step_count);
            }
            RunOutcome::AvoidedViolation => s.avoid_violations += 1,
            RunOutcome::StepLimit => s.step_limits += 1,
        }
    }
    if s.runs > 0 {
        let n = s.runs as f64;
        s.reach_rate = s.reached as f64 / n;
        s.violation_rate = s.avoid_violations as f64 / n;
        s.step_limit_rate = s.step_limits as f64 / n;
    }
    if s.reached > 0 {
        s.mean_steps_to_reach = total_steps as f64 / s.reached as f64;
    }
    s
}

/// The grid before every step and after the last one.
pub fn render_trace(trace: &Trace, layout: &GridLayout) -> String {
    let width = layout.cells.len();
    let mut out = String::new();
    for (i, step) in trace.steps.iter().enumerate() {
        let support = StateSet::from_iter_with_width(width, step.support.iter().copied());
        writeln!(out, "step {i}: action {}", step.action).expect("write to string");
        out.push_str(&layout.render(&support, Some(step.state)));
    }
    let last = StateSet::from_iter_with_width(width, trace.final_support.iter().copied());
    writeln!(out, "end: {:?}", trace.outcome).expect("write to string");
    out.push_str(&layout.render(&last, Some(trace.final_state)));
    out
}
