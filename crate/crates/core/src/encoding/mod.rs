//! Constraint generation for policy search, and model decoding.
//!
//! Variables, per observation `z`, action `a` and state `s`:
//! - `act[z][a]`: the policy may play `a` on observation `z`;
//! - `reached[s]`: `s` is reachable under the policy;
//! - `rank_bits[s][j]` (one-shot): `s` reaches REACH within `j` steps;
//! - `rank[s]` (incremental): a real-valued ranking;
//! - `progress[z]`: the reached states of `z` are not covered by the store;
//! - `switch[z]`: after playing on `z` the policy hands over to a stored one;
//! - `immediate[z]`: the policy hands over as soon as it observes `z`;
//! - `shortcut[s]`: `s` is reached at a hand-over;
//! - `choice[z]`: index of the stored support the hand-over targets on `z`.

mod incremental;
mod memory;
mod oneshot;
mod shortcut;

use crate::bits::StateSet;
use crate::pomdp::{BeliefSupport, Pomdp};
use crate::smt::{MissingValue, Model, Session, SolverError, Sort, VarId};

pub use incremental::{
    disable_shortcuts, encode_fixed, encode_progress, encode_region, encode_region_entry, pin_initial,
};
pub use memory::{unfold_memory, MemoryProduct, MAX_UNFOLDED_STATES};
pub use oneshot::encode_oneshot;
pub use shortcut::{add_shortcut, ShortcutPomdp};

/// Largest shortcut index a solver variable can take.
pub const MAX_INDEX: i64 = u32::MAX as i64;

/// Solver variables of one encoding, bound to one session.
#[derive(Debug, Clone)]
pub struct VariableBook {
    /// Per observation: `(action, variable)` for every enabled action.
    pub act: Vec<Vec<(usize, VarId)>>,
    pub reached: Vec<VarId>,
    pub rank_bits: Vec<Vec<VarId>>,
    pub rank: Vec<VarId>,
    pub progress: Vec<VarId>,
    pub switch: Vec<VarId>,
    pub immediate: Vec<VarId>,
    pub shortcut: Vec<VarId>,
    pub choice: Vec<VarId>,
}

impl VariableBook {
    fn common(session: &mut Session, pomdp: &Pomdp) -> Result<Self, SolverError> {
        let mut act = Vec::with_capacity(pomdp.num_observations());
        for z in 0..pomdp.num_observations() {
            let mut row = Vec::new();
            if !pomdp.states_with_obs(z).is_empty() {
                for &a in pomdp.enabled_obs(z) {
                    row.push((a, session.declare(format!("A_{z}_{a}"), Sort::Bool)?));
                }
            }
            act.push(row);
        }
        let reached = (0..pomdp.num_states())
            .map(|s| session.declare(format!("C_{s}"), Sort::Bool))
            .collect::<Result<_, _>>()?;
        Ok(VariableBook {
            act,
            reached,
            rank_bits: Vec::new(),
            rank: Vec::new(),
            progress: Vec::new(),
            switch: Vec::new(),
            immediate: Vec::new(),
            shortcut: Vec::new(),
            choice: Vec::new(),
        })
    }

    /// Variables of the bounded one-shot encoding with ranks `0..=k`.
    pub fn oneshot(session: &mut Session, pomdp: &Pomdp, k: usize) -> Result<Self, SolverError> {
        let mut book = Self::common(session, pomdp)?;
        book.rank_bits = (0..pomdp.num_states())
            .map(|s| {
                (0..=k)
                    .map(|j| session.declare(format!("R_{s}_{j}"), Sort::Bool))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(book)
    }

    /// Variables of the incremental encoding with shortcuts.
    pub fn incremental(session: &mut Session, pomdp: &Pomdp) -> Result<Self, SolverError> {
        let mut book = Self::common(session, pomdp)?;
        let n = pomdp.num_states();
        let m = pomdp.num_observations();
        book.rank = (0..n).map(|s| session.declare(format!("r_{s}"), Sort::Real)).collect::<Result<_, _>>()?;
        book.shortcut = (0..n).map(|s| session.declare(format!("D_{s}"), Sort::Bool)).collect::<Result<_, _>>()?;
        book.progress = (0..m).map(|z| session.declare(format!("U_{z}"), Sort::Bool)).collect::<Result<_, _>>()?;
        book.switch = (0..m).map(|z| session.declare(format!("Sw_{z}"), Sort::Bool)).collect::<Result<_, _>>()?;
        book.immediate = (0..m).map(|z| session.declare(format!("Imm_{z}"), Sort::Bool)).collect::<Result<_, _>>()?;
        book.choice = (0..m)
            .map(|z| session.declare(format!("P_{z}"), Sort::Int { lo: 0, hi: MAX_INDEX }))
            .collect::<Result<_, _>>()?;
        Ok(book)
    }

    pub fn act_var(&self, z: usize, a: usize) -> Option<VarId> {
        self.act[z].iter().find(|(b, _)| *b == a).map(|&(_, v)| v)
    }
}

/// A policy read off a satisfying assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyCandidate {
    /// Per observation, the actions played (possibly several, randomised).
    pub actions: Vec<Vec<usize>>,
    pub switch: Vec<bool>,
    pub immediate: Vec<bool>,
    pub choice: Vec<i64>,
    pub progress: Vec<bool>,
    pub reached: StateSet,
    pub shortcut: StateSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub policy: PolicyCandidate,
    /// Reached states split by observation.
    pub supports: Vec<BeliefSupport>,
}

pub fn decode(model: &Model, book: &VariableBook, pomdp: &Pomdp) -> Result<Decoded, MissingValue> {
    let n = pomdp.num_states();
    let mut actions = Vec::with_capacity(book.act.len());
    for row in &book.act {
        let mut chosen = Vec::new();
        for &(a, v) in row {
            if model.bool(v)? {
                chosen.push(a);
            }
        }
        actions.push(chosen);
    }
    let flags = |vars: &[VarId]| vars.iter().map(|&v| model.bool(v)).collect::<Result<Vec<_>, _>>();
    let mut reached = StateSet::empty(n);
    for (s, &v) in book.reached.iter().enumerate() {
        if model.bool(v)? {
            reached.insert(s);
        }
    }
    let mut shortcut = StateSet::empty(n);
    for (s, &v) in book.shortcut.iter().enumerate() {
        if model.bool(v)? {
            shortcut.insert(s);
        }
    }
    let policy = PolicyCandidate {
        actions,
        switch: flags(&book.switch)?,
        immediate: flags(&book.immediate)?,
        choice: book.choice.iter().map(|&v| model.int(v)).collect::<Result<_, _>>()?,
        progress: flags(&book.progress)?,
        reached: reached.clone(),
        shortcut,
    };
    Ok(Decoded {
        supports: pomdp.split_by_observation(&reached),
        policy,
    })
}
