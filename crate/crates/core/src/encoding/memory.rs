//! Finite memory as a product POMDP.

use crate::bits::StateSet;
use crate::pomdp::{ModelError, Pomdp, PomdpBuilder, Specification, Transition};

pub const MAX_UNFOLDED_STATES: usize = 1 << 20;

/// The product of a POMDP with `cells` memory cells. State `(s, c)` is
/// `s * cells + c`, action `(a, c')` (play `a`, move to cell `c'`) is
/// `a * cells + c'`, and observation `(z, c)` is `z * cells + c`.
#[derive(Debug, Clone)]
pub struct MemoryProduct {
    pub pomdp: Pomdp,
    pub spec: Specification,
    pub cells: usize,
}

impl MemoryProduct {
    pub fn state(&self, s: usize, cell: usize) -> usize {
        s * self.cells + cell
    }

    pub fn split_state(&self, t: usize) -> (usize, usize) {
        (t / self.cells, t % self.cells)
    }

    /// `states × {cell}`.
    pub fn lift(&self, states: &StateSet, cell: usize) -> StateSet {
        StateSet::from_iter_with_width(self.pomdp.num_states(), states.iter().map(|s| self.state(s, cell)))
    }

    /// States of `cell` projected back to the original model.
    pub fn project(&self, states: &StateSet, cell: usize) -> StateSet {
        let n = self.pomdp.num_states() / self.cells;
        StateSet::from_iter_with_width(
            n,
            states.iter().filter(|&t| t % self.cells == cell).map(|t| t / self.cells),
        )
    }
}

/// Unfolds `cells` memory cells; spec states stay absorbing in their cell.
pub fn unfold_memory(pomdp: &Pomdp, spec: &Specification, cells: usize) -> Result<MemoryProduct, ModelError> {
    assert!(cells >= 1, "at least one memory cell");
    let n = pomdp.num_states();
    let total = n.checked_mul(cells).filter(|&t| t <= MAX_UNFOLDED_STATES);
    let Some(total) = total else {
        return Err(ModelError::TooLarge(n.saturating_mul(cells), MAX_UNFOLDED_STATES));
    };
    let label = |name: &str, c: usize| if cells == 1 { name.to_string() } else { format!("{name}/m{c}") };
    let actions = pomdp
        .action_names()
        .iter()
        .flat_map(|a| (0..cells).map(move |c| label(a, c)))
        .collect();
    let observations = pomdp
        .observation_names()
        .iter()
        .flat_map(|z| (0..cells).map(move |c| label(z, c)))
        .collect();
    let mut b = PomdpBuilder::new(total, actions, observations);
    let targets = spec.reach.union(&spec.avoid);
    for s in 0..n {
        for c in 0..cells {
            let here = s * cells + c;
            b.set_observation(here, pomdp.obs(s) * cells + c)?;
            for &a in pomdp.enabled(s) {
                let t = pomdp.transition(s, a).expect("enabled");
                for next in 0..cells {
                    let moved = if targets.contains(s) {
                        Transition::dirac(here)
                    } else {
                        Transition::new(t.iter().map(|(succ, p)| (succ * cells + next, p)).collect())
                    };
                    b.add_transition(here, a * cells + next, moved)?;
                }
            }
        }
    }
    b.set_initial(pomdp.initial().iter().map(|s| s * cells));
    let lift_all = |set: &StateSet| StateSet::from_iter_with_width(total, set.iter().flat_map(|s| (0..cells).map(move |c| s * cells + c)));
    Ok(MemoryProduct {
        pomdp: b.build(),
        spec: Specification::new(lift_all(&spec.reach), lift_all(&spec.avoid)),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::cheese;
    use crate::pomdp::validate;

    #[test]
    fn one_cell_is_identity() {
        let inst = cheese::generate();
        let p = unfold_memory(&inst.pomdp, &inst.spec, 1).unwrap();
        assert_eq!(p.pomdp, inst.pomdp);
        assert_eq!(p.spec, inst.spec);
    }

    #[test]
    fn two_cells_on_cheese() {
        let inst = cheese::generate();
        let p = unfold_memory(&inst.pomdp, &inst.spec, 2).unwrap();
        assert_eq!(p.pomdp.num_states(), 22);
        assert_eq!(p.pomdp.num_observations(), 14);
        assert!(validate(&p.pomdp, &p.spec).is_empty());
        let init = p.pomdp.initial().clone();
        assert_eq!(p.project(&init, 0), *inst.pomdp.initial());
        assert!(p.project(&init, 1).is_empty());
    }

    #[test]
    fn overflow_is_reported() {
        let inst = cheese::generate();
        assert!(matches!(unfold_memory(&inst.pomdp, &inst.spec, 1 << 20), Err(ModelError::TooLarge(..))));
    }
}
