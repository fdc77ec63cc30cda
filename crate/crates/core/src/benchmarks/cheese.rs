//! The 11-cell cheese maze.
//!
//! ```text
//!  1  2  3  4  5
//!  6     7     8
//!  9    10    11
//! ```
//!
//! Cells are numbered from 1 as drawn; cell `k` is state `k - 1`. Moves are
//! deterministic and only enabled where the maze continues. Cells 2/4,
//! 6/7/8 and 9/11 look alike. Cell 10 holds the cheese, 9 and 11 are traps.
//! The default initial support is {6, 8}.

use super::{GridLayout, Instance};
use crate::bits::StateSet;
use crate::pomdp::{make_absorbing, PomdpBuilder, Specification, Transition};

pub const NORTH: usize = 0;
pub const EAST: usize = 1;
pub const SOUTH: usize = 2;
pub const WEST: usize = 3;

/// State index of maze cell `k` (1-based as drawn).
pub const fn cell(k: usize) -> usize {
    k - 1
}

const POSITIONS: [(usize, usize); 11] = [
    (0, 0),
    (1, 0),
    (2, 0),
    (3, 0),
    (4, 0),
    (0, 1),
    (2, 1),
    (4, 1),
    (0, 2),
    (2, 2),
    (4, 2),
];

/// `(cell, action, cell)` moves, 1-based cells.
const MOVES: [(usize, usize, usize); 20] = [
    (1, EAST, 2),
    (1, SOUTH, 6),
    (2, EAST, 3),
    (2, WEST, 1),
    (3, EAST, 4),
    (3, WEST, 2),
    (3, SOUTH, 7),
    (4, EAST, 5),
    (4, WEST, 3),
    (5, WEST, 4),
    (5, SOUTH, 8),
    (6, NORTH, 1),
    (6, SOUTH, 9),
    (7, NORTH, 3),
    (7, SOUTH, 10),
    (8, NORTH, 5),
    (8, SOUTH, 11),
    (9, NORTH, 6),
    (10, NORTH, 7),
    (11, NORTH, 8),
];

pub fn generate() -> Instance {
    generate_with_initial(&[cell(6), cell(8)])
}

pub fn generate_with_initial(initial: &[usize]) -> Instance {
    let observations = [
        ("corner_w", vec![1]),
        ("corridor", vec![2, 4]),
        ("junction", vec![3]),
        ("corner_e", vec![5]),
        ("shaft", vec![6, 7, 8]),
        ("floor", vec![9, 11]),
        ("cheese", vec![10]),
    ];
    let mut b = PomdpBuilder::new(
        11,
        super::MOVES.iter().map(|s| s.to_string()).collect(),
        observations.iter().map(|(n, _)| n.to_string()).collect(),
    );
    for (z, (_, cells)) in observations.iter().enumerate() {
        for &k in cells {
            b.set_observation(cell(k), z).expect("in range");
        }
    }
    for (from, a, to) in MOVES {
        b.add_transition(cell(from), a, Transition::dirac(cell(to)))
            .expect("each move listed once");
    }
    b.set_initial(initial.iter().copied());
    let spec = Specification::from_states(11, &[cell(10)], &[cell(9), cell(11)]);
    let pomdp = make_absorbing(&b.build(), &spec);
    Instance {
        pomdp,
        spec,
        layout: Some(GridLayout {
            width: 5,
            height: 3,
            cells: POSITIONS.iter().map(|&p| Some(p)).collect(),
        }),
    }
}

/// The shaft cells 6, 7, 8 as a state set.
pub fn shaft() -> StateSet {
    StateSet::from_iter_with_width(11, [cell(6), cell(7), cell(8)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let inst = generate();
        assert_eq!(inst.pomdp.num_states(), 11);
        assert_eq!(inst.pomdp.num_actions(), 4);
        assert_eq!(inst.pomdp.num_observations(), 7);
        assert_eq!(inst.pomdp.obs(cell(6)), inst.pomdp.obs(cell(8)));
        assert_ne!(inst.pomdp.obs(cell(1)), inst.pomdp.obs(cell(5)));
        assert_eq!(inst.pomdp.initial().iter().collect::<Vec<_>>(), vec![5, 7]);
        assert_eq!(inst.pomdp.enabled(cell(3)), &[EAST, SOUTH, WEST]);
    }
}
