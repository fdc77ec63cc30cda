//! Obstacle: reach the exit of an N×N grid past a block of traps.
//!
//! Reconstruction:
//! - one extra start state whose only action `enter` drops the robot
//!   uniformly on one of the two leftmost cells of the top row;
//! - each move goes one or two cells in the chosen direction with equal
//!   probability, clipped at the border;
//! - the traps are the central 2×2 block and the exit is the bottom-right
//!   corner;
//! - observations only tell start, plain cell, trap or exit.
//!
//! For N=6 this gives 37 states, 224 transitions and 4 observations.

use super::{explore, step_clipped, uniform, Expansion, Instance, Role, MOVES};

const ENTER: usize = 4;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Start,
    Cell(usize, usize),
}

pub fn generate(n: usize) -> Instance {
    let actions = [MOVES[0], MOVES[1], MOVES[2], MOVES[3], "enter"];
    let lo = n / 2 - 1;
    let trap = |x: usize, y: usize| (lo..=lo + 1).contains(&x) && (lo..=lo + 1).contains(&y);
    let exit = (n - 1, n - 1);
    // Key order fixes state numbering: start first, then cells row by row.
    let mut initial = vec![Key::Start];
    initial.extend((0..n).flat_map(|y| (0..n).map(move |x| Key::Cell(x, y))));
    explore(&actions, initial, Some((n, n)), |key| match *key {
        Key::Start => Expansion {
            observation: "init".into(),
            role: Role::Plain,
            moves: vec![(ENTER, uniform(vec![Key::Cell(0, 0), Key::Cell(1, 0)]))],
            cell: None,
        },
        Key::Cell(x, y) => {
            let (observation, role) = if (x, y) == exit {
                ("exit", Role::Reach)
            } else if trap(x, y) {
                ("trap", Role::Avoid)
            } else {
                ("normal", Role::Plain)
            };
            let moves = (0..4)
                .map(|dir| {
                    let one = step_clipped(n, (x, y), dir);
                    let two = step_clipped(n, one, dir);
                    (dir, uniform(vec![Key::Cell(one.0, one.1), Key::Cell(two.0, two.1)]))
                })
                .collect();
            Expansion {
                observation: observation.into(),
                role,
                moves,
                cell: Some((x, y)),
            }
        }
    })
    .map(|mut inst| {
        // only the start state is initial; the other seeds only fix numbering
        let start = crate::bits::StateSet::singleton(inst.pomdp.num_states(), 0);
        inst.pomdp = inst.pomdp.with_initial(start);
        inst
    })
    .expect("obstacle grids stay far below the state limit")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_by_six_sizes() {
        let inst = generate(6);
        assert_eq!(inst.pomdp.num_states(), 37);
        assert_eq!(inst.pomdp.num_transitions(), 224);
        assert_eq!(inst.pomdp.num_observations(), 4);
        assert_eq!(inst.spec.avoid.len(), 4);
        assert_eq!(inst.spec.reach.len(), 1);
    }
}
