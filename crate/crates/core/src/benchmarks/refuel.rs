//! Refuel: drive from the top-left to the bottom-right corner of an N×N grid
//! on a battery of capacity E.
//!
//! Reconstruction:
//! - state is position plus battery level, built from the reachable part;
//! - every move costs one unit, including bumping into the border;
//! - `refuel` is enabled everywhere but only recharges to E at a station
//!   (the start corner and three cells near the other corners);
//! - two obstacle cells on the main diagonal and an empty battery away from
//!   a station are traps;
//! - the rover observes its battery level and the quadrant it is in.
//!
//! For N=6, E=8 this gives 268 states, 1340 transitions and 36 observations.

use super::{explore, step_clipped, BenchmarkError, Expansion, Instance, Moves, Role, MOVES};
use crate::pomdp::Prob;

const REFUEL: usize = 4;

pub fn generate(n: usize, capacity: usize) -> Result<Instance, BenchmarkError> {
    let actions = [MOVES[0], MOVES[1], MOVES[2], MOVES[3], "refuel"];
    let obstacles = [(n / 2 - 1, n / 2 - 1), (n / 2, n / 2)];
    let stations: Vec<(usize, usize)> = [(0, 0), (1, n - 2), (n - 2, 1), (n - 2, n - 2)]
        .into_iter()
        .filter(|c| !obstacles.contains(c))
        .collect();
    let goal = (n - 1, n - 1);
    let one = Prob::from_integer(1);
    explore(&actions, vec![(0, 0, capacity)], Some((n, n)), |&(x, y, b)| {
        let here = (x, y);
        let at_station = stations.contains(&here);
        let role = if here == goal {
            Role::Reach
        } else if obstacles.contains(&here) || (b == 0 && !at_station) {
            Role::Avoid
        } else {
            Role::Plain
        };
        let observation = format!("b{b}_q{}{}", x * 2 / n, y * 2 / n);
        let moves = if role != Role::Plain {
            (0..actions.len()).map(|a| (a, vec![((x, y, b), one)])).collect()
        } else {
            let mut moves: Moves<(usize, usize, usize)> = (0..4)
                .map(|dir| {
                    let next = if b == 0 {
                        (x, y, b)
                    } else {
                        let (nx, ny) = step_clipped(n, here, dir);
                        (nx, ny, b - 1)
                    };
                    (dir, vec![(next, one)])
                })
                .collect();
            let refuelled = if at_station { (x, y, capacity) } else { (x, y, b) };
            moves.push((REFUEL, vec![(refuelled, one)]));
            moves
        };
        Expansion {
            observation,
            role,
            moves,
            cell: Some(here),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_near_published() {
        let inst = generate(6, 8).unwrap();
        assert_eq!(inst.pomdp.num_states(), 268);
        assert_eq!(inst.pomdp.num_transitions(), 1340);
        assert_eq!(inst.pomdp.num_observations(), 36);
    }
}
