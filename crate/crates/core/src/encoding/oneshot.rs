//! Bounded memoryless policy search from one support.

use super::VariableBook;
use crate::bits::StateSet;
use crate::pomdp::{Pomdp, Specification};
use crate::smt::Term;

/// Reach-avoid constraints for a memoryless policy winning from `initial`,
/// with step ranks bounded by `k = rank_bits[s].len() - 1`.
pub fn encode_oneshot(pomdp: &Pomdp, spec: &Specification, initial: &StateSet, book: &VariableBook) -> Vec<Term> {
    let spec = &spec.with_observable_reach(pomdp);
    let c = |s: usize| Term::var(book.reached[s]);
    let rank = |s: usize, j: usize| Term::var(book.rank_bits[s][j]);
    let k = book.rank_bits.first().map_or(0, |r| r.len() - 1);
    let undecided = spec.undecided();
    let mut out = Vec::new();

    out.extend(initial.iter().map(c));
    for row in &book.act {
        if !row.is_empty() {
            out.push(Term::or(row.iter().map(|&(_, v)| Term::var(v))));
        }
    }
    out.extend(spec.avoid.iter().map(|s| Term::not(c(s))));
    for s in 0..pomdp.num_states() {
        if spec.reach.contains(s) {
            continue;
        }
        for &(a, v) in &book.act[pomdp.obs(s)] {
            for &t in pomdp.post(s, a) {
                out.push(Term::implies(Term::and([c(s), Term::var(v)]), c(t)));
            }
        }
    }
    for s in undecided.iter() {
        out.push(Term::implies(c(s), rank(s, k)));
    }
    for s in 0..pomdp.num_states() {
        if !spec.reach.contains(s) {
            out.push(Term::not(rank(s, 0)));
        }
    }
    for s in undecided.iter() {
        for j in 1..=k {
            let step = book.act[pomdp.obs(s)].iter().map(|&(a, v)| {
                Term::and([Term::var(v), Term::or(pomdp.post(s, a).iter().map(|&t| rank(t, j - 1)))])
            });
            out.push(Term::iff(rank(s, j), Term::or(step)));
        }
    }
    out
}
