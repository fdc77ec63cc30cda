//! Policy search with hand-overs to stored winning supports.

use super::VariableBook;
use crate::bits::StateSet;
use crate::pomdp::{Pomdp, Specification};
use crate::region::WinningRegionStore;
use crate::smt::Term;

/// The store-independent constraints. `forbidden` holds AVOID and every
/// state known to be losing.
pub fn encode_fixed(pomdp: &Pomdp, spec: &Specification, forbidden: &StateSet, book: &VariableBook) -> Vec<Term> {
    let c = |s: usize| Term::var(book.reached[s]);
    let d = |s: usize| Term::var(book.shortcut[s]);
    let targets = spec.observable_reach(pomdp);
    let mut out = Vec::new();

    for row in &book.act {
        if !row.is_empty() {
            out.push(Term::or(row.iter().map(|&(_, v)| Term::var(v))));
        }
    }
    for s in forbidden.union(&spec.avoid).iter() {
        out.push(Term::not(c(s)));
        out.push(Term::not(d(s)));
    }
    for s in 0..pomdp.num_states() {
        let z = pomdp.obs(s);
        let sw = Term::var(book.switch[z]);
        let imm = Term::var(book.immediate[z]);
        out.push(Term::implies(Term::and([c(s), imm.clone()]), d(s)));
        out.push(Term::implies(d(s), Term::int_gt(book.choice[z], 0)));
        if targets.contains(s) {
            continue;
        }
        for &(a, v) in &book.act[z] {
            let played = Term::and([c(s), Term::var(v), Term::not(imm.clone())]);
            for &t in pomdp.post(s, a) {
                out.push(Term::implies(Term::and([played.clone(), Term::not(sw.clone())]), c(t)));
                out.push(Term::implies(Term::and([played.clone(), sw.clone()]), d(t)));
            }
        }
        let descend = book.act[z].iter().map(|&(a, v)| {
            Term::and([
                Term::var(v),
                Term::or(pomdp.post(s, a).iter().map(|&t| Term::real_gt(book.rank[s], book.rank[t]))),
            ])
        });
        out.push(Term::implies(c(s), Term::or(descend.chain([sw, imm]))));
    }
    out
}

/// Hand-over on `z` to entry `index` is only possible into its states.
pub fn encode_region_entry(pomdp: &Pomdp, book: &VariableBook, z: usize, index: usize, support: &StateSet) -> Vec<Term> {
    pomdp
        .states_with_obs(z)
        .difference(support)
        .iter()
        .map(|s| Term::implies(Term::var(book.shortcut[s]), Term::int_ne(book.choice[z], index as i64)))
        .collect()
}

/// [`encode_region_entry`] for every entry, tombstoned ones included.
pub fn encode_region(pomdp: &Pomdp, store: &WinningRegionStore, book: &VariableBook) -> Vec<Term> {
    let mut out = Vec::new();
    for z in 0..store.num_observations() {
        for e in store.entries(z) {
            out.extend(encode_region_entry(pomdp, book, z, e.index, &e.support));
        }
    }
    out
}

/// Index bounds for the current store, and the demand that some
/// observation's reached states are not covered by a live entry.
pub fn encode_progress(pomdp: &Pomdp, store: &WinningRegionStore, book: &VariableBook) -> Vec<Term> {
    let c = |s: usize| Term::var(book.reached[s]);
    let mut out = Vec::new();
    for z in 0..pomdp.num_observations() {
        out.push(Term::int_le(book.choice[z], store.index_bound(z) as i64));
    }
    out.push(Term::or(book.progress.iter().map(|&u| Term::var(u))));
    for z in 0..pomdp.num_observations() {
        let states = pomdp.states_with_obs(z);
        let uncovered = if store.live(z).next().is_none() {
            Term::or(states.iter().map(c))
        } else {
            Term::and(store.live(z).map(|e| Term::or(states.difference(&e.support).iter().map(c))))
        };
        out.push(Term::iff(Term::var(book.progress[z]), uncovered));
    }
    out
}

/// No hand-overs at all.
pub fn disable_shortcuts(book: &VariableBook) -> Vec<Term> {
    let vars = book.switch.iter().chain(&book.immediate).chain(&book.shortcut);
    vars.map(|&v| Term::not(Term::var(v))).collect()
}

/// Every state of `initial` is reached.
pub fn pin_initial(book: &VariableBook, initial: &StateSet) -> Vec<Term> {
    initial.iter().map(|s| Term::var(book.reached[s])).collect()
}
