//! Persistent-mutex fixpoint: a sound approximation of fact inconsistency.
//!
//! The fixpoint tracks the reached facts `F`, the admitted actions `A` and,
//! for every pair of reached facts, whether some admitted action has shown the
//! pair can hold together. Pairs of reached facts that are never shown
//! jointly reachable form the mutex set `M`.
//!
//! * `F` starts as the initial state, every pair inside it is jointly
//!   reachable, `A` is empty.
//! * An action is admitted once its preconditions lie in `F` and no pair of
//!   them is in `M`.
//! * An admitted action `a` makes `(p, q)` jointly reachable when it adds
//!   both, or when it adds `p` without deleting `q` and `q` is jointly
//!   reachable with every precondition of `a`.
//!
//! Everything that can not be shown reachable stays mutex. Since only
//! reachability is ever established (never refuted), the iteration is
//! monotone and the resulting table is sound: a reported mutex pair never
//! occurs in a reachable state.

use crate::bitset::FactSet;
use crate::strips::{ActionId, FactId, Task};

#[derive(Clone, Debug)]
pub struct InconsistencyTable {
    reached: FactSet,
    /// Row `x` holds every fact `y` shown to co-occur with `x`.
    compatible: Vec<FactSet>,
    admitted: Vec<bool>,
}

impl InconsistencyTable {
    /// True only if no reachable state contains both facts.
    pub fn query(&self, x: FactId, y: FactId) -> bool {
        if !self.reached.contains(x) || !self.reached.contains(y) {
            return true;
        }
        x != y && !self.compatible[x.index()].contains(y)
    }

    pub fn fact_reached(&self, f: FactId) -> bool {
        self.reached.contains(f)
    }

    pub fn reached_facts(&self) -> &FactSet {
        &self.reached
    }

    pub fn action_admitted(&self, a: ActionId) -> bool {
        self.admitted[a.index()]
    }

    /// All mutex pairs `(x, y)` with `x < y` among reached facts.
    pub fn pairs(&self) -> Vec<(FactId, FactId)> {
        let facts: Vec<FactId> = self.reached.iter().collect();
        let mut out = Vec::new();
        for (i, &x) in facts.iter().enumerate() {
            for &y in &facts[i + 1..] {
                if self.query(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// True iff the set holds no mutex pair (and only reached facts).
    pub fn consistent(&self, set: &FactSet) -> bool {
        let facts: Vec<FactId> = set.iter().collect();
        facts.iter().enumerate().all(|(i, &x)| {
            self.reached.contains(x) && facts[i + 1..].iter().all(|&y| !self.query(x, y))
        })
    }
}

pub fn compute_mutexes(t: &Task) -> InconsistencyTable {
    let n = t.num_facts();
    let mut reached = t.init().clone();
    let mut compatible = vec![FactSet::new(); n];
    for x in t.init().iter() {
        compatible[x.index()] = t.init().clone();
    }
    let mut admitted = vec![false; t.num_actions()];

    let mut changed = true;
    while changed {
        changed = false;
        for (i, a) in t.actions().iter().enumerate() {
            if !admitted[i] {
                if !a.pre_set.is_subset(&reached) {
                    continue;
                }
                let pre_ok = a
                    .pre
                    .iter()
                    .all(|&r| a.pre_set.is_subset(&compatible[r.index()]));
                if !pre_ok {
                    continue;
                }
                admitted[i] = true;
                changed = true;
            }
            let added = a.add_set.difference(&a.del_set);
            if added.is_empty() {
                continue;
            }
            // Facts that may persist through `a`: reached, compatible with all
            // preconditions, untouched by the effects.
            let mut persist = reached.clone();
            for &r in &a.pre {
                persist.intersect_with(&compatible[r.index()]);
            }
            persist.difference_with(&a.add_set);
            persist.difference_with(&a.del_set);
            let mut partners = persist;
            partners.union_with(&added);
            for p in added.iter() {
                if reached.insert(p) {
                    changed = true;
                }
                let row = &mut compatible[p.index()];
                if !partners.is_subset(row) {
                    row.union_with(&partners);
                    changed = true;
                }
            }
            for q in partners.iter() {
                let row = &mut compatible[q.index()];
                if !added.is_subset(row) {
                    row.union_with(&added);
                    changed = true;
                }
            }
        }
    }
    InconsistencyTable {
        reached,
        compatible,
        admitted,
    }
}
