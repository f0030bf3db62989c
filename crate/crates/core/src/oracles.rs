//! Exact deciders for landmarks and orders on tasks whose reachable state
//! space can be enumerated.
//!
//! Every quantification over action sequences is reduced to reachability in
//! the explicit transition graph, sometimes in a product with a small
//! bookkeeping automaton. The comments on each query sketch why the
//! reduction is exact.

use std::collections::{HashMap, VecDeque};

use crate::bitset::FactSet;
use crate::error::OracleError;
use crate::exec::Execution;
use crate::strips::{ActionId, FactId, Plan, State, Task};

pub const DEFAULT_CAP: usize = 200_000;

/// The reachable states of a task with all transitions between them.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<State>,
    index: HashMap<State, u32>,
    succ: Vec<Vec<(ActionId, u32)>>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn contains(&self, s: &State) -> bool {
        self.index.contains_key(s)
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, i: usize) -> &[(ActionId, u32)] {
        &self.succ[i]
    }
}

/// Breadth-first closure of the initial state.
pub fn enumerate(t: &Task, cap: usize) -> Result<StateSpace, OracleError> {
    let mut space = StateSpace {
        states: vec![t.init().clone()],
        index: HashMap::from([(t.init().clone(), 0)]),
        succ: Vec::new(),
    };
    let mut i = 0;
    while i < space.states.len() {
        let mut out = Vec::new();
        for a in t.action_ids() {
            let Some(next) = t.action(a).apply_to(&space.states[i]) else {
                continue;
            };
            let j = match space.index.get(&next) {
                Some(&j) => j,
                None => {
                    if space.states.len() >= cap {
                        return Err(OracleError::CapExceeded { cap });
                    }
                    let j = space.states.len() as u32;
                    space.index.insert(next.clone(), j);
                    space.states.push(next);
                    j
                }
            };
            out.push((a, j));
        }
        space.succ.push(out);
        i += 1;
    }
    Ok(space)
}

/// Outcome of the reasonable-order check, split into its two parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReasonableCheck {
    pub aftermath: bool,
    pub deletes: bool,
    /// No state was reached where `L'` was added before `L`; both parts hold vacuously.
    pub degenerate: bool,
}

impl ReasonableCheck {
    pub fn holds(&self) -> bool {
        self.aftermath && self.deletes
    }
}

/// Exact oracles over one enumerated state space.
pub struct Oracle<'t> {
    t: &'t Task,
    space: StateSpace,
}

impl<'t> Oracle<'t> {
    pub fn new(t: &'t Task, cap: usize) -> Result<Self, OracleError> {
        Ok(Oracle {
            t,
            space: enumerate(t, cap)?,
        })
    }

    pub fn task(&self) -> &Task {
        self.t
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Search from `sources` along transitions accepted by `follow`; returns
    /// the visited flags.
    fn reach(&self, sources: &[u32], follow: impl Fn(u32, ActionId, u32) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.space.len()];
        let mut queue: VecDeque<u32> = VecDeque::new();
        for &s in sources {
            if !seen[s as usize] {
                seen[s as usize] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &(a, n) in &self.space.succ[s as usize] {
                if !seen[n as usize] && follow(s, a, n) {
                    seen[n as usize] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    pub fn solvable(&self) -> bool {
        self.space.states.iter().any(|s| self.t.is_goal_state(s))
    }

    /// `l` is a landmark iff no goal state is reachable without ever applying
    /// an action that adds `l`: removing the adders keeps exactly the
    /// transitions whose action does not add `l`, and every solution of the
    /// reduced task is one avoiding `l` after the initial state.
    pub fn landmark(&self, l: FactId) -> bool {
        let t = self.t;
        if t.init().contains(l) || t.goal().contains(l) {
            return true;
        }
        if !self.solvable() {
            log::warn!("landmark query on an unsolvable task: every fact is a landmark");
            return true;
        }
        let seen = self.reach(&[0], |_, a, _| !t.action(a).add_set.contains(l));
        !seen
            .iter()
            .zip(&self.space.states)
            .any(|(&v, s)| v && t.is_goal_state(s))
    }

    /// Every applicable sequence ending in a state with `lp` passes through a
    /// state with `l` right before: checking each reachable transition whose
    /// target contains `lp` is the same quantification.
    pub fn necessary(&self, l: FactId, lp: FactId) -> bool {
        if self.t.init().contains(lp) {
            return false;
        }
        self.space.succ.iter().enumerate().all(|(s, out)| {
            out.iter().all(|&(_, n)| {
                !self.space.states[n as usize].contains(lp) || self.space.states[s].contains(l)
            })
        })
    }

    /// Sequences that make `lp` true for the first time are paths through
    /// `lp`-free states followed by one transition into an `lp`-state, so the
    /// facts that must precede `lp` are the intersection of the sources of
    /// those transitions. `None` when `lp` is initially true.
    pub fn greedy_necessary_predecessors(&self, lp: FactId) -> Option<FactSet> {
        if self.t.init().contains(lp) {
            return None;
        }
        let states = &self.space.states;
        let free = self.reach(&[0], |_, _, n| !states[n as usize].contains(lp));
        let mut shared: Option<FactSet> = None;
        for (s, out) in self.space.succ.iter().enumerate() {
            if !free[s] || states[s].contains(lp) {
                continue;
            }
            if out.iter().any(|&(_, n)| states[n as usize].contains(lp)) {
                match &mut shared {
                    Some(acc) => acc.intersect_with(&states[s]),
                    None => shared = Some(states[s].clone()),
                }
            }
        }
        Some(shared.unwrap_or_else(|| self.t.fact_ids().collect()))
    }

    pub fn greedy_necessary(&self, l: FactId, lp: FactId) -> bool {
        self.greedy_necessary_predecessors(lp)
            .is_some_and(|pre| pre.contains(l))
    }

    /// `greedy_necessary_predecessors` for every fact.
    pub fn greedy_necessary_table(&self, exec: Execution) -> Vec<Option<FactSet>> {
        let facts: Vec<FactId> = self.t.fact_ids().collect();
        exec.map(&facts, |&lp| self.greedy_necessary_predecessors(lp))
    }

    /// Indices of the states where `lp` was just added while `l` has never
    /// been true.
    fn added_before(&self, l: FactId, lp: FactId) -> Vec<u32> {
        let states = &self.space.states;
        if states[0].contains(l) {
            return Vec::new();
        }
        let free = self.reach(&[0], |_, _, n| !states[n as usize].contains(l));
        let mut out = Vec::new();
        let mut marked = vec![false; states.len()];
        for (s, succ) in self.space.succ.iter().enumerate() {
            if !free[s] {
                continue;
            }
            for &(a, n) in succ {
                let n = n as usize;
                if !states[n].contains(l) && self.t.action(a).add_set.contains(lp) && !marked[n] {
                    marked[n] = true;
                    out.push(n as u32);
                }
            }
        }
        out
    }

    /// Decides the aftermath part and the deletion part separately.
    ///
    /// Aftermath: a violating plan from `s` reaches a goal state without ever
    /// having `l` at some step `i ≥ 1` followed by `lp` at some `j ≥ i`. A
    /// three-phase product (no `l` yet / `l` seen / satisfied) turns this into
    /// reachability of a goal state in a phase other than "satisfied"; the
    /// start pair counts, covering the empty plan.
    ///
    /// Deletion: a violating sequence from `s` reaches `l` using only actions
    /// that do not delete `lp`.
    pub fn reasonable_check(&self, l: FactId, lp: FactId) -> ReasonableCheck {
        let sources = self.added_before(l, lp);
        if sources.is_empty() {
            return ReasonableCheck {
                aftermath: true,
                deletes: true,
                degenerate: true,
            };
        }
        let t = self.t;
        let states = &self.space.states;
        let n = states.len();

        let mut seen = vec![[false; 3]; n];
        let mut queue: VecDeque<(u32, u8)> = VecDeque::new();
        for &s in &sources {
            seen[s as usize][0] = true;
            queue.push_back((s, 0));
        }
        let mut aftermath = true;
        while let Some((s, phase)) = queue.pop_front() {
            if phase != 2 && t.is_goal_state(&states[s as usize]) {
                aftermath = false;
                break;
            }
            for &(_, m) in &self.space.succ[s as usize] {
                let next = &states[m as usize];
                let next_phase = match phase {
                    0 if next.contains(l) && next.contains(lp) => 2,
                    0 if next.contains(l) => 1,
                    1 if next.contains(lp) => 2,
                    p => p,
                };
                if !seen[m as usize][next_phase as usize] {
                    seen[m as usize][next_phase as usize] = true;
                    queue.push_back((m, next_phase));
                }
            }
        }

        let kept = self.reach(&sources, |_, a, _| !t.action(a).del_set.contains(lp));
        let deletes = !kept
            .iter()
            .zip(states)
            .any(|(&v, s)| v && s.contains(l));

        ReasonableCheck {
            aftermath,
            deletes,
            degenerate: false,
        }
    }

    pub fn reasonable(&self, l: FactId, lp: FactId) -> bool {
        self.reasonable_check(l, lp).holds()
    }

    /// No reachable state contains both facts.
    pub fn inconsistent(&self, x: FactId, y: FactId) -> bool {
        !self
            .space
            .states
            .iter()
            .any(|s| s.contains(x) && s.contains(y))
    }

    /// For each fact, the facts it co-occurs with in some reachable state.
    pub fn co_occurrence(&self, exec: Execution) -> Vec<FactSet> {
        let facts: Vec<FactId> = self.t.fact_ids().collect();
        exec.map(&facts, |&x| {
            let mut row = FactSet::new();
            for s in self.space.states.iter().filter(|s| s.contains(x)) {
                row.union_with(s);
            }
            row
        })
    }

    /// All applicable action sequences of length at most `max_len` that end in
    /// a goal state.
    pub fn plans(&self, max_len: usize) -> Vec<Plan> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.extend_plans(0, max_len, &mut prefix, &mut out);
        out
    }

    fn extend_plans(&self, s: u32, budget: usize, prefix: &mut Vec<ActionId>, out: &mut Vec<Plan>) {
        if self.t.is_goal_state(&self.space.states[s as usize]) {
            out.push(Plan(prefix.clone()));
        }
        if budget == 0 {
            return;
        }
        for &(a, n) in &self.space.succ[s as usize] {
            prefix.push(a);
            self.extend_plans(n, budget - 1, prefix, out);
            prefix.pop();
        }
    }
}

pub fn oracle_landmark(t: &Task, l: FactId, cap: usize) -> Result<bool, OracleError> {
    Ok(Oracle::new(t, cap)?.landmark(l))
}

pub fn oracle_n(t: &Task, l: FactId, lp: FactId, cap: usize) -> Result<bool, OracleError> {
    Ok(Oracle::new(t, cap)?.necessary(l, lp))
}

pub fn oracle_gn(t: &Task, l: FactId, lp: FactId, cap: usize) -> Result<bool, OracleError> {
    Ok(Oracle::new(t, cap)?.greedy_necessary(l, lp))
}

pub fn oracle_reasonable(t: &Task, l: FactId, lp: FactId, cap: usize) -> Result<bool, OracleError> {
    Ok(Oracle::new(t, cap)?.reasonable(l, lp))
}

pub fn oracle_inconsistent(t: &Task, x: FactId, y: FactId, cap: usize) -> Result<bool, OracleError> {
    Ok(Oracle::new(t, cap)?.inconsistent(x, y))
}

pub fn enumerate_plans(t: &Task, max_len: usize, cap: usize) -> Result<Vec<Plan>, OracleError> {
    Ok(Oracle::new(t, cap)?.plans(max_len))
}
