//! Relaxed planning graphs: the planning graph of the task with all delete
//! lists ignored.

use crate::bitset::FactSet;
use crate::error::Error;
use crate::strips::{ActionId, FactId, State, Task};

/// Level of facts and actions that never enter the graph.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    /// Stop at the first layer containing the goal.
    GoalsFirstReached,
    /// Stop when a layer adds no new fact.
    Fixpoint,
}

#[derive(Clone, Debug)]
pub struct Rpg {
    mode: BuildMode,
    fact_level: Vec<u32>,
    action_level: Vec<u32>,
    top: u32,
}

impl Rpg {
    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    /// Index `m` of the last proposition layer.
    pub fn top(&self) -> u32 {
        self.top
    }

    pub fn fact_level(&self, f: FactId) -> u32 {
        self.fact_level[f.index()]
    }

    pub fn action_level(&self, a: ActionId) -> u32 {
        self.action_level[a.index()]
    }

    pub fn reached(&self, f: FactId) -> bool {
        self.fact_level[f.index()] != UNREACHED
    }

    /// `P_i`: facts with level at most `i`.
    pub fn prop_layer(&self, i: u32) -> FactSet {
        self.fact_level
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l <= i)
            .map(|(f, _)| FactId(f as u32))
            .collect()
    }

    /// `A_i`: actions with level at most `i`, ascending.
    pub fn action_layer(&self, i: u32) -> Vec<ActionId> {
        self.action_level
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l <= i)
            .map(|(a, _)| ActionId(a as u32))
            .collect()
    }

    /// Achievers of `f` that sit in the layer just below `f`.
    pub fn earliest_achievers<'t>(&'t self, t: &'t Task, f: FactId) -> impl Iterator<Item = ActionId> + 't {
        let lvl = self.fact_level(f);
        t.achievers(f)
            .iter()
            .copied()
            .filter(move |&a| lvl != 0 && lvl != UNREACHED && self.action_level(a) == lvl - 1)
    }
}

pub fn build_rpg(t: &Task, mode: BuildMode) -> Result<Rpg, Error> {
    build_rpg_from(t, t.init(), t.goal(), mode)
}

/// Builds the graph from an arbitrary state towards an arbitrary goal.
pub fn build_rpg_from(t: &Task, s: &State, goal: &FactSet, mode: BuildMode) -> Result<Rpg, Error> {
    let mut fact_level = vec![UNREACHED; t.num_facts()];
    let mut action_level = vec![UNREACHED; t.num_actions()];
    let mut missing: Vec<usize> = t.actions().iter().map(|a| a.pre.len()).collect();
    let mut reached = s.clone();
    let mut frontier: Vec<FactId> = s.iter().collect();
    for &f in &frontier {
        fact_level[f.index()] = 0;
    }
    let mut enabled: Vec<ActionId> = t
        .action_ids()
        .filter(|a| t.action(*a).pre.is_empty())
        .collect();
    let mut i = 0u32;
    loop {
        if mode == BuildMode::GoalsFirstReached && goal.is_subset(&reached) {
            break;
        }
        for &f in &frontier {
            for &a in t.consumers(f) {
                missing[a.index()] -= 1;
                if missing[a.index()] == 0 {
                    enabled.push(a);
                }
            }
        }
        let mut next = Vec::new();
        enabled.sort_unstable();
        for &a in &enabled {
            action_level[a.index()] = i;
            for &f in &t.action(a).add {
                if reached.insert(f) {
                    fact_level[f.index()] = i + 1;
                    next.push(f);
                }
            }
        }
        enabled.clear();
        if next.is_empty() {
            if !goal.is_subset(&reached) {
                return Err(Error::RelaxedUnsolvable);
            }
            break;
        }
        frontier = next;
        i += 1;
    }
    Ok(Rpg {
        mode,
        fact_level,
        action_level,
        top: i,
    })
}

/// True iff the delete-relaxed fixpoint over the allowed actions reaches `g` from `s`.
pub fn relaxed_solvable(t: &Task, allowed: &[bool], s: &State, g: &FactSet) -> bool {
    if g.is_subset(s) {
        return true;
    }
    let mut missing: Vec<usize> = t.actions().iter().map(|a| a.pre.len()).collect();
    let mut reached = s.clone();
    let mut queue: Vec<ActionId> = t
        .action_ids()
        .filter(|&a| allowed[a.index()] && t.action(a).pre.is_empty())
        .collect();
    let mut facts: Vec<FactId> = s.iter().collect();
    loop {
        while let Some(f) = facts.pop() {
            for &a in t.consumers(f) {
                missing[a.index()] -= 1;
                if missing[a.index()] == 0 && allowed[a.index()] {
                    queue.push(a);
                }
            }
        }
        let Some(a) = queue.pop() else { break };
        for &f in &t.action(a).add {
            if reached.insert(f) {
                facts.push(f);
            }
        }
    }
    g.is_subset(&reached)
}

/// Length of a relaxed plan for `g`, or `None` when `g` is not reached in the graph.
pub fn extract_relaxed_plan(t: &Task, rpg: &Rpg, g: &FactSet) -> Option<usize> {
    if g.iter().any(|f| !rpg.reached(f)) {
        return None;
    }
    let top = g.iter().map(|f| rpg.fact_level(f)).max().unwrap_or(0) as usize;
    let mut goals: Vec<Vec<FactId>> = vec![Vec::new(); top + 1];
    let mut queued = FactSet::new();
    for f in g.iter() {
        if rpg.fact_level(f) > 0 {
            goals[rpg.fact_level(f) as usize].push(f);
            queued.insert(f);
        }
    }
    let mut achieved = FactSet::new();
    let mut chosen = vec![false; t.num_actions()];
    let mut count = 0;
    for i in (1..=top).rev() {
        let layer = std::mem::take(&mut goals[i]);
        for f in layer {
            if achieved.contains(f) {
                continue;
            }
            let a = t
                .achievers(f)
                .iter()
                .copied()
                .find(|&a| rpg.action_level(a) == i as u32 - 1)
                .expect("a fact at level i has an achiever at level i-1");
            if !chosen[a.index()] {
                chosen[a.index()] = true;
                count += 1;
            }
            for &p in &t.action(a).add {
                achieved.insert(p);
            }
            for &p in &t.action(a).pre {
                let lvl = rpg.fact_level(p);
                if lvl > 0 && queued.insert(p) {
                    goals[lvl as usize].push(p);
                }
            }
        }
    }
    Some(count)
}

/// Relaxed-plan heuristic value of `s`; `None` when the goal is relaxed-unreachable.
pub fn relaxed_plan_heuristic(t: &Task, s: &State) -> Option<usize> {
    let rpg = build_rpg_from(t, s, t.goal(), BuildMode::GoalsFirstReached).ok()?;
    extract_relaxed_plan(t, &rpg, t.goal())
}
