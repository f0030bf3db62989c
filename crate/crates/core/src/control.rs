//! Search control: hand the base planner one disjunctive subgoal at a time,
//! formed by the current leaves of the landmark graph.

use std::time::{Duration, Instant};

use crate::bitset::FactSet;
use crate::error::Error;
use crate::lgg::Lgg;
use crate::mutex::{compute_mutexes, InconsistencyTable};
use crate::planners::{BasePlanner, Limits};
use crate::strips::{Action, ActionId, Atom, FactId, Plan, State, Task};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ControlMode {
    /// Goal: the disjunction of the leaves.
    #[default]
    Disjunctive,
    /// Goal: the disjunction of the leaves plus every top-level goal reached so far.
    ConjPlusDisj,
    /// Goal: a disjunction of maximal pairwise-consistent leaf subsets.
    DnfMaxConsistent,
}

#[derive(Clone, Debug, Default)]
pub struct ControlConfig {
    pub mode: ControlMode,
    pub safety_net: bool,
    /// Limits for each base planner call; `deadline` bounds the whole run.
    pub limits: Limits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ControlOutcome {
    Solved,
    /// The base planner failed on the subgoal of this (0-based) iteration.
    SubtaskFailed(usize),
    /// The base planner failed on the final conjunctive goal.
    BasePlannerFailed,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub disjunction: FactSet,
    pub subplan: Plan,
    pub state: State,
    pub removed: FactSet,
    /// The sub-plan came from the fallback call on the original goal.
    pub safety_net: bool,
}

#[derive(Clone, Debug)]
pub struct ControlTrace {
    pub iterations: Vec<IterationRecord>,
    /// Sub-plan of the final call on the original goal, if one was made.
    pub final_subplan: Option<Plan>,
    pub plan: Plan,
    pub outcome: ControlOutcome,
    pub expanded: usize,
    pub elapsed: Duration,
}

/// A task with one extra goal fact and artificial actions achieving it.
pub struct CompiledTask {
    pub task: Task,
    pub goal_fact: FactId,
    base_actions: usize,
}

impl CompiledTask {
    pub fn is_artificial(&self, a: ActionId) -> bool {
        a.index() >= self.base_actions
    }

    /// Drops the artificial steps; the rest is a plan of the original task.
    pub fn unmap(&self, p: &Plan) -> Plan {
        Plan(p.steps().iter().copied().filter(|&a| !self.is_artificial(a)).collect())
    }
}

fn fresh_atom(t: &Task, base: &str) -> Atom {
    let mut name = base.to_string();
    let mut k = 1;
    while t.fact_id(&Atom::new(name.as_str(), &[])).is_some() {
        name = format!("{base}-{k}");
        k += 1;
    }
    Atom::new(name, &[])
}

/// Compiles "reach one of the `options` (each a conjunction), plus all of
/// `conj`" into a fresh goal fact with one artificial action per option.
pub fn compile_goal(t: &Task, s: &State, options: &[FactSet], conj: &FactSet) -> CompiledTask {
    assert!(!options.is_empty(), "a disjunctive goal needs at least one disjunct");
    let goal_atom = fresh_atom(t, "lmplan-goal");
    let goal_fact = FactId(t.num_facts() as u32);
    let actions = options
        .iter()
        .enumerate()
        .map(|(i, opt)| {
            Action::new(
                Atom::new(format!("lmplan-reach-{i}"), &[]),
                opt.iter().collect(),
                vec![goal_fact],
                Vec::new(),
            )
        })
        .collect();
    let mut goal = conj.clone();
    goal.insert(goal_fact);
    let task = t
        .extended(vec![goal_atom], actions, s.clone(), goal)
        .expect("compiled task is well formed");
    CompiledTask {
        task,
        goal_fact,
        base_actions: t.num_actions(),
    }
}

/// One artificial action `({L}, {g*}, ∅)` per disjunct.
pub fn compile_disjunctive_goal(t: &Task, s: &State, disj: &FactSet) -> CompiledTask {
    let options: Vec<FactSet> = disj.iter().map(|l| [l].into_iter().collect()).collect();
    compile_goal(t, s, &options, &FactSet::new())
}

/// Greedy first-fit partition into subsets whose members are pairwise consistent.
pub fn consistent_partition(leaves: &FactSet, m: &InconsistencyTable) -> Vec<FactSet> {
    let mut parts: Vec<FactSet> = Vec::new();
    for l in leaves.iter() {
        match parts.iter_mut().find(|p| p.iter().all(|x| !m.query(x, l))) {
            Some(p) => {
                p.insert(l);
            }
            None => parts.push([l].into_iter().collect()),
        }
    }
    parts
}

/// Nodes without incoming edges; an empty answer on a non-empty graph means
/// a cycle survived.
pub fn leaves(g: &Lgg) -> Result<FactSet, Error> {
    let l = g.leaves();
    if l.is_empty() && !g.is_empty() {
        return Err(Error::NoLeaves);
    }
    Ok(l)
}

pub fn run_control(
    t: &Task,
    mut g: Lgg,
    base: &dyn BasePlanner,
    cfg: &ControlConfig,
) -> Result<ControlTrace, Error> {
    let start = Instant::now();
    let mutexes = (cfg.mode == ControlMode::DnfMaxConsistent).then(|| compute_mutexes(t));
    let mut trace = ControlTrace {
        iterations: Vec::new(),
        final_subplan: None,
        plan: Plan::default(),
        outcome: ControlOutcome::Solved,
        expanded: 0,
        elapsed: Duration::ZERO,
    };
    for f in t.init().iter() {
        if g.contains(f) {
            g.remove_node(f);
        }
    }
    let mut s = t.init().clone();
    let mut conj = FactSet::new();

    while !g.is_empty() {
        let mut disj = leaves(&g)?;
        // Leaves already true need no planning; posing them would yield an empty sub-plan.
        let holds = disj.intersection(&s);
        if !holds.is_empty() {
            for l in holds.iter() {
                g.remove_node(l);
                if t.goal().contains(l) {
                    conj.insert(l);
                }
            }
            disj.difference_with(&holds);
            if disj.is_empty() {
                continue;
            }
        }
        let compiled = match cfg.mode {
            ControlMode::Disjunctive => compile_disjunctive_goal(t, &s, &disj),
            ControlMode::ConjPlusDisj => {
                let options: Vec<FactSet> = disj.iter().map(|l| [l].into_iter().collect()).collect();
                compile_goal(t, &s, &options, &conj)
            }
            ControlMode::DnfMaxConsistent => {
                let parts = consistent_partition(&disj, mutexes.as_ref().expect("computed for DNF"));
                compile_goal(t, &s, &parts, &FactSet::new())
            }
        };
        let result = base.solve(&compiled.task, &cfg.limits);
        trace.expanded += result.stats.expanded;
        let iteration = trace.iterations.len();
        match result.plan() {
            Some(p) => {
                let sub = compiled.unmap(p);
                s = t.result(&s, &sub)?.expect("base planner returned an applicable plan");
                let mut removed = FactSet::new();
                for &a in sub.steps() {
                    removed.union_with(&t.action(a).add_set.intersection(&disj));
                }
                for l in removed.iter() {
                    g.remove_node(l);
                    if t.goal().contains(l) {
                        conj.insert(l);
                    }
                }
                trace.plan.concat(&sub);
                trace.iterations.push(IterationRecord {
                    disjunction: disj,
                    subplan: sub,
                    state: s.clone(),
                    removed,
                    safety_net: false,
                });
            }
            None => {
                if cfg.safety_net {
                    let fallback = t.with_init_and_goal(s.clone(), t.goal().clone());
                    let r = base.solve(&fallback, &cfg.limits);
                    trace.expanded += r.stats.expanded;
                    if let Some(p) = r.plan() {
                        s = t.result(&s, p)?.expect("base planner returned an applicable plan");
                        trace.plan.concat(p);
                        trace.iterations.push(IterationRecord {
                            disjunction: disj,
                            subplan: p.clone(),
                            state: s.clone(),
                            removed: FactSet::new(),
                            safety_net: true,
                        });
                        trace.outcome = ControlOutcome::Solved;
                        trace.elapsed = start.elapsed();
                        return Ok(trace);
                    }
                }
                trace.outcome = ControlOutcome::SubtaskFailed(iteration);
                trace.elapsed = start.elapsed();
                return Ok(trace);
            }
        }
    }

    if !t.goal().is_subset(&s) {
        let last = t.with_init_and_goal(s.clone(), t.goal().clone());
        let r = base.solve(&last, &cfg.limits);
        trace.expanded += r.stats.expanded;
        match r.plan() {
            Some(p) => {
                trace.plan.concat(p);
                trace.final_subplan = Some(p.clone());
            }
            None => trace.outcome = ControlOutcome::BasePlannerFailed,
        }
    }
    trace.elapsed = start.elapsed();
    Ok(trace)
}
