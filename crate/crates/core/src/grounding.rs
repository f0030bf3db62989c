//! Instantiating operator schemas over the problem's objects.
//!
//! Predicates that no operator adds or deletes are static. Static atoms are
//! checked against the initial state while parameters are bound and then
//! dropped, so the grounded task only talks about fluents (plus any static goal
//! atom, which is kept so that the goal stays expressible). Instantiations are
//! pruned twice: first by delete-relaxed reachability, then by the persistent
//! mutex fixpoint, which removes actions whose preconditions can never hold
//! together (e.g. `stack(a a)`).

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::bitset::FactSet;
use crate::error::PddlError;
use crate::mutex::compute_mutexes;
use crate::pddl::{check_problem, ActionSchema, AtomAst, DomainAst, ProblemAst};
use crate::strips::{Action, Atom, FactId, Task};

struct Ground {
    name: Atom,
    pre: Vec<Atom>,
    add: Vec<Atom>,
    del: Vec<Atom>,
}

fn instantiate(atom: &AtomAst, binding: &HashMap<&str, &str>) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        args: atom.args.iter().map(|a| binding[a.as_str()].to_string()).collect(),
    }
}

fn ground_schema(
    schema: &ActionSchema,
    candidates: &[Vec<&str>],
    fluent: &HashSet<&str>,
    statics: &HashSet<Atom>,
    out: &mut Vec<Ground>,
) {
    // Static preconditions are checked as soon as their last variable is bound.
    let mut checks: Vec<Vec<&AtomAst>> = vec![Vec::new(); schema.params.len() + 1];
    for atom in schema.pre.iter().filter(|a| !fluent.contains(a.predicate.as_str())) {
        let depth = atom
            .args
            .iter()
            .map(|v| schema.params.iter().position(|p| &p.name == v).unwrap() + 1)
            .max()
            .unwrap_or(0);
        checks[depth].push(atom);
    }
    let mut binding: HashMap<&str, &str> = HashMap::new();
    let ok = |binding: &HashMap<&str, &str>, depth: usize| {
        checks[depth]
            .iter()
            .all(|a| statics.contains(&instantiate(a, binding)))
    };
    if !ok(&binding, 0) {
        return;
    }
    fn rec<'a>(
        i: usize,
        schema: &'a ActionSchema,
        candidates: &[Vec<&'a str>],
        binding: &mut HashMap<&'a str, &'a str>,
        ok: &dyn Fn(&HashMap<&'a str, &'a str>, usize) -> bool,
        emit: &mut dyn FnMut(&HashMap<&'a str, &'a str>),
    ) {
        if i == schema.params.len() {
            emit(binding);
            return;
        }
        for &obj in &candidates[i] {
            binding.insert(schema.params[i].name.as_str(), obj);
            if ok(binding, i + 1) {
                rec(i + 1, schema, candidates, binding, ok, emit);
            }
        }
        binding.remove(schema.params[i].name.as_str());
    }
    let mut emit = |b: &HashMap<&str, &str>| {
        let inst = |atoms: &[AtomAst], keep_static: bool| -> Vec<Atom> {
            atoms
                .iter()
                .filter(|a| keep_static || fluent.contains(a.predicate.as_str()))
                .map(|a| instantiate(a, b))
                .collect()
        };
        out.push(Ground {
            name: Atom {
                predicate: schema.name.clone(),
                args: schema
                    .params
                    .iter()
                    .map(|p| b[p.name.as_str()].to_string())
                    .collect(),
            },
            pre: inst(&schema.pre, false),
            add: inst(&schema.add, true),
            del: inst(&schema.del, true),
        });
    };
    rec(0, schema, candidates, &mut binding, &ok, &mut emit);
}

/// Delete-relaxed closure: returns reached atoms and the indices of the
/// actions that became applicable.
fn relaxed_closure(init: &BTreeSet<Atom>, actions: &[Ground]) -> (BTreeSet<Atom>, Vec<usize>) {
    let mut reached = init.clone();
    let mut fired = vec![false; actions.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, a) in actions.iter().enumerate() {
            if fired[i] || !a.pre.iter().all(|p| reached.contains(p)) {
                continue;
            }
            fired[i] = true;
            changed = true;
            reached.extend(a.add.iter().cloned());
        }
    }
    let kept = (0..actions.len()).filter(|&i| fired[i]).collect();
    (reached, kept)
}

fn build_task(
    universe: &BTreeSet<Atom>,
    actions: &[&Ground],
    init: &BTreeSet<Atom>,
    goal: &[Atom],
) -> Task {
    let facts: Vec<Atom> = universe.iter().cloned().collect();
    let index: HashMap<&Atom, FactId> = facts
        .iter()
        .enumerate()
        .map(|(i, a)| (a, FactId(i as u32)))
        .collect();
    // Effects on atoms outside the universe can never matter and are dropped.
    let ids = |atoms: &[Atom]| atoms.iter().filter_map(|a| index.get(a).copied()).collect();
    let grounded = actions
        .iter()
        .map(|g| Action::new(g.name.clone(), ids(&g.pre), ids(&g.add), ids(&g.del)))
        .collect();
    let init: FactSet = init.iter().filter_map(|a| index.get(a).copied()).collect();
    let goal: FactSet = goal.iter().map(|a| index[a]).collect();
    Task::new(facts, grounded, init, goal).expect("grounded ids are in range")
}

pub fn ground(d: &DomainAst, p: &ProblemAst) -> Result<Task, PddlError> {
    check_problem(d, p)?;
    let fluent: HashSet<&str> = d
        .actions
        .iter()
        .flat_map(|a| a.add.iter().chain(&a.del))
        .map(|a| a.predicate.as_str())
        .collect();
    let literal = |a: &AtomAst| Atom {
        predicate: a.predicate.clone(),
        args: a.args.clone(),
    };
    let statics: HashSet<Atom> = p
        .init
        .iter()
        .filter(|a| !fluent.contains(a.predicate.as_str()))
        .map(literal)
        .collect();
    let init: BTreeSet<Atom> = p
        .init
        .iter()
        .map(literal)
        .filter(|a| fluent.contains(a.predicate.as_str()))
        .collect();
    let goal: Vec<Atom> = p.goal.iter().map(literal).collect();
    let mut init_with_goal_statics = init.clone();
    for g in &goal {
        if statics.contains(g) {
            init_with_goal_statics.insert(g.clone());
        }
    }

    let mut grounded = Vec::new();
    for schema in &d.actions {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|param| {
                p.objects
                    .iter()
                    .filter(|o| param.ty == "object" || o.ty == param.ty)
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        ground_schema(schema, &candidates, &fluent, &statics, &mut grounded);
    }

    let (reached, kept) = relaxed_closure(&init, &grounded);
    let mut universe = reached;
    universe.extend(init_with_goal_statics.iter().cloned());
    universe.extend(goal.iter().cloned());
    let relaxed: Vec<&Ground> = kept.iter().map(|&i| &grounded[i]).collect();
    let first = build_task(&universe, &relaxed, &init_with_goal_statics, &goal);

    let mutexes = compute_mutexes(&first);
    let admitted: Vec<usize> = kept
        .iter()
        .enumerate()
        .filter(|&(j, _)| mutexes.action_admitted(crate::strips::ActionId(j as u32)))
        .map(|(_, &i)| i)
        .collect();
    let survivors: Vec<Ground> = admitted
        .iter()
        .map(|&i| Ground {
            name: grounded[i].name.clone(),
            pre: grounded[i].pre.clone(),
            add: grounded[i].add.clone(),
            del: grounded[i].del.clone(),
        })
        .collect();
    let (reached, _) = relaxed_closure(&init, &survivors);
    let unsolvable = !goal.iter().all(|g| reached.contains(g) || init_with_goal_statics.contains(g));
    let mut universe = reached;
    universe.extend(init_with_goal_statics.iter().cloned());
    universe.extend(goal.iter().cloned());
    let refs: Vec<&Ground> = survivors.iter().collect();
    let mut task = build_task(&universe, &refs, &init_with_goal_statics, &goal);
    if unsolvable {
        task.mark_unsolvable();
    }
    Ok(task)
}

fn mangle(atom: &Atom) -> String {
    let mut s = atom.predicate.clone();
    for a in &atom.args {
        s.push('_');
        s.push_str(a);
    }
    s
}

/// Unique propositional names for every fact and action of a task.
pub struct PropositionalNames {
    pub facts: Vec<String>,
    pub actions: Vec<String>,
}

impl PropositionalNames {
    pub fn new(t: &Task) -> Self {
        fn unique(atoms: impl Iterator<Item = String>) -> Vec<String> {
            let mut seen = HashSet::new();
            atoms
                .map(|base| {
                    let mut name = base.clone();
                    let mut k = 1;
                    while !seen.insert(name.clone()) {
                        name = format!("{base}-{k}");
                        k += 1;
                    }
                    name
                })
                .collect()
        }
        PropositionalNames {
            facts: unique(t.facts().iter().map(mangle)),
            actions: unique(t.actions().iter().map(|a| mangle(&a.name))),
        }
    }
}

/// A grounded task as a propositional PDDL domain (one 0-ary predicate per
/// fact, one parameterless action per grounded action).
pub fn write_domain(t: &Task, names: &PropositionalNames) -> String {
    let mut out = String::from("(define (domain grounded)\n  (:requirements :strips)\n  (:predicates");
    for f in &names.facts {
        out.push_str(&format!(" ({f})"));
    }
    out.push_str(")\n");
    for (a, name) in t.actions().iter().zip(&names.actions) {
        let lits = |ids: &[FactId], neg: bool| -> String {
            ids.iter()
                .map(|f| {
                    let n = &names.facts[f.index()];
                    if neg {
                        format!(" (not ({n}))")
                    } else {
                        format!(" ({n})")
                    }
                })
                .collect()
        };
        out.push_str(&format!(
            "  (:action {name}\n    :parameters ()\n    :precondition (and{})\n    :effect (and{}{}))\n",
            lits(&a.pre, false),
            lits(&a.add, false),
            lits(&a.del, true)
        ));
    }
    out.push_str(")\n");
    out
}

pub fn write_problem(t: &Task, names: &PropositionalNames) -> String {
    let set = |s: &FactSet| -> String {
        s.iter()
            .map(|f| format!(" ({})", names.facts[f.index()]))
            .collect()
    };
    format!(
        "(define (problem grounded-problem)\n  (:domain grounded)\n  (:objects)\n  (:init{})\n  (:goal (and{})))\n",
        set(t.init()),
        set(t.goal())
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pddl::{parse_domain, parse_problem};

    fn two_blocks() -> Task {
        let d = parse_domain(fixtures::BLOCKSWORLD_ARM_DOMAIN).unwrap();
        let p = parse_problem(
            "(define (problem two) (:domain blocksworld-arm) (:objects a b)
              (:init (on-table a) (on-table b) (clear a) (clear b) (arm-empty))
              (:goal (on a b)))",
        )
        .unwrap();
        ground(&d, &p).unwrap()
    }

    #[test]
    fn two_block_arm_has_eight_actions() {
        let t = two_blocks();
        let mut names: Vec<String> = t.actions().iter().map(|a| a.name.to_string()).collect();
        names.sort();
        assert_eq!(
            names,
            [
                "(pick-up a)", "(pick-up b)", "(put-down a)", "(put-down b)",
                "(stack a b)", "(stack b a)", "(unstack a b)", "(unstack b a)"
            ]
        );
        assert!(!t.provably_unsolvable());
    }

    #[test]
    fn grounding_is_deterministic() {
        let (a, b) = (two_blocks(), two_blocks());
        assert_eq!(a.facts(), b.facts());
        let names = |t: &Task| t.actions().iter().map(|x| x.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
        let mut sorted = a.facts().to_vec();
        sorted.sort();
        assert_eq!(a.facts(), &sorted[..]);
    }

    #[test]
    fn roadmap_drops_static_connections() {
        let t = fixtures::roadmap();
        assert!(t.facts().iter().all(|f| f.predicate == "at"));
        assert_eq!(t.num_facts(), 5);
        assert_eq!(t.num_actions(), 10);
    }

    #[test]
    fn zero_objects_zero_actions() {
        let d = parse_domain(fixtures::BLOCKSWORLD_ARM_DOMAIN).unwrap();
        let p = parse_problem("(define (problem e) (:domain blocksworld-arm) (:objects) (:init (arm-empty)) (:goal (and)))").unwrap();
        let t = ground(&d, &p).unwrap();
        assert_eq!(t.num_actions(), 0);
        assert!(t.validate_plan(&crate::strips::Plan::default()));
    }

    #[test]
    fn unreachable_goal_is_flagged() {
        let d = parse_domain(fixtures::ROADMAP_DOMAIN).unwrap();
        let p = parse_problem("(define (problem u) (:domain roadmap) (:objects a b) (:init (at a)) (:goal (at b)))").unwrap();
        let t = ground(&d, &p).unwrap();
        assert!(t.provably_unsolvable());
        assert_eq!(t.num_actions(), 0);
    }

    #[test]
    fn type_mismatch_rejected() {
        let d = parse_domain(fixtures::LOGISTICS_DOMAIN).unwrap();
        let p = parse_problem(
            "(define (problem bad) (:domain logistics) (:objects p - package t - truck)
              (:init (in t p)) (:goal (and)))",
        )
        .unwrap();
        assert!(matches!(ground(&d, &p), Err(PddlError::TypeMismatch { .. })));
    }

    #[test]
    fn propositional_round_trip() {
        let t = fixtures::four_blocks();
        let names = PropositionalNames::new(&t);
        let d = parse_domain(&write_domain(&t, &names)).unwrap();
        let p = parse_problem(&write_problem(&t, &names)).unwrap();
        let back = ground(&d, &p).unwrap();
        assert_eq!(back.num_actions(), t.num_actions());
        assert_eq!(back.init().len(), t.init().len());
        assert_eq!(back.goal().len(), t.goal().len());
    }
}
