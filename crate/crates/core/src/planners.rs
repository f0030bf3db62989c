//! Forward state-space planners used as base planners by the control loop.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::grounding::{write_domain, write_problem, PropositionalNames};
use crate::rpg::relaxed_plan_heuristic;
use crate::strips::{ActionId, Atom, Plan, State, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub time: Option<Duration>,
    pub nodes: Option<usize>,
    /// Absolute cutoff shared by several calls.
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            time: Some(Duration::from_secs(60)),
            nodes: Some(1_000_000),
            deadline: None,
        }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits {
            time: None,
            nodes: None,
            deadline: None,
        }
    }

    /// The earlier of the per-call time limit (counted from `start`) and the deadline.
    pub fn cutoff(&self, start: Instant) -> Option<Instant> {
        let own = self.time.map(|d| start + d);
        match (own, self.deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Plan(Plan),
    ProvedUnsolvable,
    ResourceExhausted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannerResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

impl PlannerResult {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }
}

pub trait BasePlanner: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, t: &Task, limits: &Limits) -> PlannerResult;
}

/// Search nodes stored once; plans are read back through parent links.
struct Nodes {
    states: Vec<State>,
    parent: Vec<Option<(u32, ActionId)>>,
    seen: HashMap<State, u32>,
}

impl Nodes {
    fn new(root: State) -> Self {
        Nodes {
            seen: HashMap::from([(root.clone(), 0)]),
            states: vec![root],
            parent: vec![None],
        }
    }

    /// Returns the new node index, or `None` for a duplicate.
    fn insert(&mut self, s: State, from: u32, a: ActionId) -> Option<u32> {
        if self.seen.contains_key(&s) {
            return None;
        }
        let i = self.states.len() as u32;
        self.seen.insert(s.clone(), i);
        self.states.push(s);
        self.parent.push(Some((from, a)));
        Some(i)
    }

    fn plan_to(&self, mut i: u32) -> Plan {
        let mut steps = Vec::new();
        while let Some((p, a)) = self.parent[i as usize] {
            steps.push(a);
            i = p;
        }
        steps.reverse();
        Plan(steps)
    }
}

struct Budget {
    start: Instant,
    cutoff: Option<Instant>,
    nodes: Option<usize>,
}

impl Budget {
    fn new(limits: &Limits) -> Self {
        let start = Instant::now();
        Budget {
            start,
            cutoff: limits.cutoff(start),
            nodes: limits.nodes,
        }
    }

    fn exhausted(&self, expanded: usize) -> bool {
        if self.nodes.is_some_and(|n| expanded >= n) {
            return true;
        }
        expanded.is_multiple_of(256) && self.cutoff.is_some_and(|c| Instant::now() >= c)
    }

    fn finish(&self, outcome: Outcome, expanded: usize, generated: usize) -> PlannerResult {
        PlannerResult {
            outcome,
            stats: SearchStats {
                expanded,
                generated,
                elapsed: self.start.elapsed(),
            },
        }
    }
}

/// Breadth-first search with duplicate detection; returns shortest plans.
pub fn bfs_plan(t: &Task, limits: &Limits) -> PlannerResult {
    let budget = Budget::new(limits);
    if t.is_goal_state(t.init()) {
        return budget.finish(Outcome::Plan(Plan::default()), 0, 0);
    }
    let mut nodes = Nodes::new(t.init().clone());
    let (mut expanded, mut generated) = (0, 0);
    let mut next = 0usize;
    while next < nodes.states.len() {
        if budget.exhausted(expanded) {
            return budget.finish(Outcome::ResourceExhausted, expanded, generated);
        }
        let i = next as u32;
        next += 1;
        expanded += 1;
        for a in t.action_ids() {
            let Some(succ) = t.action(a).apply_to(&nodes.states[i as usize]) else {
                continue;
            };
            generated += 1;
            let goal = t.is_goal_state(&succ);
            if let Some(j) = nodes.insert(succ, i, a) {
                if goal {
                    return budget.finish(Outcome::Plan(nodes.plan_to(j)), expanded, generated);
                }
            }
        }
    }
    budget.finish(Outcome::ProvedUnsolvable, expanded, generated)
}

/// Greedy best-first search on the relaxed-plan heuristic. States the
/// heuristic proves dead are pruned; ties go to the earlier inserted node.
pub fn gbfs_plan(t: &Task, limits: &Limits) -> PlannerResult {
    let budget = Budget::new(limits);
    if t.is_goal_state(t.init()) {
        return budget.finish(Outcome::Plan(Plan::default()), 0, 0);
    }
    let Some(h0) = relaxed_plan_heuristic(t, t.init()) else {
        return budget.finish(Outcome::ProvedUnsolvable, 0, 0);
    };
    let mut nodes = Nodes::new(t.init().clone());
    let mut open = BinaryHeap::new();
    open.push(Reverse((h0, 0u32)));
    let (mut expanded, mut generated) = (0, 0);
    while let Some(Reverse((_, i))) = open.pop() {
        if budget.exhausted(expanded) {
            return budget.finish(Outcome::ResourceExhausted, expanded, generated);
        }
        expanded += 1;
        for a in t.action_ids() {
            let Some(succ) = t.action(a).apply_to(&nodes.states[i as usize]) else {
                continue;
            };
            generated += 1;
            if nodes.seen.contains_key(&succ) {
                continue;
            }
            let goal = t.is_goal_state(&succ);
            let h = if goal { Some(0) } else { relaxed_plan_heuristic(t, &succ) };
            let j = nodes.insert(succ, i, a).expect("checked for duplicates");
            if goal {
                return budget.finish(Outcome::Plan(nodes.plan_to(j)), expanded, generated);
            }
            if let Some(h) = h {
                open.push(Reverse((h, j)));
            }
        }
    }
    budget.finish(Outcome::ProvedUnsolvable, expanded, generated)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Bfs;

impl BasePlanner for Bfs {
    fn name(&self) -> &str {
        "bfs"
    }

    fn solve(&self, t: &Task, limits: &Limits) -> PlannerResult {
        bfs_plan(t, limits)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Gbfs;

impl BasePlanner for Gbfs {
    fn name(&self) -> &str {
        "gbfs"
    }

    fn solve(&self, t: &Task, limits: &Limits) -> PlannerResult {
        gbfs_plan(t, limits)
    }
}

/// Runs an external program on a propositional PDDL rendering of the task.
///
/// The program is started in a fresh working directory as
/// `<program> <args...> domain.pddl problem.pddl plan.txt`; exit code 0 means a
/// plan was written to `plan.txt`, one action `(name)` per line.
#[derive(Clone, Debug)]
pub struct ExternalPlanner {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// Parent directory for the per-call working directories.
    pub scratch: Option<PathBuf>,
}

impl ExternalPlanner {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalPlanner {
            program: program.into(),
            args: Vec::new(),
            scratch: None,
        }
    }

    fn run(&self, t: &Task, limits: &Limits) -> Result<Option<Plan>, crate::error::Error> {
        use crate::error::Error;
        let dir = match &self.scratch {
            Some(p) => tempfile::Builder::new().prefix("lmplan-").tempdir_in(p)?,
            None => tempfile::Builder::new().prefix("lmplan-").tempdir()?,
        };
        let names = PropositionalNames::new(t);
        std::fs::write(dir.path().join("domain.pddl"), write_domain(t, &names))?;
        std::fs::write(dir.path().join("problem.pddl"), write_problem(t, &names))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .args(["domain.pddl", "problem.pddl", "plan.txt"])
            .current_dir(dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start {}: {e}", self.program.display())))?;
        let cutoff = limits.cutoff(Instant::now());
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if cutoff.is_some_and(|c| Instant::now() >= c) {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(None);
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        if !status.success() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(dir.path().join("plan.txt"))?;
        let by_name: HashMap<&str, ActionId> = names
            .actions
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), ActionId(i as u32)))
            .collect();
        let mut steps = Vec::new();
        for line in text.lines() {
            let line = line.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let atom: Atom = line.parse()?;
            let id = if atom.args.is_empty() {
                by_name.get(atom.predicate.as_str()).copied()
            } else {
                None
            }
            .or_else(|| t.action_by_name(&atom))
            .ok_or_else(|| Error::External(format!("unknown action in plan: {line}")))?;
            steps.push(id);
        }
        let plan = Plan(steps);
        if !t.validate_plan(&plan) {
            return Err(Error::External("returned plan does not solve the task".into()));
        }
        Ok(Some(plan))
    }
}

impl BasePlanner for ExternalPlanner {
    fn name(&self) -> &str {
        "external"
    }

    fn solve(&self, t: &Task, limits: &Limits) -> PlannerResult {
        let start = Instant::now();
        let outcome = match self.run(t, limits) {
            Ok(Some(plan)) => Outcome::Plan(plan),
            Ok(None) => Outcome::ResourceExhausted,
            Err(e) => {
                log::warn!("external planner failed: {e}");
                Outcome::ResourceExhausted
            }
        };
        PlannerResult {
            outcome,
            stats: SearchStats {
                elapsed: start.elapsed(),
                ..Default::default()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::strips::TaskBuilder;

    #[test]
    fn bfs_roadmap_shortest() {
        let t = fixtures::roadmap();
        let r = bfs_plan(&t, &Limits::default());
        let p = r.plan().unwrap();
        assert_eq!(p.len(), 2);
        assert!(t.validate_plan(p));
    }

    #[test]
    fn gbfs_roadmap_valid() {
        let t = fixtures::roadmap();
        let r = gbfs_plan(&t, &Limits::default());
        let p = r.plan().unwrap();
        assert!(p.len() <= 3 && t.validate_plan(p));
    }

    #[test]
    fn goal_in_init_gives_empty_plan() {
        let t = fixtures::four_blocks();
        let t = t.with_init_and_goal(t.init().clone(), t.init().clone());
        assert_eq!(bfs_plan(&t, &Limits::default()).plan(), Some(&Plan::default()));
        assert_eq!(gbfs_plan(&t, &Limits::default()).plan(), Some(&Plan::default()));
    }

    #[test]
    fn unsolvable_is_proved() {
        let mut b = TaskBuilder::new();
        b.init(&["a"]).goal(&["c"]);
        b.action("ab", &["a"], &["b"], &["a"]);
        b.action("bc", &["a", "b"], &["c"], &[]);
        let t = b.build();
        assert_eq!(bfs_plan(&t, &Limits::default()).outcome, Outcome::ProvedUnsolvable);
        let mut b = TaskBuilder::new();
        b.init(&["a"]).goal(&["z"]);
        b.action("ab", &["a"], &["b"], &[]);
        b.fact("z");
        let t = b.build();
        assert_eq!(bfs_plan(&t, &Limits::default()).outcome, Outcome::ProvedUnsolvable);
        assert_eq!(gbfs_plan(&t, &Limits::default()).outcome, Outcome::ProvedUnsolvable);
    }

    #[test]
    fn node_limit_exhausts() {
        let t = fixtures::four_blocks();
        let limits = Limits {
            nodes: Some(3),
            ..Limits::default()
        };
        assert_eq!(bfs_plan(&t, &limits).outcome, Outcome::ResourceExhausted);
    }

    #[test]
    fn four_blocks_both_planners() {
        let t = fixtures::four_blocks();
        let b = bfs_plan(&t, &Limits::default());
        let g = gbfs_plan(&t, &Limits::default());
        let (pb, pg) = (b.plan().unwrap(), g.plan().unwrap());
        assert!(t.validate_plan(pb) && t.validate_plan(pg));
        assert!(pb.len() <= pg.len());
        assert_eq!(pb.len(), 6);
    }
}
