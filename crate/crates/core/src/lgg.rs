//! The landmark generation graph: candidate generation by backchaining
//! through shared preconditions, one-step lookahead, and verification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bitset::FactSet;
use crate::exec::Execution;
use crate::rpg::{relaxed_solvable, Rpg, UNREACHED};
use crate::strips::{ActionId, FactId, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "gn")]
    GreedyNecessary,
    #[serde(rename = "ln")]
    LookaheadNecessary,
    #[serde(rename = "r")]
    Reasonable,
    #[serde(rename = "rO")]
    ObedientReasonable,
}

impl EdgeKind {
    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::GreedyNecessary => "gn",
            EdgeKind::LookaheadNecessary => "ln",
            EdgeKind::Reasonable => "r",
            EdgeKind::ObedientReasonable => "rO",
        }
    }

    pub fn is_necessary(self) -> bool {
        matches!(self, EdgeKind::GreedyNecessary | EdgeKind::LookaheadNecessary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: FactId,
    pub to: FactId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lgg {
    nodes: FactSet,
    verified: FactSet,
    edges: BTreeSet<Edge>,
}

impl Lgg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &FactSet {
        &self.nodes
    }

    pub fn contains(&self, f: FactId) -> bool {
        self.nodes.contains(f)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_verified(&self, f: FactId) -> bool {
        self.verified.contains(f)
    }

    pub fn set_verified(&mut self, f: FactId) {
        if self.nodes.contains(f) {
            self.verified.insert(f);
        }
    }

    pub fn add_node(&mut self, f: FactId) -> bool {
        self.nodes.insert(f)
    }

    /// Removes the node and every incident edge.
    pub fn remove_node(&mut self, f: FactId) {
        self.nodes.remove(f);
        self.verified.remove(f);
        self.edges.retain(|e| e.from != f && e.to != f);
    }

    /// Inserts an edge between existing, distinct nodes. Idempotent.
    pub fn add_edge(&mut self, from: FactId, to: FactId, kind: EdgeKind) -> bool {
        assert!(from != to, "self-edges are not allowed");
        assert!(self.nodes.contains(from) && self.nodes.contains(to));
        self.edges.insert(Edge { from, to, kind })
    }

    pub fn remove_edge(&mut self, e: &Edge) -> bool {
        self.edges.remove(e)
    }

    pub fn has_edge(&self, from: FactId, to: FactId, kind: EdgeKind) -> bool {
        self.edges.contains(&Edge { from, to, kind })
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn predecessors(&self, f: FactId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == f)
    }

    pub fn successors(&self, f: FactId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == f)
    }

    /// Nodes without incoming edges.
    pub fn leaves(&self) -> FactSet {
        let mut out = self.nodes.clone();
        for e in &self.edges {
            out.remove(e.to);
        }
        out
    }

    /// Nodes reachable from `from` (including itself) along edges of the given kinds.
    pub fn reachable_from(&self, from: FactId, kinds: &[EdgeKind]) -> FactSet {
        let adj = self.adjacency(kinds);
        let mut seen = FactSet::new();
        seen.insert(from);
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            for &y in adj.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen
    }

    pub(crate) fn adjacency(&self, kinds: &[EdgeKind]) -> BTreeMap<FactId, Vec<FactId>> {
        let mut adj: BTreeMap<FactId, Vec<FactId>> = BTreeMap::new();
        for e in self.edges.iter().filter(|e| kinds.contains(&e.kind)) {
            adj.entry(e.from).or_default().push(e.to);
        }
        adj
    }

    pub fn to_dot(&self, t: &Task) -> String {
        let mut out = String::from("digraph lgg {\n  rankdir=BT;\n  node [shape=box];\n");
        for f in self.nodes.iter() {
            let style = if self.is_verified(f) { "" } else { ", style=dashed" };
            let _ = writeln!(out, "  n{} [label=\"{}\"{}];", f.0, t.fact_name(f), style);
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::GreedyNecessary => "style=solid",
                EdgeKind::LookaheadNecessary => "style=dashed",
                EdgeKind::Reasonable => "style=dotted",
                EdgeKind::ObedientReasonable => "style=dotted, color=gray",
            };
            let _ = writeln!(
                out,
                "  n{} -> n{} [{}, label=\"{}\"];",
                e.from.0,
                e.to.0,
                style,
                e.kind.label()
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self, t: &Task) -> String {
        let doc = LggDoc {
            nodes: self
                .nodes
                .iter()
                .map(|f| NodeDoc {
                    id: f.0,
                    name: t.fact_name(f),
                    verified: self.is_verified(f),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    from: e.from.0,
                    to: e.to.0,
                    kind: e.kind,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("LGG documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Lgg, serde_json::Error> {
        let doc: LggDoc = serde_json::from_str(text)?;
        let mut g = Lgg::new();
        for n in &doc.nodes {
            g.add_node(FactId(n.id));
            if n.verified {
                g.set_verified(FactId(n.id));
            }
        }
        for e in &doc.edges {
            g.nodes.insert(FactId(e.from));
            g.nodes.insert(FactId(e.to));
            g.edges.insert(Edge {
                from: FactId(e.from),
                to: FactId(e.to),
                kind: e.kind,
            });
        }
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: u32,
    name: String,
    verified: bool,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: u32,
    to: u32,
    kind: EdgeKind,
}

#[derive(Serialize, Deserialize)]
struct LggDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

struct Backchainer<'a> {
    t: &'a Task,
    rpg: &'a Rpg,
    level_test: bool,
    lookahead: bool,
    g: Lgg,
    queue: VecDeque<FactId>,
}

impl<'a> Backchainer<'a> {
    fn intersect_pre(&self, actions: &[ActionId]) -> FactSet {
        let mut it = actions.iter();
        let Some(&first) = it.next() else {
            return FactSet::new();
        };
        let mut shared = self.t.action(first).pre_set.clone();
        for &a in it {
            shared.intersect_with(&self.t.action(a).pre_set);
        }
        shared
    }

    fn enqueue(&mut self, f: FactId) {
        if self.g.add_node(f) {
            self.queue.push_back(f);
        }
    }

    fn run(&mut self) {
        while let Some(lp) = self.queue.pop_front() {
            self.necessary(lp);
            if self.lookahead {
                self.look_ahead(lp);
            }
        }
    }

    fn necessary(&mut self, lp: FactId) {
        if self.t.init().contains(lp) {
            return;
        }
        let achievers: Vec<ActionId> = if self.level_test {
            self.rpg.earliest_achievers(self.t, lp).collect()
        } else {
            self.t.achievers(lp).to_vec()
        };
        for l in self.intersect_pre(&achievers).iter() {
            if l == lp {
                continue;
            }
            self.enqueue(l);
            self.g.add_edge(l, lp, EdgeKind::GreedyNecessary);
        }
    }

    fn look_ahead(&mut self, lp: FactId) {
        let level = self.rpg.fact_level(lp);
        if level == 0 || level == UNREACHED {
            return;
        }
        let t = self.t;
        let achievers: Vec<ActionId> = self.rpg.earliest_achievers(t, lp).collect();
        if achievers.is_empty() {
            return;
        }
        let direct = self.intersect_pre(&achievers);
        let predicates: BTreeSet<&str> = achievers
            .iter()
            .flat_map(|&a| t.action(a).pre.iter())
            .map(|&f| t.atom(f).predicate.as_str())
            .collect();
        for p in predicates {
            let with_p = |a: ActionId| -> Vec<FactId> {
                t.action(a)
                    .pre
                    .iter()
                    .copied()
                    .filter(|&f| t.atom(f).predicate == p)
                    .collect()
            };
            if achievers.iter().any(|&a| with_p(a).is_empty()) {
                continue;
            }
            let intermediate: FactSet = achievers.iter().flat_map(|&a| with_p(a)).collect();
            let blocked = intermediate.iter().any(|lj| {
                let lvl = self.rpg.fact_level(lj);
                direct.contains(lj) || lvl == 0 || lvl == UNREACHED
            });
            if blocked {
                continue;
            }
            let second: BTreeSet<ActionId> = intermediate
                .iter()
                .flat_map(|lj| self.rpg.earliest_achievers(t, lj))
                .collect();
            let second: Vec<ActionId> = second.into_iter().collect();
            for l in self.intersect_pre(&second).iter() {
                if l == lp || intermediate.contains(l) {
                    continue;
                }
                self.enqueue(l);
                if !self.g.has_edge(l, lp, EdgeKind::GreedyNecessary) {
                    self.g.add_edge(l, lp, EdgeKind::LookaheadNecessary);
                }
            }
        }
    }
}

/// Backchains from the goals through preconditions shared by all
/// achievers; with the level test only achievers one layer below are used.
pub fn generate_candidates(t: &Task, rpg: &Rpg, use_level_test: bool) -> Lgg {
    let mut b = Backchainer {
        t,
        rpg,
        level_test: use_level_test,
        lookahead: false,
        g: Lgg::new(),
        queue: VecDeque::new(),
    };
    for f in t.goal().iter() {
        b.enqueue(f);
    }
    b.run();
    b.g
}

/// Adds lookahead-necessary edges for every node and backchains from any
/// new node with both kinds of steps.
pub fn lookahead_extend(t: &Task, rpg: &Rpg, g: Lgg, use_level_test: bool) -> Lgg {
    let queue: VecDeque<FactId> = g.nodes().iter().collect();
    let mut b = Backchainer {
        t,
        rpg,
        level_test: use_level_test,
        lookahead: true,
        g,
        queue,
    };
    b.run();
    b.g
}

/// Keeps a candidate `L` only if the task becomes relaxed-unsolvable once the
/// achievers of `L` are removed.
pub fn verify_landmarks(t: &Task, mut g: Lgg, exec: Execution) -> Lgg {
    let candidates: Vec<FactId> = g.nodes().iter().collect();
    let keep = exec.map(&candidates, |&l| {
        if t.init().contains(l) || t.goal().contains(l) {
            return true;
        }
        let mut allowed = vec![true; t.num_actions()];
        for &a in t.achievers(l) {
            allowed[a.index()] = false;
        }
        !relaxed_solvable(t, &allowed, t.init(), t.goal())
    });
    for (l, ok) in candidates.into_iter().zip(keep) {
        if ok {
            g.set_verified(l);
        } else {
            g.remove_node(l);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rpg::{build_rpg, BuildMode};

    fn names(t: &Task, set: &FactSet) -> BTreeSet<String> {
        set.iter().map(|f| t.fact_name(f)).collect()
    }

    fn edge(t: &Task, g: &Lgg, from: &str, to: &str, kind: EdgeKind) -> bool {
        g.has_edge(t.lookup(from).unwrap(), t.lookup(to).unwrap(), kind)
    }

    #[test]
    fn four_blocks_candidate_nodes() {
        let t = fixtures::four_blocks();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = generate_candidates(&t, &rpg, true);
        let expected: BTreeSet<String> = [
            "(on c a)", "(on b d)", "(holding c)", "(clear a)", "(holding b)", "(clear d)",
            "(clear c)", "(on-table c)", "(arm-empty)", "(on-table b)", "(clear b)", "(on d c)",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(names(&t, g.nodes()), expected);
        assert!(edge(&t, &g, "(clear d)", "(clear c)", EdgeKind::GreedyNecessary));
        assert!(edge(&t, &g, "(holding c)", "(on c a)", EdgeKind::GreedyNecessary));
        assert!(edge(&t, &g, "(clear a)", "(on c a)", EdgeKind::GreedyNecessary));
        let v = verify_landmarks(&t, g.clone(), Execution::Sequential);
        assert_eq!(v.nodes(), g.nodes());
        assert_eq!(v.num_edges(), g.num_edges());
    }

    #[test]
    fn level_test_edges_increase_level() {
        let t = fixtures::four_blocks();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = lookahead_extend(&t, &rpg, generate_candidates(&t, &rpg, true), true);
        for e in g.edges() {
            assert!(rpg.fact_level(e.from) < rpg.fact_level(e.to));
        }
    }

    #[test]
    fn roadmap_candidates_and_verification() {
        let t = fixtures::roadmap();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = generate_candidates(&t, &rpg, true);
        assert_eq!(
            names(&t, g.nodes()),
            ["(at a)", "(at d)", "(at e)"].into_iter().map(String::from).collect()
        );
        assert_eq!(g.num_edges(), 2);
        assert!(edge(&t, &g, "(at a)", "(at e)", EdgeKind::GreedyNecessary));
        assert!(edge(&t, &g, "(at e)", "(at d)", EdgeKind::GreedyNecessary));
        let v = verify_landmarks(&t, g, Execution::Parallel);
        assert_eq!(
            names(&t, v.nodes()),
            ["(at a)", "(at d)"].into_iter().map(String::from).collect()
        );
        assert_eq!(v.num_edges(), 0);
    }

    #[test]
    fn goals_in_init_yield_goal_nodes_only() {
        let t = fixtures::four_blocks();
        let t = t.with_init_and_goal(t.init().clone(), t.init().clone());
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = generate_candidates(&t, &rpg, true);
        assert_eq!(g.nodes(), t.goal());
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn logistics_lookahead_edge() {
        let t = fixtures::logistics_two_planes();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let plain = generate_candidates(&t, &rpg, true);
        let origin = t.lookup("(at pack1 la-airport)").unwrap();
        assert!(!plain.contains(origin));
        let g = verify_landmarks(&t, lookahead_extend(&t, &rpg, plain, true), Execution::Sequential);
        assert!(edge(
            &t,
            &g,
            "(at pack1 la-airport)",
            "(at pack1 boston-airport)",
            EdgeKind::LookaheadNecessary
        ));
    }

    #[test]
    fn safe_mode_finds_superset_of_goals() {
        let t = fixtures::four_blocks();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = generate_candidates(&t, &rpg, false);
        assert!(t.goal().is_subset(g.nodes()));
    }

    #[test]
    fn json_round_trip_and_dot() {
        let t = fixtures::four_blocks();
        let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
        let g = verify_landmarks(&t, generate_candidates(&t, &rpg, true), Execution::Sequential);
        assert_eq!(Lgg::from_json(&g.to_json(&t)).unwrap(), g);
        let dot = g.to_dot(&t);
        assert_eq!(dot.matches("label=\"(").count(), 12);
        let empty = Lgg::new();
        assert_eq!(Lgg::from_json(&empty.to_json(&t)).unwrap(), empty);
        assert!(empty.to_dot(&t).starts_with("digraph"));
    }

    #[test]
    fn leaves_of_edgeless_graph_are_all_nodes() {
        let mut g = Lgg::new();
        assert!(g.leaves().is_empty());
        g.add_node(FactId(1));
        g.add_node(FactId(4));
        assert_eq!(g.leaves(), *g.nodes());
        g.add_edge(FactId(1), FactId(4), EdgeKind::Reasonable);
        assert_eq!(g.leaves(), [FactId(1)].into_iter().collect());
    }
}
