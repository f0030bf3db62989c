//! Reasonable and obedient-reasonable orders between landmarks, and cycle
//! removal.

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::bitset::FactSet;
use crate::error::OrderingError;
use crate::lgg::{EdgeKind, Lgg};
use crate::mutex::InconsistencyTable;
use crate::strips::{FactId, Task};

use EdgeKind::{GreedyNecessary as Gn, LookaheadNecessary as Ln, ObedientReasonable as RO, Reasonable as R};

/// Which of the four interference conditions hold for a pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Interference {
    /// `L` and `L'` are inconsistent.
    pub inconsistent: bool,
    /// Every achiever of `L` adds some other fact inconsistent with `L'`.
    pub side_effect: bool,
    /// Every achiever of `L` deletes `L'`.
    pub shared_delete: bool,
    /// Some `x` inconsistent with `L'` has a greedy-necessary edge into `L`.
    pub necessary_predecessor: bool,
}

impl Interference {
    pub fn any(&self) -> bool {
        self.inconsistent || self.side_effect || self.shared_delete || self.necessary_predecessor
    }
}

pub fn interference(t: &Task, m: &InconsistencyTable, g: &Lgg, l: FactId, lp: FactId) -> Interference {
    let achievers = t.achievers(l);
    let (mut side_effect, mut shared_delete) = (false, false);
    if let Some((&first, rest)) = achievers.split_first() {
        let mut adds = t.action(first).add_set.clone();
        let mut dels = t.action(first).del_set.clone();
        for &a in rest {
            adds.intersect_with(&t.action(a).add_set);
            dels.intersect_with(&t.action(a).del_set);
        }
        side_effect = adds.iter().any(|x| x != l && m.query(x, lp));
        shared_delete = dels.contains(lp);
    }
    Interference {
        inconsistent: m.query(l, lp),
        side_effect,
        shared_delete,
        necessary_predecessor: g
            .predecessors(l)
            .any(|e| e.kind == Gn && m.query(e.from, lp)),
    }
}

pub fn interferes(t: &Task, m: &InconsistencyTable, g: &Lgg, l: FactId, lp: FactId) -> bool {
    interference(t, m, g, l, lp).any()
}

/// True when a greedy-necessary path of length 1 or 2 leads from `l` to `lp`.
fn short_gn_path(g: &Lgg, l: FactId, lp: FactId) -> bool {
    g.successors(l)
        .filter(|e| e.kind == Gn)
        .any(|e| e.to == lp || g.has_edge(e.to, lp, Gn))
}

/// Nodes with a (possibly empty) path along `kinds` edges into `target`.
fn ancestors(g: &Lgg, target: FactId, kinds: &[EdgeKind]) -> FactSet {
    let mut seen = FactSet::new();
    seen.insert(target);
    let mut stack = vec![target];
    while let Some(x) = stack.pop() {
        for e in g.predecessors(x) {
            if kinds.contains(&e.kind) && seen.insert(e.from) {
                stack.push(e.from);
            }
        }
    }
    seen
}

/// Nodes `L` such that `lp` lies in the aftermath of `L` according to the
/// graph: `lp` and some `Ln` share a successor `Ln+1` (with `lp →gn Ln+1`),
/// and `L` reaches `Ln` along `path` edges.
fn aftermath_sources(g: &Lgg, lp: FactId, sibling: &[EdgeKind], path: &[EdgeKind]) -> FactSet {
    let mut out = FactSet::new();
    let succs: Vec<FactId> = g.successors(lp).filter(|e| e.kind == Gn).map(|e| e.to).collect();
    for next in succs {
        let siblings: Vec<FactId> = g
            .predecessors(next)
            .filter(|e| sibling.contains(&e.kind) && e.from != lp)
            .map(|e| e.from)
            .collect();
        for ln in siblings {
            out.union_with(&ancestors(g, ln, path));
        }
    }
    out.remove(lp);
    out
}

pub fn add_reasonable_orders(t: &Task, mut g: Lgg, m: &InconsistencyTable) -> Lgg {
    let snapshot = g.clone();
    for lp in snapshot.nodes().iter() {
        let sources = if t.goal().contains(lp) {
            let mut all = snapshot.nodes().clone();
            all.remove(lp);
            all
        } else {
            aftermath_sources(&snapshot, lp, &[Gn, Ln], &[Gn, Ln])
        };
        for l in sources.iter() {
            if short_gn_path(&snapshot, l, lp) || g.has_edge(l, lp, R) {
                continue;
            }
            if interferes(t, m, &snapshot, l, lp) {
                g.add_edge(l, lp, R);
            }
        }
    }
    g
}

pub fn add_obedient_orders(t: &Task, mut g: Lgg, m: &InconsistencyTable) -> Lgg {
    let snapshot = g.clone();
    for lp in snapshot.nodes().iter() {
        if t.goal().contains(lp) {
            continue;
        }
        let sources = aftermath_sources(&snapshot, lp, &[Gn, Ln, R], &[Gn, Ln, R]);
        for l in sources.iter() {
            if short_gn_path(&snapshot, l, lp)
                || snapshot.has_edge(l, lp, R)
                || g.has_edge(l, lp, RO)
            {
                continue;
            }
            if interferes(t, m, &snapshot, l, lp) {
                g.add_edge(l, lp, RO);
            }
        }
    }
    g
}

/// Node sets of the non-trivial strongly connected components.
fn cyclic_components(g: &Lgg) -> Vec<Vec<FactId>> {
    let mut dg: DiGraphMap<u32, ()> = DiGraphMap::new();
    for f in g.nodes().iter() {
        dg.add_node(f.0);
    }
    for e in g.edges() {
        dg.add_edge(e.from.0, e.to.0, ());
    }
    tarjan_scc(&dg)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| c.into_iter().map(FactId).collect())
        .collect()
}

fn drop_cycle_edges(g: &mut Lgg, kind: EdgeKind) {
    let mut component = std::collections::HashMap::new();
    for (i, comp) in cyclic_components(g).into_iter().enumerate() {
        for f in comp {
            component.insert(f, i);
        }
    }
    let doomed: Vec<_> = g
        .edges()
        .filter(|e| {
            e.kind == kind
                && component.contains_key(&e.from)
                && component.get(&e.from) == component.get(&e.to)
        })
        .copied()
        .collect();
    for e in doomed {
        g.remove_edge(&e);
    }
}

/// Removes obedient-reasonable edges on cycles, then reasonable ones. Cycles
/// made of necessary edges alone are reported, never broken.
pub fn remove_cycles(t: &Task, mut g: Lgg) -> Result<Lgg, OrderingError> {
    drop_cycle_edges(&mut g, RO);
    drop_cycle_edges(&mut g, R);
    if let Some(comp) = cyclic_components(&g).first() {
        let names: Vec<String> = comp.iter().map(|&f| t.fact_name(f)).collect();
        return Err(OrderingError::NecessaryCycle(names.join(", ")));
    }
    Ok(g)
}
