//! Grounded STRIPS semantics: facts, actions, tasks, plan application and
//! validation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::bitset::FactSet;
use crate::error::StripsError;

/// Dense handle of a fact within one [`Task`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactId(pub u32);

/// Dense handle of an action within one [`Task`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

impl FactId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type State = FactSet;

/// A ground atom such as `(on c a)`. Symbols are lowercase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(predicate: S, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into().to_lowercase(),
            args: args.iter().map(|a| a.to_lowercase()).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Atom {
    type Err = StripsError;

    /// Accepts `(pred a b)`, `pred(a b)`, `pred(a, b)` and bare `pred`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s
            .chars()
            .map(|c| if matches!(c, '(' | ')' | ',') { ' ' } else { c })
            .collect();
        let mut parts = cleaned.split_whitespace();
        let predicate = parts
            .next()
            .ok_or_else(|| StripsError::BadAtom(s.to_string()))?
            .to_lowercase();
        let args = parts.map(|p| p.to_lowercase()).collect();
        Ok(Atom { predicate, args })
    }
}

#[derive(Clone, Debug)]
pub struct Action {
    pub name: Atom,
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
    pub pre_set: FactSet,
    pub add_set: FactSet,
    pub del_set: FactSet,
}

impl Action {
    pub fn new(name: Atom, pre: Vec<FactId>, add: Vec<FactId>, del: Vec<FactId>) -> Self {
        let pre_set: FactSet = pre.iter().copied().collect();
        let add_set: FactSet = add.iter().copied().collect();
        let del_set: FactSet = del.iter().copied().collect();
        Action {
            name,
            pre: pre_set.iter().collect(),
            add: add_set.iter().collect(),
            del: del_set.iter().collect(),
            pre_set,
            add_set,
            del_set,
        }
    }

    #[inline]
    pub fn applicable(&self, s: &State) -> bool {
        self.pre_set.is_subset(s)
    }

    /// `(s ∪ add) \ del`, or `None` when a precondition is missing.
    #[inline]
    pub fn apply_to(&self, s: &State) -> Option<State> {
        if !self.applicable(s) {
            return None;
        }
        let mut next = s.union(&self.add_set);
        next.difference_with(&self.del_set);
        Some(next)
    }
}

/// A sequence of action ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Plan(pub Vec<ActionId>);

impl Plan {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[ActionId] {
        &self.0
    }

    pub fn concat(&mut self, other: &Plan) {
        self.0.extend_from_slice(&other.0);
    }
}

/// A grounded planning task `(A, I, G)` over an interned fact universe.
#[derive(Clone, Debug)]
pub struct Task {
    facts: Vec<Atom>,
    index: HashMap<Atom, FactId>,
    actions: Vec<Action>,
    init: State,
    goal: FactSet,
    achievers: Vec<Vec<ActionId>>,
    consumers: Vec<Vec<ActionId>>,
    action_index: HashMap<Atom, ActionId>,
    provably_unsolvable: bool,
}

impl Task {
    pub fn new(
        facts: Vec<Atom>,
        actions: Vec<Action>,
        init: State,
        goal: FactSet,
    ) -> Result<Self, StripsError> {
        let n = facts.len() as u32;
        let mut index = HashMap::with_capacity(facts.len());
        for (i, atom) in facts.iter().enumerate() {
            if index.insert(atom.clone(), FactId(i as u32)).is_some() {
                return Err(StripsError::DuplicateFact(atom.to_string()));
            }
        }
        let in_range = |set: &FactSet| set.iter().all(|f| f.0 < n);
        if !in_range(&init) || !in_range(&goal) {
            return Err(StripsError::FactOutOfRange);
        }
        let mut achievers = vec![Vec::new(); facts.len()];
        let mut consumers = vec![Vec::new(); facts.len()];
        let mut action_index = HashMap::with_capacity(actions.len());
        for (i, a) in actions.iter().enumerate() {
            let id = ActionId(i as u32);
            if !in_range(&a.pre_set) || !in_range(&a.add_set) || !in_range(&a.del_set) {
                return Err(StripsError::FactOutOfRange);
            }
            for &f in &a.add {
                achievers[f.index()].push(id);
            }
            for &f in &a.pre {
                consumers[f.index()].push(id);
            }
            action_index.entry(a.name.clone()).or_insert(id);
        }
        Ok(Task {
            facts,
            index,
            actions,
            init,
            goal,
            achievers,
            consumers,
            action_index,
            provably_unsolvable: false,
        })
    }

    pub(crate) fn mark_unsolvable(&mut self) {
        self.provably_unsolvable = true;
    }

    /// Set by grounding when a goal fact is unreachable even with deletes ignored.
    pub fn provably_unsolvable(&self) -> bool {
        self.provably_unsolvable
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn facts(&self) -> &[Atom] {
        &self.facts
    }

    pub fn fact_ids(&self) -> impl Iterator<Item = FactId> {
        (0..self.facts.len() as u32).map(FactId)
    }

    pub fn atom(&self, f: FactId) -> &Atom {
        &self.facts[f.index()]
    }

    pub fn fact_name(&self, f: FactId) -> String {
        self.atom(f).to_string()
    }

    pub fn fact_id(&self, atom: &Atom) -> Option<FactId> {
        self.index.get(atom).copied()
    }

    /// Looks up a fact by its display form, e.g. `"(on c a)"`.
    pub fn lookup(&self, name: &str) -> Result<FactId, StripsError> {
        let atom: Atom = name.parse()?;
        self.fact_id(&atom)
            .ok_or_else(|| StripsError::UnknownFact(name.to_string()))
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, a: ActionId) -> &Action {
        &self.actions[a.index()]
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len() as u32).map(ActionId)
    }

    pub fn action_by_name(&self, name: &Atom) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &FactSet {
        &self.goal
    }

    /// Actions with `f` in their add list, ascending by id.
    pub fn achievers(&self, f: FactId) -> &[ActionId] {
        &self.achievers[f.index()]
    }

    /// Actions with `f` among their preconditions, ascending by id.
    pub fn consumers(&self, f: FactId) -> &[ActionId] {
        &self.consumers[f.index()]
    }

    pub fn is_goal_state(&self, s: &State) -> bool {
        self.goal.is_subset(s)
    }

    /// A copy of this task with a different initial state and goal.
    pub fn with_init_and_goal(&self, init: State, goal: FactSet) -> Task {
        let mut t = self.clone();
        t.init = init;
        t.goal = goal;
        t.provably_unsolvable = false;
        t
    }

    /// A copy of this task extended with additional facts and actions.
    pub fn extended(
        &self,
        extra_facts: Vec<Atom>,
        extra_actions: Vec<Action>,
        init: State,
        goal: FactSet,
    ) -> Result<Task, StripsError> {
        let mut facts = self.facts.clone();
        facts.extend(extra_facts);
        let mut actions = self.actions.clone();
        actions.extend(extra_actions);
        Task::new(facts, actions, init, goal)
    }

    /// Applies one action. `Ok(None)` is the undefined result of an
    /// inapplicable action; an id outside this task is an error.
    pub fn apply(&self, s: &State, a: ActionId) -> Result<Option<State>, StripsError> {
        let action = self
            .actions
            .get(a.index())
            .ok_or(StripsError::UnknownAction(a.0))?;
        Ok(action.apply_to(s))
    }

    /// Left fold of [`Task::apply`]; undefined is absorbing.
    pub fn result(&self, s: &State, plan: &Plan) -> Result<Option<State>, StripsError> {
        let mut cur = s.clone();
        for &a in plan.steps() {
            match self.apply(&cur, a)? {
                Some(next) => cur = next,
                None => {
                    // Keep checking ids so foreign actions are still reported.
                    for &rest in plan.steps() {
                        if rest.index() >= self.actions.len() {
                            return Err(StripsError::UnknownAction(rest.0));
                        }
                    }
                    return Ok(None);
                }
            }
        }
        Ok(Some(cur))
    }

    pub fn validate_plan(&self, plan: &Plan) -> bool {
        matches!(self.result(&self.init, plan), Ok(Some(s)) if self.goal.is_subset(&s))
    }

    /// True iff `l` is initially true or `l` first holds strictly earlier in
    /// the plan than `lp` does (never holding counts as infinitely late). An
    /// action that adds and deletes a fact does not make it hold.
    pub fn plan_obeys_order(&self, plan: &Plan, l: FactId, lp: FactId) -> bool {
        if self.init.contains(l) {
            return true;
        }
        let (mut first_l, mut first_lp) = (None, None);
        let mut s = self.init.clone();
        for (i, &a) in plan.steps().iter().enumerate() {
            let Some(next) = self.action(a).apply_to(&s) else { break };
            s = next;
            if first_l.is_none() && s.contains(l) {
                first_l = Some(i);
            }
            if first_lp.is_none() && s.contains(lp) {
                first_lp = Some(i);
            }
        }
        match (first_l, first_lp) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(i), Some(j)) => i < j,
        }
    }

    pub fn format_plan(&self, plan: &Plan) -> String {
        let mut out = String::new();
        for &a in plan.steps() {
            out.push_str(&self.action(a).name.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses plan text, one `(op arg ...)` per line; `;` starts a comment.
    pub fn parse_plan(&self, text: &str) -> Result<Plan, StripsError> {
        let mut steps = Vec::new();
        for line in text.lines() {
            let line = line.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let atom: Atom = line.parse()?;
            let id = self
                .action_by_name(&atom)
                .ok_or_else(|| StripsError::UnknownActionName(line.to_string()))?;
            steps.push(id);
        }
        Ok(Plan(steps))
    }

    pub fn format_facts(&self, set: &FactSet) -> Vec<String> {
        set.iter().map(|f| self.fact_name(f)).collect()
    }
}

/// Programmatic construction of small tasks, mostly for fixtures and tests.
#[derive(Default)]
pub struct TaskBuilder {
    facts: Vec<Atom>,
    index: HashMap<Atom, FactId>,
    actions: Vec<Action>,
    init: FactSet,
    goal: FactSet,
}

impl TaskBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fact(&mut self, name: &str) -> FactId {
        let atom: Atom = name.parse().expect("fact name");
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = FactId(self.facts.len() as u32);
        self.index.insert(atom.clone(), id);
        self.facts.push(atom);
        id
    }

    pub fn action(&mut self, name: &str, pre: &[&str], add: &[&str], del: &[&str]) -> ActionId {
        let ids = |b: &mut Self, xs: &[&str]| xs.iter().map(|x| b.fact(x)).collect::<Vec<_>>();
        let (pre, add, del) = (ids(self, pre), ids(self, add), ids(self, del));
        let id = ActionId(self.actions.len() as u32);
        self.actions
            .push(Action::new(name.parse().expect("action name"), pre, add, del));
        id
    }

    pub fn init(&mut self, facts: &[&str]) -> &mut Self {
        for f in facts {
            let id = self.fact(f);
            self.init.insert(id);
        }
        self
    }

    pub fn goal(&mut self, facts: &[&str]) -> &mut Self {
        for f in facts {
            let id = self.fact(f);
            self.goal.insert(id);
        }
        self
    }

    pub fn build(self) -> Task {
        Task::new(self.facts, self.actions, self.init, self.goal).expect("consistent builder task")
    }
}
