//! Parser for the STRIPS subset of PDDL (with optional flat typing).

use std::collections::{HashMap, HashSet};

use crate::error::{Location, PddlError};
pub use crate::grounding::ground;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sexp {
    Sym(String, Location),
    List(Vec<Sexp>, Location),
}

impl Sexp {
    fn loc(&self) -> Location {
        match self {
            Sexp::Sym(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Sym(..) => None,
        }
    }
}

fn lex(text: &str) -> Result<Sexp, PddlError> {
    let mut stack: Vec<(Vec<Sexp>, Location)> = Vec::new();
    let mut top: Option<Sexp> = None;
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let loc = Location { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            '(' => {
                chars.next();
                col += 1;
                if top.is_some() && stack.is_empty() {
                    return Err(PddlError::Syntax {
                        loc,
                        msg: "trailing content after top-level expression".into(),
                    });
                }
                stack.push((Vec::new(), loc));
            }
            ')' => {
                chars.next();
                col += 1;
                let (items, open) = stack.pop().ok_or(PddlError::Lexical {
                    loc,
                    msg: "unbalanced `)`".into(),
                })?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top = Some(list),
                }
            }
            _ => {
                let mut sym = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';') {
                        break;
                    }
                    if !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '?' | ':' | '.' | '=')) {
                        return Err(PddlError::Lexical {
                            loc: Location { line, col },
                            msg: format!("unexpected character `{c}`"),
                        });
                    }
                    sym.push(c.to_ascii_lowercase());
                    chars.next();
                    col += 1;
                }
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(Sexp::Sym(sym, loc)),
                    None => {
                        return Err(PddlError::Syntax {
                            loc,
                            msg: "symbol outside of any expression".into(),
                        })
                    }
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(PddlError::Lexical {
            loc: open,
            msg: "unterminated `(`".into(),
        });
    }
    top.ok_or(PddlError::Syntax {
        loc: Location { line, col },
        msg: "empty input".into(),
    })
}

/// A parameter or object with its (flat) type; `object` when untyped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typed {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<Typed>,
}

/// An atom whose arguments are variables (`?x`) or object names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomAst {
    pub predicate: String,
    pub args: Vec<String>,
    pub loc: Location,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Typed>,
    pub pre: Vec<AtomAst>,
    pub add: Vec<AtomAst>,
    pub del: Vec<AtomAst>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<Typed>,
    pub init: Vec<AtomAst>,
    pub goal: Vec<AtomAst>,
}

impl DomainAst {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

fn syntax(loc: Location, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        loc,
        msg: msg.into(),
    }
}

fn expect_list<'a>(e: &'a Sexp, what: &str) -> Result<&'a [Sexp], PddlError> {
    e.list()
        .ok_or_else(|| syntax(e.loc(), format!("expected a list for {what}")))
}

fn expect_sym<'a>(e: &'a Sexp, what: &str) -> Result<&'a str, PddlError> {
    e.sym()
        .ok_or_else(|| syntax(e.loc(), format!("expected a symbol for {what}")))
}

/// Parses `(define (<kind> <name>) sections...)`, returning name and sections.
fn header<'a>(top: &'a Sexp, kind: &str) -> Result<(String, &'a [Sexp]), PddlError> {
    let items = expect_list(top, "define")?;
    if items.first().and_then(Sexp::sym) != Some("define") {
        return Err(syntax(top.loc(), "expected `(define ...)`"));
    }
    let head = items
        .get(1)
        .ok_or_else(|| syntax(top.loc(), format!("missing `({kind} <name>)`")))?;
    let head_items = expect_list(head, kind)?;
    if head_items.len() != 2 || head_items[0].sym() != Some(kind) {
        return Err(syntax(head.loc(), format!("expected `({kind} <name>)`")));
    }
    let name = expect_sym(&head_items[1], "name")?.to_string();
    Ok((name, &items[2..]))
}

/// Parses `a b - t c` style typed lists. Untyped entries get `object`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, String, Location)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Location)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = expect_sym(&items[i], "typed list entry")?;
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].loc(), "dangling `-` in typed list"))?;
            let ty = expect_sym(ty, "type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].loc(), "type without names"));
            }
            for (n, l) in pending.drain(..) {
                out.push((n, ty.to_string(), l));
            }
            i += 2;
        } else {
            pending.push((s.to_string(), items[i].loc()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, l)| (n, "object".to_string(), l)));
    Ok(out)
}

fn parse_atom(e: &Sexp) -> Result<AtomAst, PddlError> {
    let items = expect_list(e, "atom")?;
    let head = items
        .first()
        .ok_or_else(|| syntax(e.loc(), "empty atom"))?;
    let predicate = expect_sym(head, "predicate")?.to_string();
    if predicate == "not" || predicate == "and" || predicate.starts_with(':') {
        return Err(syntax(e.loc(), format!("expected an atom, found `{predicate}`")));
    }
    let args = items[1..]
        .iter()
        .map(|a| expect_sym(a, "argument").map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(AtomAst {
        predicate,
        args,
        loc: e.loc(),
    })
}

/// A conjunction of positive atoms: `()`, a single atom or `(and ...)`.
fn conjunction(e: &Sexp) -> Result<Vec<AtomAst>, PddlError> {
    let items = expect_list(e, "condition")?;
    match items.first().and_then(Sexp::sym) {
        None if items.is_empty() => Ok(Vec::new()),
        Some("and") => items[1..].iter().map(parse_atom).collect(),
        Some("not") | Some("or") | Some("imply") | Some("exists") | Some("forall") => Err(syntax(
            e.loc(),
            "only conjunctions of positive atoms are supported",
        )),
        _ => Ok(vec![parse_atom(e)?]),
    }
}

fn effect(e: &Sexp) -> Result<(Vec<AtomAst>, Vec<AtomAst>), PddlError> {
    let items = expect_list(e, "effect")?;
    let parts: Vec<&Sexp> = match items.first().and_then(Sexp::sym) {
        None if items.is_empty() => Vec::new(),
        Some("and") => items[1..].iter().collect(),
        _ => vec![e],
    };
    let (mut add, mut del) = (Vec::new(), Vec::new());
    for p in parts {
        let inner = expect_list(p, "effect literal")?;
        if inner.first().and_then(Sexp::sym) == Some("not") {
            if inner.len() != 2 {
                return Err(syntax(p.loc(), "`not` takes exactly one atom"));
            }
            del.push(parse_atom(&inner[1])?);
        } else {
            add.push(parse_atom(p)?);
        }
    }
    Ok((add, del))
}

fn check_atom(
    atom: &AtomAst,
    preds: &HashMap<String, usize>,
    known: &dyn Fn(&str) -> bool,
) -> Result<(), PddlError> {
    let arity = *preds
        .get(&atom.predicate)
        .ok_or_else(|| PddlError::UndeclaredPredicate {
            loc: atom.loc,
            name: atom.predicate.clone(),
        })?;
    if arity != atom.args.len() {
        return Err(PddlError::Arity {
            loc: atom.loc,
            name: atom.predicate.clone(),
            expected: arity,
            found: atom.args.len(),
        });
    }
    for a in &atom.args {
        if !known(a) {
            return Err(PddlError::UnknownSymbol {
                loc: atom.loc,
                name: a.clone(),
            });
        }
    }
    Ok(())
}

pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let top = lex(text)?;
    let (name, sections) = header(&top, "domain")?;
    let mut dom = DomainAst {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
    };
    let mut action_exprs = Vec::new();
    for sec in sections {
        let items = expect_list(sec, "domain section")?;
        let key = items
            .first()
            .and_then(Sexp::sym)
            .ok_or_else(|| syntax(sec.loc(), "expected a section keyword"))?;
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_sym(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(PddlError::UnknownRequirement {
                            loc: r.loc(),
                            name: r_name.to_string(),
                        });
                    }
                    dom.requirements.push(r_name.to_string());
                }
            }
            ":types" => {
                for (t, parent, loc) in typed_list(&items[1..])? {
                    if parent != "object" {
                        return Err(syntax(loc, "type hierarchies are not supported"));
                    }
                    if t != "object" && !dom.types.contains(&t) {
                        dom.types.push(t);
                    }
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pi = expect_list(p, "predicate declaration")?;
                    let pname = pi
                        .first()
                        .and_then(Sexp::sym)
                        .ok_or_else(|| syntax(p.loc(), "predicate name expected"))?;
                    let params = typed_list(&pi[1..])?
                        .into_iter()
                        .map(|(name, ty, _)| Typed { name, ty })
                        .collect();
                    dom.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        params,
                    });
                }
            }
            ":action" => action_exprs.push(sec),
            other => {
                return Err(syntax(sec.loc(), format!("unsupported domain section `{other}`")));
            }
        }
    }
    let known_type = |t: &str| t == "object" || dom.types.iter().any(|d| d == t);
    for p in &dom.predicates {
        for param in &p.params {
            if !known_type(&param.ty) {
                return Err(PddlError::UnknownType {
                    loc: top.loc(),
                    name: param.ty.clone(),
                });
            }
        }
    }
    let preds: HashMap<String, usize> = dom
        .predicates
        .iter()
        .map(|p| (p.name.clone(), p.params.len()))
        .collect();
    for sec in action_exprs {
        let schema = parse_action(sec)?;
        for param in &schema.params {
            if !known_type(&param.ty) {
                return Err(PddlError::UnknownType {
                    loc: sec.loc(),
                    name: param.ty.clone(),
                });
            }
        }
        let vars: HashSet<&str> = schema.params.iter().map(|p| p.name.as_str()).collect();
        let known = |a: &str| vars.contains(a);
        for atom in schema.pre.iter().chain(&schema.add).chain(&schema.del) {
            check_atom(atom, &preds, &known)?;
        }
        dom.actions.push(schema);
    }
    Ok(dom)
}

fn parse_action(sec: &Sexp) -> Result<ActionSchema, PddlError> {
    let items = expect_list(sec, "action")?;
    let name = items
        .get(1)
        .ok_or_else(|| syntax(sec.loc(), "action name expected"))
        .and_then(|n| expect_sym(n, "action name"))?
        .to_string();
    let mut schema = ActionSchema {
        name,
        params: Vec::new(),
        pre: Vec::new(),
        add: Vec::new(),
        del: Vec::new(),
    };
    let mut i = 2;
    while i < items.len() {
        let key = expect_sym(&items[i], "action keyword")?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].loc(), format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                schema.params = typed_list(expect_list(val, "parameters")?)?
                    .into_iter()
                    .map(|(name, ty, loc)| {
                        if name.starts_with('?') {
                            Ok(Typed { name, ty })
                        } else {
                            Err(syntax(loc, format!("parameter `{name}` must start with `?`")))
                        }
                    })
                    .collect::<Result<_, _>>()?;
            }
            ":precondition" => schema.pre = conjunction(val)?,
            ":effect" => {
                let (add, del) = effect(val)?;
                schema.add = add;
                schema.del = del;
            }
            other => return Err(syntax(items[i].loc(), format!("unknown action keyword `{other}`"))),
        }
        i += 2;
    }
    Ok(schema)
}

pub fn parse_problem(text: &str) -> Result<ProblemAst, PddlError> {
    let top = lex(text)?;
    let (name, sections) = header(&top, "problem")?;
    let mut prob = ProblemAst {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    for sec in sections {
        let items = expect_list(sec, "problem section")?;
        let key = items
            .first()
            .and_then(Sexp::sym)
            .ok_or_else(|| syntax(sec.loc(), "expected a section keyword"))?;
        match key {
            ":domain" => {
                prob.domain = items
                    .get(1)
                    .ok_or_else(|| syntax(sec.loc(), "domain name expected"))
                    .and_then(|d| expect_sym(d, "domain name"))?
                    .to_string();
            }
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_sym(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(PddlError::UnknownRequirement {
                            loc: r.loc(),
                            name: r_name.to_string(),
                        });
                    }
                }
            }
            ":objects" => {
                for (name, ty, _) in typed_list(&items[1..])? {
                    prob.objects.push(Typed { name, ty });
                }
            }
            ":init" => {
                for a in &items[1..] {
                    prob.init.push(parse_atom(a)?);
                }
            }
            ":goal" => {
                let g = items
                    .get(1)
                    .ok_or_else(|| syntax(sec.loc(), "goal expected"))?;
                prob.goal = conjunction(g)?;
            }
            other => {
                return Err(syntax(sec.loc(), format!("unsupported problem section `{other}`")));
            }
        }
    }
    let objects: HashSet<&str> = prob.objects.iter().map(|o| o.name.as_str()).collect();
    for atom in prob.init.iter().chain(&prob.goal) {
        for a in &atom.args {
            if !objects.contains(a.as_str()) {
                return Err(PddlError::UnknownSymbol {
                    loc: atom.loc,
                    name: a.clone(),
                });
            }
        }
    }
    Ok(prob)
}

/// Checks the problem against the domain's predicate table and type names.
pub fn check_problem(d: &DomainAst, p: &ProblemAst) -> Result<(), PddlError> {
    if !p.domain.is_empty() && p.domain != d.name {
        return Err(PddlError::DomainMismatch {
            expected: d.name.clone(),
            found: p.domain.clone(),
        });
    }
    for o in &p.objects {
        if o.ty != "object" && !d.types.contains(&o.ty) {
            return Err(PddlError::UnknownType {
                loc: Location { line: 0, col: 0 },
                name: o.ty.clone(),
            });
        }
    }
    let preds: HashMap<String, usize> = d
        .predicates
        .iter()
        .map(|p| (p.name.clone(), p.params.len()))
        .collect();
    let objects: HashMap<&str, &str> = p
        .objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();
    let known = |a: &str| objects.contains_key(a);
    for atom in p.init.iter().chain(&p.goal) {
        check_atom(atom, &preds, &known)?;
        let decl = d.predicate(&atom.predicate).expect("checked above");
        for (arg, param) in atom.args.iter().zip(&decl.params) {
            if param.ty != "object" && objects[arg.as_str()] != param.ty {
                return Err(PddlError::TypeMismatch {
                    loc: atom.loc,
                    name: arg.clone(),
                    expected: param.ty.clone(),
                });
            }
        }
    }
    Ok(())
}
