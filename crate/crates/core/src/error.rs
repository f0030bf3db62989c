use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StripsError {
    #[error("unknown action id {0}")]
    UnknownAction(u32),
    #[error("unknown action `{0}`")]
    UnknownActionName(String),
    #[error("unknown fact `{0}`")]
    UnknownFact(String),
    #[error("malformed atom `{0}`")]
    BadAtom(String),
    #[error("fact `{0}` interned twice")]
    DuplicateFact(String),
    #[error("fact id outside the task's universe")]
    FactOutOfRange,
}

/// Source position of a PDDL diagnostic (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("{loc}: lexical error: {msg}")]
    Lexical { loc: Location, msg: String },
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Location, msg: String },
    #[error("{loc}: unsupported requirement `{name}`")]
    UnknownRequirement { loc: Location, name: String },
    #[error("{loc}: undeclared predicate `{name}`")]
    UndeclaredPredicate { loc: Location, name: String },
    #[error("{loc}: predicate `{name}` expects {expected} arguments, got {found}")]
    Arity {
        loc: Location,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{loc}: unknown object or variable `{name}`")]
    UnknownSymbol { loc: Location, name: String },
    #[error("{loc}: unknown type `{name}`")]
    UnknownType { loc: Location, name: String },
    #[error("{loc}: type mismatch: `{name}` is not of type `{expected}`")]
    TypeMismatch {
        loc: Location,
        name: String,
        expected: String,
    },
    #[error("problem refers to domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("state space exceeds the cap of {cap} states")]
    CapExceeded { cap: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderingError {
    #[error("cycle of necessary/lookahead edges survived cycle removal (through {0})")]
    NecessaryCycle(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Strips(#[from] StripsError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error("goal is unreachable even when deletes are ignored")]
    RelaxedUnsolvable,
    #[error("LGG has nodes but no leaf; a cycle leaked past cycle removal")]
    NoLeaves,
    #[error("external planner: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
