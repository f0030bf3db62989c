//! Ordered landmarks for STRIPS planning.

pub mod bench;
pub mod bitset;
pub mod control;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod grounding;
pub mod lgg;
pub mod mutex;
pub mod oracles;
pub mod ordering;
pub mod pddl;
pub mod pipeline;
pub mod planners;
pub mod rpg;
pub mod strips;

pub use bitset::FactSet;
pub use error::Error;
pub use strips::{Action, ActionId, Atom, FactId, Plan, State, Task, TaskBuilder};
