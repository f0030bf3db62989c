//! The full landmark pipeline from a grounded task to an ordered, acyclic graph.

use crate::error::Error;
use crate::exec::Execution;
use crate::lgg::{generate_candidates, lookahead_extend, verify_landmarks, Lgg};
use crate::mutex::compute_mutexes;
use crate::ordering::{add_obedient_orders, add_reasonable_orders, remove_cycles};
use crate::rpg::{build_rpg, BuildMode};
use crate::strips::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub level_test: bool,
    pub lookahead: bool,
    pub reasonable: bool,
    pub obedient: bool,
    pub exec: Execution,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            level_test: true,
            lookahead: true,
            reasonable: true,
            obedient: true,
            exec: Execution::Parallel,
        }
    }
}

pub fn extract_landmarks(t: &Task, opts: &PipelineOptions) -> Result<Lgg, Error> {
    let rpg = build_rpg(t, BuildMode::GoalsFirstReached)?;
    let mut g = generate_candidates(t, &rpg, opts.level_test);
    if opts.lookahead {
        g = lookahead_extend(t, &rpg, g, opts.level_test);
    }
    g = verify_landmarks(t, g, opts.exec);
    if opts.reasonable || opts.obedient {
        let m = compute_mutexes(t);
        if opts.reasonable {
            g = add_reasonable_orders(t, g, &m);
        }
        if opts.obedient {
            g = add_obedient_orders(t, g, &m);
        }
    }
    Ok(remove_cycles(t, g)?)
}
