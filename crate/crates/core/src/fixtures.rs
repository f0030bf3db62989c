//! Domain texts and small hand-built tasks shared by tests, generators and the CLI.

use crate::pddl::{ground, parse_domain, parse_problem};
use crate::strips::{Task, TaskBuilder};

pub const BLOCKSWORLD_ARM_DOMAIN: &str = include_str!("../fixtures/blocksworld-arm.pddl");
pub const BLOCKSWORLD_NO_ARM_DOMAIN: &str = include_str!("../fixtures/blocksworld-no-arm.pddl");
pub const LOGISTICS_DOMAIN: &str = include_str!("../fixtures/logistics.pddl");
pub const ROADMAP_DOMAIN: &str = include_str!("../fixtures/roadmap.pddl");

/// Four blocks, D on C; goal C on A and B on D.
pub const FOUR_BLOCKS_PROBLEM: &str = include_str!("../fixtures/four-blocks.pddl");
pub const ROADMAP_PROBLEM: &str = include_str!("../fixtures/roadmap-problem.pddl");
/// One package from la-po to boston-po with two planes.
pub const LOGISTICS_TWO_PLANES_PROBLEM: &str = include_str!("../fixtures/logistics-two-planes.pddl");

fn grounded(domain: &str, problem: &str) -> Task {
    let d = parse_domain(domain).expect("shipped domain parses");
    let p = parse_problem(problem).expect("shipped problem parses");
    ground(&d, &p).expect("shipped problem grounds")
}

pub fn four_blocks() -> Task {
    grounded(BLOCKSWORLD_ARM_DOMAIN, FOUR_BLOCKS_PROBLEM)
}

pub fn roadmap() -> Task {
    grounded(ROADMAP_DOMAIN, ROADMAP_PROBLEM)
}

pub fn logistics_two_planes() -> Task {
    grounded(LOGISTICS_DOMAIN, LOGISTICS_TWO_PLANES_PROBLEM)
}

/// Seven-fact task where L and L' are reasonably ordered both ways.
pub fn two_way_reasonable() -> Task {
    let mut b = TaskBuilder::new();
    b.init(&["p1"]).goal(&["l", "lp"]);
    b.action("opl1", &["p1"], &["l", "p2"], &["p1"]);
    b.action("oplp1", &["p1"], &["lp", "p2p"], &["p1"]);
    b.action("opl2", &["p2p"], &["l", "p3"], &["lp", "p2p"]);
    b.action("oplp2", &["p2"], &["lp", "p3p"], &["l", "p2"]);
    b.action("opl3", &["p3p"], &["l"], &["p3p"]);
    b.action("oplp3", &["p3"], &["lp"], &["p3"]);
    b.build()
}

/// Six-fact task in which achieving L deletes L' only through a side effect `x`.
pub fn side_effect_interference() -> Task {
    let mut b = TaskBuilder::new();
    b.init(&["pp"]).goal(&["l", "lp"]);
    b.action("oplp", &["pp"], &["lp"], &["x"]);
    b.action("opp1", &["pp"], &["p1"], &["lp", "pp"]);
    b.action("opp2", &["pp"], &["p2"], &["lp", "pp"]);
    b.action("opl1", &["p1"], &["l", "x", "pp"], &["p1"]);
    b.action("opl2", &["p2"], &["l", "x", "pp"], &["p2"]);
    b.build()
}
