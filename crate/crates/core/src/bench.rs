//! Random instance generators and the benchmark harness.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{run_control, ControlConfig, ControlMode, ControlOutcome};
use crate::exec::Execution;
use crate::fixtures;
use crate::pddl::{ground, parse_domain, parse_problem};
use crate::pipeline::{extract_landmarks, PipelineOptions};
use crate::planners::{bfs_plan, gbfs_plan, BasePlanner, Bfs, Gbfs, Limits, Outcome};
use crate::strips::Task;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlocksVariant {
    Arm,
    NoArm,
}

/// Stacks listed bottom to top.
fn random_towers(blocks: &[String], rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Vec<Vec<String>> = Vec::new();
    for b in order {
        match towers.last_mut() {
            Some(top) if rng.gen_bool(0.5) => top.push(b),
            _ => towers.push(vec![b]),
        }
    }
    towers
}

fn tower_atoms(towers: &[Vec<String>], with_clear: bool) -> Vec<String> {
    let mut out = Vec::new();
    for t in towers {
        out.push(format!("(on-table {})", t[0]));
        for w in t.windows(2) {
            out.push(format!("(on {} {})", w[1], w[0]));
        }
        if with_clear {
            out.push(format!("(clear {})", t[t.len() - 1]));
        }
    }
    out
}

/// A random Blocksworld problem; the goal is a complete configuration.
pub fn gen_blocksworld(n: usize, variant: BlocksVariant, seed: u64) -> String {
    assert!(n >= 1, "at least one block");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
    let init = random_towers(&blocks, &mut rng);
    let goal = random_towers(&blocks, &mut rng);
    let mut init_atoms = tower_atoms(&init, true);
    let domain = match variant {
        BlocksVariant::Arm => {
            init_atoms.push("(arm-empty)".into());
            "blocksworld-arm"
        }
        BlocksVariant::NoArm => {
            for x in &blocks {
                for y in blocks.iter().filter(|y| *y != x) {
                    init_atoms.push(format!("(different {x} {y})"));
                }
            }
            "blocksworld-no-arm"
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem bw-{n}-{seed})");
    let _ = writeln!(out, "  (:domain {domain})");
    let _ = writeln!(out, "  (:objects {})", blocks.join(" "));
    let _ = writeln!(out, "  (:init {})", init_atoms.join(" "));
    let _ = writeln!(out, "  (:goal (and {})))", tower_atoms(&goal, false).join(" "));
    out
}

/// A random Logistics problem. Location 1 of every city is its airport.
pub fn gen_logistics(cities: usize, locs_per_city: usize, planes: usize, packages: usize, seed: u64) -> String {
    assert!(cities >= 1 && locs_per_city >= 1 && planes >= 1 && packages >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loc = |c: usize, l: usize| format!("c{c}-l{l}");
    let all_locs: Vec<String> = (1..=cities)
        .flat_map(|c| (1..=locs_per_city).map(move |l| (c, l)))
        .map(|(c, l)| loc(c, l))
        .collect();
    let airports: Vec<String> = (1..=cities).map(|c| loc(c, 1)).collect();
    let mut init = Vec::new();
    for c in 1..=cities {
        let l = rng.gen_range(1..=locs_per_city);
        init.push(format!("(at truck{c} {})", loc(c, l)));
    }
    for p in 1..=planes {
        init.push(format!("(at plane{p} {})", airports.choose(&mut rng).unwrap()));
    }
    let mut goal = Vec::new();
    for k in 1..=packages {
        init.push(format!("(at pkg{k} {})", all_locs.choose(&mut rng).unwrap()));
        goal.push(format!("(at pkg{k} {})", all_locs.choose(&mut rng).unwrap()));
    }
    for c in 1..=cities {
        for a in 1..=locs_per_city {
            for b in (1..=locs_per_city).filter(|&b| b != a) {
                init.push(format!("(link {} {})", loc(c, a), loc(c, b)));
            }
        }
    }
    for a in &airports {
        for b in airports.iter().filter(|b| *b != a) {
            init.push(format!("(air-link {a} {b})"));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem log-{cities}-{locs_per_city}-{planes}-{packages}-{seed})");
    let _ = writeln!(out, "  (:domain logistics)");
    let _ = writeln!(out, "  (:objects");
    let list = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "    {} - package", list("pkg", packages));
    let _ = writeln!(out, "    {} - truck", list("truck", cities));
    let _ = writeln!(out, "    {} - airplane", list("plane", planes));
    let _ = writeln!(out, "    {} - location)", all_locs.join(" "));
    let _ = writeln!(out, "  (:init {})", init.join(" "));
    let _ = writeln!(out, "  (:goal (and {})))", goal.join(" "));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DomainKind {
    BlocksworldArm,
    BlocksworldNoArm,
    Logistics {
        cities: usize,
        locs_per_city: usize,
        planes: usize,
    },
}

impl DomainKind {
    pub fn label(&self) -> &'static str {
        match self {
            DomainKind::BlocksworldArm => "blocksworld-arm",
            DomainKind::BlocksworldNoArm => "blocksworld-no-arm",
            DomainKind::Logistics { .. } => "logistics",
        }
    }

    pub fn domain_text(&self) -> &'static str {
        match self {
            DomainKind::BlocksworldArm => fixtures::BLOCKSWORLD_ARM_DOMAIN,
            DomainKind::BlocksworldNoArm => fixtures::BLOCKSWORLD_NO_ARM_DOMAIN,
            DomainKind::Logistics { .. } => fixtures::LOGISTICS_DOMAIN,
        }
    }

    /// Problem text for the given size (blocks or packages) and seed.
    pub fn problem_text(&self, size: usize, seed: u64) -> String {
        match *self {
            DomainKind::BlocksworldArm => gen_blocksworld(size, BlocksVariant::Arm, seed),
            DomainKind::BlocksworldNoArm => gen_blocksworld(size, BlocksVariant::NoArm, seed),
            DomainKind::Logistics {
                cities,
                locs_per_city,
                planes,
            } => gen_logistics(cities, locs_per_city, planes, size, seed),
        }
    }

    pub fn task(&self, size: usize, seed: u64) -> Task {
        let d = parse_domain(self.domain_text()).expect("shipped domain parses");
        let p = parse_problem(&self.problem_text(size, seed)).expect("generated problem parses");
        ground(&d, &p).expect("generated problem grounds")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub domain: DomainKind,
    pub sizes: Vec<usize>,
    pub instances: usize,
    pub seed_base: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Bfs,
    Gbfs,
}

impl PlannerKind {
    pub fn planner(self) -> &'static dyn BasePlanner {
        match self {
            PlannerKind::Bfs => &Bfs,
            PlannerKind::Gbfs => &Gbfs,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Bfs => "bfs",
            PlannerKind::Gbfs => "gbfs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub planner: PlannerKind,
    pub landmarks: bool,
    pub mode: ControlMode,
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
}

impl BenchConfig {
    pub fn new(planner: PlannerKind, landmarks: bool, time_limit: Duration) -> Self {
        BenchConfig {
            planner,
            landmarks,
            mode: ControlMode::Disjunctive,
            time_limit,
            node_limit: Some(1_000_000),
        }
    }

    /// Inverse of `label`: "bfs", "gbfs+L", "gbfs+L-conj", "bfs+L-dnf", ...
    pub fn from_label(label: &str, time_limit: Duration) -> Option<Self> {
        let (planner, rest) = match label.split_once('+') {
            Some((p, rest)) => (p, Some(rest)),
            None => (label, None),
        };
        let planner = match planner {
            "bfs" => PlannerKind::Bfs,
            "gbfs" => PlannerKind::Gbfs,
            _ => return None,
        };
        let mut cfg = BenchConfig::new(planner, rest.is_some(), time_limit);
        cfg.mode = match rest {
            None | Some("L") => ControlMode::Disjunctive,
            Some("L-conj") => ControlMode::ConjPlusDisj,
            Some("L-dnf") => ControlMode::DnfMaxConsistent,
            Some(_) => return None,
        };
        Some(cfg)
    }

    pub fn label(&self) -> String {
        let mut s = self.planner.label().to_string();
        if self.landmarks {
            s.push_str("+L");
            match self.mode {
                ControlMode::Disjunctive => {}
                ControlMode::ConjPlusDisj => s.push_str("-conj"),
                ControlMode::DnfMaxConsistent => s.push_str("-dnf"),
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub domain: String,
    pub size: usize,
    pub seed: u64,
    pub config: String,
    pub outcome: String,
    pub time_s: f64,
    pub plan_length: Option<usize>,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        self.outcome == "solved"
    }
}

/// Runs one configuration on one task. The time limit covers landmark
/// extraction and every planner call together.
pub fn run_single(t: &Task, cfg: &BenchConfig) -> (String, Duration, Option<usize>) {
    let start = Instant::now();
    let limits = Limits {
        time: Some(cfg.time_limit),
        nodes: cfg.node_limit,
        deadline: Some(start + cfg.time_limit),
    };
    let (outcome, plan) = if cfg.landmarks {
        match extract_landmarks(t, &PipelineOptions { exec: Execution::Sequential, ..Default::default() }) {
            Err(crate::error::Error::RelaxedUnsolvable) => ("unsolvable".to_string(), None),
            Err(e) => (format!("error: {e}"), None),
            Ok(g) => {
                let control = ControlConfig {
                    mode: cfg.mode,
                    safety_net: false,
                    limits,
                };
                match run_control(t, g, cfg.planner.planner(), &control) {
                    Ok(trace) => match trace.outcome {
                        ControlOutcome::Solved => ("solved".to_string(), Some(trace.plan)),
                        ControlOutcome::SubtaskFailed(i) => (format!("subtask-failed-{i}"), None),
                        ControlOutcome::BasePlannerFailed => ("failed".to_string(), None),
                    },
                    Err(e) => (format!("error: {e}"), None),
                }
            }
        }
    } else {
        let r = match cfg.planner {
            PlannerKind::Bfs => bfs_plan(t, &limits),
            PlannerKind::Gbfs => gbfs_plan(t, &limits),
        };
        match r.outcome {
            Outcome::Plan(p) => ("solved".to_string(), Some(p)),
            Outcome::ProvedUnsolvable => ("unsolvable".to_string(), None),
            Outcome::ResourceExhausted => ("failed".to_string(), None),
        }
    };
    let elapsed = start.elapsed();
    let plan_len = plan.map(|p| {
        debug_assert!(t.validate_plan(&p));
        p.len()
    });
    (outcome, elapsed, plan_len)
}

/// One record per (instance, configuration). Failures are recorded, never fatal.
pub fn run_benchmark(suite: &SuiteSpec, configs: &[BenchConfig], exec: Execution) -> Vec<BenchRecord> {
    let mut jobs = Vec::new();
    for &size in &suite.sizes {
        for k in 0..suite.instances {
            let seed = suite.seed_base + k as u64;
            for cfg in configs {
                jobs.push((size, seed, *cfg));
            }
        }
    }
    exec.map(&jobs, |&(size, seed, cfg)| {
        let t = suite.domain.task(size, seed);
        let (outcome, time, plan_length) = run_single(&t, &cfg);
        log::info!("{} n={size} seed={seed} {}: {outcome} in {:.3}s", suite.domain.label(), cfg.label(), time.as_secs_f64());
        BenchRecord {
            domain: suite.domain.label().to_string(),
            size,
            seed,
            config: cfg.label(),
            outcome,
            time_s: time.as_secs_f64(),
            plan_length,
        }
    })
}

pub fn write_csv<W: std::io::Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Number of instances solved within each solve time, per configuration:
/// `(config, [(seconds, solved so far)])`.
pub fn solved_over_time(records: &[BenchRecord]) -> Vec<(String, Vec<(f64, usize)>)> {
    let mut configs: Vec<String> = records.iter().map(|r| r.config.clone()).collect();
    configs.sort();
    configs.dedup();
    configs
        .into_iter()
        .map(|c| {
            let mut times: Vec<f64> = records
                .iter()
                .filter(|r| r.config == c && r.solved())
                .map(|r| r.time_s)
                .collect();
            times.sort_by(f64::total_cmp);
            let series = times.into_iter().enumerate().map(|(i, t)| (t, i + 1)).collect();
            (c, series)
        })
        .collect()
}

pub fn write_series<W: std::io::Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["config", "time_s", "solved"])?;
    for (config, series) in solved_over_time(records) {
        for (t, n) in series {
            w.write_record([config.clone(), format!("{t:.6}"), n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
