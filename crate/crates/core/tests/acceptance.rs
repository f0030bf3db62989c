use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmplan::bench::{run_benchmark, BenchConfig, BenchRecord, DomainKind, PlannerKind, SuiteSpec};
use lmplan::control::{compile_disjunctive_goal, run_control, ControlConfig, ControlOutcome};
use lmplan::exec::Execution;
use lmplan::fixtures;
use lmplan::lgg::{generate_candidates, lookahead_extend, verify_landmarks, EdgeKind, Lgg};
use lmplan::mutex::compute_mutexes;
use lmplan::oracles::{Oracle, DEFAULT_CAP};
use lmplan::ordering::{add_obedient_orders, add_reasonable_orders, interference, remove_cycles, Interference};
use lmplan::pipeline::{extract_landmarks, PipelineOptions};
use lmplan::planners::{bfs_plan, gbfs_plan, Bfs, Gbfs, Limits};
use lmplan::rpg::{build_rpg, BuildMode};
use lmplan::{FactSet, Plan, Task, TaskBuilder};

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn names(t: &Task, set: &FactSet) -> BTreeSet<String> {
    set.iter().map(|f| t.fact_name(f)).collect()
}

fn set_of(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn has(t: &Task, g: &Lgg, from: &str, to: &str, kind: EdgeKind) -> bool {
    match (t.lookup(from), t.lookup(to)) {
        (Ok(a), Ok(b)) => g.has_edge(a, b, kind),
        _ => false,
    }
}

fn acyclic(g: &Lgg) -> bool {
    let nodes: Vec<_> = g.nodes().iter().collect();
    let mut indegree: std::collections::HashMap<_, usize> = nodes.iter().map(|&n| (n, 0)).collect();
    for e in g.edges() {
        *indegree.get_mut(&e.to).unwrap() += 1;
    }
    let mut ready: Vec<_> = nodes.iter().copied().filter(|n| indegree[n] == 0).collect();
    let mut seen = 0;
    while let Some(n) = ready.pop() {
        seen += 1;
        for e in g.successors(n) {
            let d = indegree.get_mut(&e.to).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(e.to);
            }
        }
    }
    seen == nodes.len()
}

fn criterion_1() -> Verdict {
    let t = fixtures::four_blocks();
    let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
    let candidates = generate_candidates(&t, &rpg, true);
    let verified = verify_landmarks(&t, candidates.clone(), Execution::Sequential);
    let full = extract_landmarks(&t, &PipelineOptions::default()).unwrap();
    let expected = set_of(&[
        "(on c a)", "(on b d)", "(holding c)", "(clear a)", "(holding b)", "(clear d)",
        "(clear c)", "(on-table c)", "(arm-empty)", "(on-table b)", "(clear b)", "(on d c)",
    ]);
    let nodes_ok = names(&t, candidates.nodes()) == expected;
    let none_removed = verified.nodes() == candidates.nodes();
    let gn_ok = has(&t, &verified, "(clear d)", "(clear c)", EdgeKind::GreedyNecessary);
    let r_ok = has(&t, &full, "(clear c)", "(on b d)", EdgeKind::Reasonable);
    Verdict::new(
        nodes_ok && none_removed && gn_ok && r_ok,
        format!("12-node set {nodes_ok}, nothing removed {none_removed}, clear(d)->gn clear(c) {gn_ok}, clear(c)->r on(b d) {r_ok}"),
    )
}

fn criterion_2() -> Verdict {
    let t = fixtures::roadmap();
    let rpg = build_rpg(&t, BuildMode::GoalsFirstReached).unwrap();
    let candidates = generate_candidates(&t, &rpg, true);
    let cand_ok = names(&t, candidates.nodes()) == set_of(&["(at a)", "(at e)", "(at d)"])
        && candidates.num_edges() == 2
        && has(&t, &candidates, "(at a)", "(at e)", EdgeKind::GreedyNecessary)
        && has(&t, &candidates, "(at e)", "(at d)", EdgeKind::GreedyNecessary);
    let verified = verify_landmarks(&t, candidates, Execution::Sequential);
    let ver_ok = names(&t, verified.nodes()) == set_of(&["(at a)", "(at d)"]) && verified.num_edges() == 0;
    Verdict::new(cand_ok && ver_ok, format!("candidate graph {cand_ok}, after verification {ver_ok}"))
}

fn criterion_3() -> Verdict {
    let t = fixtures::two_way_reasonable();
    let o = Oracle::new(&t, DEFAULT_CAP).unwrap();
    let (l, lp) = (t.lookup("l").unwrap(), t.lookup("lp").unwrap());
    let both = o.reasonable(l, lp) && o.reasonable(lp, l);
    let length_three = o.plans(3).iter().filter(|p| p.len() == 3).count();

    let t2 = fixtures::side_effect_interference();
    let (l2, lp2) = (t2.lookup("l").unwrap(), t2.lookup("lp").unwrap());
    let m = compute_mutexes(&t2);
    let rpg = build_rpg(&t2, BuildMode::GoalsFirstReached).unwrap();
    let g = generate_candidates(&t2, &rpg, true);
    let why = interference(&t2, &m, &g, l2, lp2);
    let only_two = why == Interference { side_effect: true, ..Default::default() };
    let o2 = Oracle::new(&t2, DEFAULT_CAP).unwrap();
    let consistent = !o2.inconsistent(l2, lp2);
    Verdict::new(
        both && length_three == 2 && only_two && consistent,
        format!("reasonable both ways {both}, length-3 plans {length_three}, side-effect only {only_two}, oracle consistent {consistent}"),
    )
}

fn micro_instances(count: usize) -> Vec<(String, Task)> {
    let kinds = [
        DomainKind::BlocksworldArm,
        DomainKind::BlocksworldNoArm,
        DomainKind::Logistics { cities: 2, locs_per_city: 2, planes: 1 },
        DomainKind::Logistics { cities: 1, locs_per_city: 3, planes: 1 },
    ];
    (0..count)
        .map(|i| {
            let kind = kinds[i % kinds.len()];
            let size = match kind {
                DomainKind::Logistics { .. } => 1 + (i / kinds.len()) % 2,
                _ => 3 + (i / kinds.len()) % 3,
            };
            let seed = 1000 + i as u64;
            (format!("{} n={size} seed={seed}", kind.label()), kind.task(size, seed))
        })
        .collect()
}

fn plans_for(t: &Task, g: &Lgg) -> Vec<Plan> {
    let limits = Limits::default();
    let mut out = Vec::new();
    out.extend(bfs_plan(t, &limits).plan().cloned());
    out.extend(gbfs_plan(t, &limits).plan().cloned());
    for base in [&Bfs as &dyn lmplan::planners::BasePlanner, &Gbfs] {
        let trace = run_control(t, g.clone(), base, &ControlConfig::default()).unwrap();
        if trace.outcome == ControlOutcome::Solved {
            out.push(trace.plan);
        }
    }
    out
}

fn criterion_4() -> Verdict {
    let instances = micro_instances(200);
    let mut violations = Vec::new();
    let mut checked = [0usize; 4];
    let mut max_states = 0;
    for (label, t) in &instances {
        let o = Oracle::new(t, DEFAULT_CAP).expect("micro-instance fits the state cap");
        max_states = max_states.max(o.space().len());

        for level_test in [true, false] {
            let opts = PipelineOptions { level_test, exec: Execution::Sequential, ..Default::default() };
            let g = extract_landmarks(t, &opts).unwrap();
            for l in g.nodes().iter() {
                checked[0] += 1;
                if !o.landmark(l) {
                    violations.push(format!("(a) {label}: {} is not a landmark", t.fact_name(l)));
                }
            }
        }

        let m = compute_mutexes(t);
        for (x, y) in m.pairs() {
            checked[1] += 1;
            if !o.inconsistent(x, y) {
                violations.push(format!("(b) {label}: {} / {} co-occur", t.fact_name(x), t.fact_name(y)));
            }
        }

        let g = extract_landmarks(t, &PipelineOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
        let table = o.greedy_necessary_table(Execution::Sequential);
        for plan in plans_for(t, &g) {
            assert!(t.validate_plan(&plan), "{label}: planner returned an invalid plan");
            for lp in t.fact_ids() {
                let Some(pre) = &table[lp.index()] else { continue };
                for l in pre.iter().filter(|&l| l != lp) {
                    checked[2] += 1;
                    if !t.plan_obeys_order(&plan, l, lp) {
                        violations.push(format!("(c) {label}: plan disobeys {} ->gn {}", t.fact_name(l), t.fact_name(lp)));
                    }
                }
            }
        }

        let rpg = build_rpg(t, BuildMode::GoalsFirstReached).unwrap();
        let raw = verify_landmarks(t, lookahead_extend(t, &rpg, generate_candidates(t, &rpg, true), true), Execution::Sequential);
        let ordered = add_obedient_orders(t, add_reasonable_orders(t, raw, &m), &m);
        let necessary: Vec<_> = ordered.edges().filter(|e| e.kind.is_necessary()).cloned().collect();
        match remove_cycles(t, ordered) {
            Ok(out) => {
                checked[3] += 1;
                if !acyclic(&out) {
                    violations.push(format!("(d) {label}: cycle survived"));
                }
                if necessary.iter().any(|e| !out.has_edge(e.from, e.to, e.kind)) {
                    violations.push(format!("(d) {label}: a gn/ln edge was dropped"));
                }
            }
            Err(e) => violations.push(format!("(d) {label}: {e}")),
        }
    }
    for v in violations.iter().take(10) {
        println!("    {v}");
    }
    Verdict::new(
        violations.is_empty(),
        format!(
            "{} instances (max {max_states} states), checks a/b/c/d = {}/{}/{}/{}, violations {}",
            instances.len(),
            checked[0],
            checked[1],
            checked[2],
            checked[3],
            violations.len()
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut tasks = Vec::new();
    for i in 0..50u64 {
        let n = 5 + (i % 3) as usize;
        tasks.push((format!("blocksworld-arm n={n} seed={}", 2000 + i), DomainKind::BlocksworldArm.task(n, 2000 + i)));
    }
    let log = DomainKind::Logistics { cities: 2, locs_per_city: 3, planes: 2 };
    for i in 0..20u64 {
        let n = 2 + (i % 3) as usize;
        tasks.push((format!("logistics n={n} seed={}", 3000 + i), log.task(n, 3000 + i)));
    }
    let mut failures = Vec::new();
    let mut solved = 0;
    for (label, t) in &tasks {
        let g = extract_landmarks(t, &PipelineOptions::default()).unwrap();
        let trace = run_control(t, g, &Bfs, &ControlConfig::default()).unwrap();
        match trace.outcome {
            ControlOutcome::Solved if t.validate_plan(&trace.plan) => solved += 1,
            ControlOutcome::Solved => failures.push(format!("{label}: invalid plan")),
            ControlOutcome::SubtaskFailed(i) => failures.push(format!("{label}: sub-task {i} failed")),
            ControlOutcome::BasePlannerFailed => failures.push(format!("{label}: final call failed")),
        }
    }
    for f in &failures {
        println!("    {f}");
    }
    Verdict::new(
        failures.is_empty(),
        format!("{} tasks, {solved} solved with valid plans, {} failures", tasks.len(), failures.len()),
    )
}

fn by_seed<'a>(records: &'a [BenchRecord], config: &str) -> Vec<&'a BenchRecord> {
    let mut v: Vec<_> = records.iter().filter(|r| r.config == config).collect();
    v.sort_by_key(|r| r.seed);
    v
}

fn criterion_6() -> Verdict {
    let limit = Duration::from_secs(60);
    let bw = SuiteSpec { domain: DomainKind::BlocksworldArm, sizes: vec![8], instances: 10, seed_base: 0 };
    let records = run_benchmark(
        &bw,
        &[BenchConfig::new(PlannerKind::Bfs, false, limit), BenchConfig::new(PlannerKind::Bfs, true, limit)],
        Execution::Sequential,
    );
    let (plain, with) = (by_seed(&records, "bfs"), by_seed(&records, "bfs+L"));
    let solved_plain = plain.iter().filter(|r| r.solved()).count();
    let solved_with = with.iter().filter(|r| r.solved()).count();
    let ratios: Vec<f64> = plain
        .iter()
        .zip(&with)
        .filter(|(a, b)| a.solved() && b.solved())
        .map(|(a, b)| a.time_s / b.time_s.max(1e-9))
        .collect();
    let geo = if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };
    let count_ok = solved_with >= 2 * solved_plain;
    let speed_ok = geo >= 5.0;

    let log = SuiteSpec {
        domain: DomainKind::Logistics { cities: 2, locs_per_city: 3, planes: 2 },
        sizes: vec![4],
        instances: 10,
        seed_base: 0,
    };
    let records = run_benchmark(
        &log,
        &[BenchConfig::new(PlannerKind::Gbfs, false, limit), BenchConfig::new(PlannerKind::Gbfs, true, limit)],
        Execution::Sequential,
    );
    let (plain_l, with_l) = (by_seed(&records, "gbfs"), by_seed(&records, "gbfs+L"));
    let mean = |v: &[&BenchRecord]| v.iter().map(|r| r.time_s).sum::<f64>() / v.len() as f64;
    let (mean_plain, mean_with) = (mean(&plain_l), mean(&with_l));
    let all_solved = plain_l.iter().chain(&with_l).all(|r| r.solved());
    let lengths_ok = plain_l.iter().zip(&with_l).all(|(a, b)| match (a.plan_length, b.plan_length) {
        (Some(x), Some(y)) => x.max(y) <= 2 * x.min(y).max(1),
        _ => false,
    });
    let time_ok = mean_with <= mean_plain;
    Verdict::new(
        count_ok && speed_ok && all_solved && time_ok && lengths_ok,
        format!(
            "blocksworld n=8: solved {solved_with} vs {solved_plain} (need 2x: {count_ok}), geo-mean speedup {geo:.1}x (need 5x: {speed_ok}); \
             logistics: mean {:.2} ms vs {:.2} ms (need <=: {time_ok}), lengths within 2x {lengths_ok}, all solved {all_solved}",
            mean_with * 1e3,
            mean_plain * 1e3
        ),
    )
}

fn criterion_7() -> Verdict {
    let t = fixtures::logistics_two_planes();
    let origin = t.lookup("(at pack1 la-airport)").unwrap();
    let on = extract_landmarks(&t, &PipelineOptions::default()).unwrap();
    let off = extract_landmarks(&t, &PipelineOptions { lookahead: false, ..Default::default() }).unwrap();
    let edge_on = has(&t, &on, "(at pack1 la-airport)", "(at pack1 boston-airport)", EdgeKind::LookaheadNecessary);
    let edge_off = has(&t, &off, "(at pack1 la-airport)", "(at pack1 boston-airport)", EdgeKind::LookaheadNecessary);
    let node_off = off.contains(origin);
    Verdict::new(
        edge_on && !edge_off && !node_off,
        format!("edge with lookahead {edge_on}, edge without {edge_off}, origin landmark without {node_off}"),
    )
}

/// Small random task; actions often consume their preconditions, so dead ends are common.
fn random_task(rng: &mut ChaCha8Rng) -> Task {
    let facts: Vec<String> = (0..7).map(|i| format!("f{i}")).collect();
    let pick = |rng: &mut ChaCha8Rng, k: usize| -> Vec<&str> {
        facts.iter().map(String::as_str).choose_multiple(rng, k)
    };
    let mut b = TaskBuilder::new();
    for f in &facts {
        b.fact(f);
    }
    b.init(&pick(rng, 2));
    for i in 0..8 {
        let (np, na, nd) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(0..=2));
        let pre = pick(rng, np);
        let add = pick(rng, na);
        let del = pick(rng, nd);
        b.action(&format!("a{i}"), &pre, &add, &del);
    }
    b.build()
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pool: Vec<Task> = (0..10u64)
        .flat_map(|s| {
            [
                DomainKind::BlocksworldArm.task(3, s),
                DomainKind::BlocksworldNoArm.task(3, s),
                DomainKind::Logistics { cities: 2, locs_per_city: 2, planes: 1 }.task(1, s),
            ]
        })
        .collect();
    pool.extend((0..30).map(|_| random_task(&mut rng)));
    let mut violations = Vec::new();
    let (mut reachable_cases, mut unreachable_cases) = (0, 0);
    for case in 0..100 {
        let t = &pool[rng.gen_range(0..pool.len())];
        let space = Oracle::new(t, DEFAULT_CAP).unwrap();
        let s = space.space().states()[rng.gen_range(0..space.space().len())].clone();
        let k = rng.gen_range(1..=3);
        let disj: FactSet = t.fact_ids().choose_multiple(&mut rng, k).into_iter().collect();

        let restarted = t.with_init_and_goal(s.clone(), FactSet::new());
        let from_s = Oracle::new(&restarted, DEFAULT_CAP).unwrap();
        let expected = from_s.space().states().iter().any(|x| disj.iter().any(|l| x.contains(l)));
        let compiled = compile_disjunctive_goal(t, &s, &disj);
        let got = Oracle::new(&compiled.task, DEFAULT_CAP).unwrap().solvable();
        if expected {
            reachable_cases += 1;
        } else {
            unreachable_cases += 1;
        }
        if got != expected {
            violations.push(format!("case {case}: compiled solvable {got}, disjunct reachable {expected}"));
            continue;
        }
        if let Some(p) = bfs_plan(&compiled.task, &Limits::default()).plan() {
            let sub = compiled.unmap(p);
            let ok = matches!(t.result(&s, &sub), Ok(Some(end)) if disj.iter().any(|l| end.contains(l)));
            if !ok {
                violations.push(format!("case {case}: unmapped plan does not reach a disjunct"));
            }
        } else if expected {
            violations.push(format!("case {case}: bfs found no plan for a solvable compiled task"));
        }
    }
    for v in violations.iter().take(10) {
        println!("    {v}");
    }
    Verdict::new(
        violations.is_empty(),
        format!("100 cases ({reachable_cases} reachable, {unreachable_cases} unreachable), violations {}", violations.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "four-blocks landmark graph", Duration::from_secs(1), criterion_1),
        (2, "road-map verification", Duration::from_secs(1), criterion_2),
        (3, "oracle fixtures", Duration::from_secs(1), criterion_3),
        (4, "soundness on micro-instances", Duration::from_secs(600), criterion_4),
        (5, "control loop never fails a sub-task", Duration::from_secs(600), criterion_5),
        (6, "speedup at desk scale", Duration::from_secs(2 * 20 * 60 + 60), criterion_6),
        (7, "lookahead order", Duration::from_secs(1), criterion_7),
        (8, "goal compilation", Duration::from_secs(600), criterion_8),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        if only.is_some_and(|k| k != n) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} [{}] {name}: {} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
