use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lmplan");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn lmplan(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("LMPLAN_TIME_LIMIT")
        .output()
        .expect("binary runs")
}

fn four_blocks() -> [String; 2] {
    [
        fixture("blocksworld-arm.pddl").display().to_string(),
        fixture("four-blocks.pddl").display().to_string(),
    ]
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ground_reports_size() {
    let [d, p] = four_blocks();
    let o = lmplan(&["ground", &d, &p]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "facts 25 actions 32");
}

#[test]
fn landmarks_json_has_twelve_nodes() {
    let [d, p] = four_blocks();
    let o = lmplan(&["landmarks", &d, &p, "--emit", "json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.matches("\"verified\"").count(), 12);
    let dot = stdout(&lmplan(&["landmarks", &d, &p, "--emit", "dot"]));
    assert!(dot.starts_with("digraph"));
}

#[test]
fn no_lookahead_flag_drops_the_edge() {
    let d = fixture("logistics.pddl").display().to_string();
    let p = fixture("logistics-two-planes.pddl").display().to_string();
    let on = stdout(&lmplan(&["landmarks", &d, &p]));
    let off = stdout(&lmplan(&["landmarks", &d, &p, "--no-lookahead"]));
    let edge = "(at pack1 la-airport) -ln-> (at pack1 boston-airport)";
    assert!(on.contains(edge));
    assert!(!off.contains(edge));
    assert!(!off.contains("(at pack1 la-airport)"));
}

#[test]
fn plan_writes_valid_plan() {
    let [d, p] = four_blocks();
    let dir = tempfile::tempdir().unwrap();
    for mode in ["disj", "conjdisj", "dnf"] {
        let out = dir.path().join(format!("{mode}.txt"));
        let o = lmplan(&["plan", &d, &p, "--planner", "bfs", "--mode", mode, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let plan = std::fs::read_to_string(&out).unwrap();
        assert!(plan.lines().count() >= 6);
    }
    let o = lmplan(&["plan", &d, &p, "--landmarks", "off", "--planner", "bfs"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn exit_codes() {
    let [d, p] = four_blocks();
    assert_eq!(lmplan(&["plan", &d, &p, "--mode", "bogus"]).status.code(), Some(2));
    assert_eq!(lmplan(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lmplan(&["plan", &d, "missing.pddl"]).status.code(), Some(1));
    let limited = Command::new(BIN)
        .args(["plan", &d, &p, "--landmarks", "off", "--planner", "bfs"])
        .env("LMPLAN_TIME_LIMIT", "0")
        .output()
        .unwrap();
    assert_eq!(limited.status.code(), Some(1));
}

#[test]
fn oracle_queries() {
    let d = fixture("roadmap.pddl").display().to_string();
    let p = fixture("roadmap-problem.pddl").display().to_string();
    assert_eq!(stdout(&lmplan(&["oracle", &d, &p, "landmark", "(at e)"])).trim(), "false");
    assert_eq!(stdout(&lmplan(&["oracle", &d, &p, "landmark", "(at d)"])).trim(), "true");
    let [d, p] = four_blocks();
    assert_eq!(stdout(&lmplan(&["oracle", &d, &p, "mutex", "(holding b)", "(arm-empty)"])).trim(), "true");
    assert_eq!(stdout(&lmplan(&["oracle", &d, &p, "r", "(clear c)", "(on b d)"])).trim(), "true");
    assert_eq!(stdout(&lmplan(&["oracle", &d, &p, "gn", "(clear d)", "(clear c)"])).trim(), "true");
    assert_eq!(lmplan(&["oracle", &d, &p, "landmark", "(nope)"]).status.code(), Some(1));
}

#[test]
fn generated_problem_round_trips_through_plan() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("domain.pddl");
    let o = lmplan(&[
        "gen",
        "--domain-out",
        domain.to_str().unwrap(),
        "blocksworld",
        "--blocks",
        "5",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    let problem = dir.path().join("problem.pddl");
    std::fs::write(&problem, stdout(&o)).unwrap();
    let o = lmplan(&["plan", domain.to_str().unwrap(), problem.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[cfg(unix)]
#[test]
fn external_planner_protocol() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("inner.sh");
    std::fs::write(
        &script,
        format!("#!/bin/sh\nexec \"{BIN}\" plan \"$1\" \"$2\" --planner bfs --landmarks off --out \"$3\"\n"),
    )
    .unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    let [d, p] = four_blocks();
    let out = dir.path().join("plan.txt");
    let o = lmplan(&[
        "plan",
        &d,
        &p,
        "--planner",
        "external",
        "--external",
        script.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = std::fs::read_to_string(&out).unwrap();
    assert!(plan.contains("(stack c a)"));
}

#[test]
fn bench_writes_csv_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.toml");
    std::fs::write(
        &suite,
        r#"
configs = ["bfs", "bfs+L"]
time_limit = 10

[suite]
sizes = [3, 4]
instances = 2
seed_base = 0

[suite.domain]
kind = "blocksworld-arm"
"#,
    )
    .unwrap();
    let csv = dir.path().join("runs.csv");
    let series = dir.path().join("series.csv");
    let o = lmplan(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--series",
        series.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 8);
    assert!(rows.starts_with("domain,size,seed,config,outcome,time_s,plan_length"));
    assert!(std::fs::read_to_string(&series).unwrap().starts_with("config,time_s,solved"));
}
