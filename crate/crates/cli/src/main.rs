use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use lmplan::bench::{
    gen_blocksworld, gen_logistics, run_benchmark, write_csv, write_series, BenchConfig, BlocksVariant, SuiteSpec,
};
use lmplan::control::{run_control, ControlConfig, ControlMode, ControlOutcome};
use lmplan::exec::Execution;
use lmplan::grounding::{write_domain, write_problem, PropositionalNames};
use lmplan::mutex::compute_mutexes;
use lmplan::oracles::{Oracle, DEFAULT_CAP};
use lmplan::pddl::{ground, parse_domain, parse_problem};
use lmplan::pipeline::{extract_landmarks, PipelineOptions};
use lmplan::planners::{BasePlanner, Bfs, ExternalPlanner, Gbfs, Limits, Outcome};
use lmplan::{FactId, Plan, Task};

#[derive(Parser)]
#[command(name = "lmplan", version, about = "Ordered landmarks for STRIPS planning")]
struct Cli {
    /// Run data-parallel stages on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaskFiles {
    domain: PathBuf,
    problem: PathBuf,
}

impl TaskFiles {
    fn load(&self) -> Result<Task> {
        let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
        let d = parse_domain(&read(&self.domain)?).with_context(|| format!("in {}", self.domain.display()))?;
        let p = parse_problem(&read(&self.problem)?).with_context(|| format!("in {}", self.problem.display()))?;
        Ok(ground(&d, &p)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ground a problem and report its size.
    Ground {
        #[command(flatten)]
        files: TaskFiles,
        /// List every fact and action.
        #[arg(long)]
        list: bool,
        /// Write the propositional domain and problem into this directory.
        #[arg(long)]
        propositional: Option<PathBuf>,
    },
    /// Extract the ordered landmark graph.
    Landmarks {
        #[command(flatten)]
        files: TaskFiles,
        #[arg(long)]
        no_level_test: bool,
        #[arg(long)]
        no_lookahead: bool,
        #[arg(long)]
        no_reasonable: bool,
        #[arg(long)]
        no_obedient: bool,
        #[arg(long, value_enum, default_value_t = Emit::Text)]
        emit: Emit,
    },
    /// Solve a problem, optionally under landmark control.
    Plan(PlanArgs),
    /// Exact answers by state-space enumeration.
    Oracle {
        #[command(flatten)]
        files: TaskFiles,
        /// Maximum number of reachable states to enumerate.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[command(subcommand)]
        query: OracleQuery,
    },
    /// Generate a random problem.
    Gen {
        /// Also write the matching domain to this file.
        #[arg(long)]
        domain_out: Option<PathBuf>,
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a benchmark suite and write CSV results.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Text,
    Dot,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerChoice {
    Bfs,
    Gbfs,
    External,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeChoice {
    Disj,
    Conjdisj,
    Dnf,
}

impl From<ModeChoice> for ControlMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Disj => ControlMode::Disjunctive,
            ModeChoice::Conjdisj => ControlMode::ConjPlusDisj,
            ModeChoice::Dnf => ControlMode::DnfMaxConsistent,
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    files: TaskFiles,
    #[arg(long, value_enum, default_value_t = PlannerChoice::Gbfs)]
    planner: PlannerChoice,
    /// Program run by `--planner external`.
    #[arg(long, required_if_eq("planner", "external"))]
    external: Option<PathBuf>,
    /// Extra leading arguments for the external program.
    #[arg(long = "external-arg", allow_hyphen_values = true)]
    external_args: Vec<String>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    landmarks: Switch,
    #[arg(long, value_enum, default_value_t = ModeChoice::Disj)]
    mode: ModeChoice,
    #[arg(long)]
    safety_net: bool,
    /// Seconds for the whole run.
    #[arg(long, env = "LMPLAN_TIME_LIMIT", default_value_t = 60.0)]
    time_limit: f64,
    /// Expanded-node limit for each planner call.
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
    /// Write the plan here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleQuery {
    /// Is FACT a landmark?
    Landmark { fact: String },
    /// Is L greedy-necessarily ordered before L2?
    Gn { l: String, l2: String },
    /// Is L necessarily ordered before L2?
    N { l: String, l2: String },
    /// Is L reasonably ordered before L2?
    R { l: String, l2: String },
    /// Are X and Y never true together in a reachable state?
    Mutex { x: String, y: String },
}

#[derive(Subcommand)]
enum GenKind {
    Blocksworld {
        #[arg(long)]
        blocks: usize,
        #[arg(long, value_enum, default_value_t = VariantChoice::Arm)]
        variant: VariantChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Logistics {
        #[arg(long, default_value_t = 2)]
        cities: usize,
        #[arg(long, default_value_t = 3)]
        locations: usize,
        #[arg(long, default_value_t = 2)]
        planes: usize,
        #[arg(long)]
        packages: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantChoice {
    Arm,
    NoArm,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML file with a `[suite]` table and a `configs` list.
    #[arg(long)]
    suite: PathBuf,
    /// Per-run seconds; overrides the file.
    #[arg(long, env = "LMPLAN_TIME_LIMIT")]
    time_limit: Option<f64>,
    /// CSV of per-run records; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV of cumulative solved counts over time.
    #[arg(long)]
    series: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    suite: SuiteSpec,
    configs: Vec<String>,
    #[serde(default = "default_time_limit")]
    time_limit: f64,
}

fn default_time_limit() -> f64 {
    60.0
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).with_context(|| format!("invalid time limit {s}"))
}

fn fact(t: &Task, name: &str) -> Result<FactId> {
    t.lookup(name).with_context(|| format!("no such fact {name}"))
}

fn emit_plan(t: &Task, plan: &Plan, out: Option<&Path>) -> Result<()> {
    let text = t.format_plan(plan);
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn plan(args: &PlanArgs, exec: Execution) -> Result<bool> {
    let t = args.files.load()?;
    let time = seconds(args.time_limit)?;
    let start = std::time::Instant::now();
    let limits = Limits {
        time: Some(time),
        nodes: Some(args.node_limit),
        deadline: Some(start + time),
    };
    let external;
    let base: &dyn BasePlanner = match args.planner {
        PlannerChoice::Bfs => &Bfs,
        PlannerChoice::Gbfs => &Gbfs,
        PlannerChoice::External => {
            let mut p = ExternalPlanner::new(args.external.clone().expect("required by clap"));
            p.args = args.external_args.clone();
            external = p;
            &external
        }
    };
    if t.provably_unsolvable() {
        eprintln!("unsolvable: a goal is unreachable");
        return Ok(false);
    }
    let plan = if args.landmarks == Switch::On {
        let g = match extract_landmarks(&t, &PipelineOptions { exec, ..Default::default() }) {
            Ok(g) => g,
            Err(lmplan::Error::RelaxedUnsolvable) => {
                eprintln!("unsolvable: goal unreachable under the delete relaxation");
                return Ok(false);
            }
            Err(e) => return Err(e.into()),
        };
        log::info!("{} landmarks, {} orders", g.len(), g.num_edges());
        let cfg = ControlConfig {
            mode: args.mode.into(),
            safety_net: args.safety_net,
            limits,
        };
        let trace = run_control(&t, g, base, &cfg)?;
        eprintln!(
            "{} iterations, {} expanded, {:.3}s",
            trace.iterations.len(),
            trace.expanded,
            trace.elapsed.as_secs_f64()
        );
        match trace.outcome {
            ControlOutcome::Solved => Some(trace.plan),
            ControlOutcome::SubtaskFailed(i) => {
                eprintln!("failed: base planner found no plan for sub-task {i}");
                None
            }
            ControlOutcome::BasePlannerFailed => {
                eprintln!("failed: base planner found no plan for the final goal");
                None
            }
        }
    } else {
        let r = base.solve(&t, &limits);
        eprintln!("{} expanded, {:.3}s", r.stats.expanded, r.stats.elapsed.as_secs_f64());
        match r.outcome {
            Outcome::Plan(p) => Some(p),
            Outcome::ProvedUnsolvable => {
                eprintln!("unsolvable");
                None
            }
            Outcome::ResourceExhausted => {
                eprintln!("failed: limits reached");
                None
            }
        }
    };
    match plan {
        Some(p) => {
            if !t.validate_plan(&p) {
                bail!("internal error: produced plan does not validate");
            }
            eprintln!("plan length {}", p.len());
            emit_plan(&t, &p, args.out.as_deref())?;
            Ok(true)
        }
        None => Ok(false),
    }
}

fn bench(args: &BenchArgs, exec: Execution) -> Result<bool> {
    let text = fs::read_to_string(&args.suite).with_context(|| format!("reading {}", args.suite.display()))?;
    let file: BenchFile = toml::from_str(&text).with_context(|| format!("in {}", args.suite.display()))?;
    let limit = seconds(args.time_limit.unwrap_or(file.time_limit))?;
    let configs = file
        .configs
        .iter()
        .map(|c| BenchConfig::from_label(c, limit).with_context(|| format!("unknown configuration {c}")))
        .collect::<Result<Vec<_>>>()?;
    let records = run_benchmark(&file.suite, &configs, exec);
    match &args.out {
        Some(p) => write_csv(&records, fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?,
        None => write_csv(&records, std::io::stdout().lock())?,
    }
    if let Some(p) = &args.series {
        write_series(&records, fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)?;
    }
    let solved = records.iter().filter(|r| r.solved()).count();
    eprintln!("{solved}/{} runs solved", records.len());
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Ground { files, list, propositional } => {
            let t = files.load()?;
            println!("facts {} actions {}", t.num_facts(), t.num_actions());
            if t.provably_unsolvable() {
                println!("goal unreachable");
            }
            if list {
                for f in t.fact_ids() {
                    println!("fact {}", t.fact_name(f));
                }
                for a in t.actions() {
                    println!("action {}", a.name);
                }
            }
            if let Some(dir) = propositional {
                fs::create_dir_all(&dir)?;
                let names = PropositionalNames::new(&t);
                fs::write(dir.join("domain.pddl"), write_domain(&t, &names))?;
                fs::write(dir.join("problem.pddl"), write_problem(&t, &names))?;
            }
            Ok(true)
        }
        Command::Landmarks {
            files,
            no_level_test,
            no_lookahead,
            no_reasonable,
            no_obedient,
            emit,
        } => {
            let t = files.load()?;
            let opts = PipelineOptions {
                level_test: !no_level_test,
                lookahead: !no_lookahead,
                reasonable: !no_reasonable,
                obedient: !no_obedient,
                exec,
            };
            let g = extract_landmarks(&t, &opts)?;
            let mut out = std::io::stdout().lock();
            match emit {
                Emit::Dot => write!(out, "{}", g.to_dot(&t))?,
                Emit::Json => writeln!(out, "{}", g.to_json(&t))?,
                Emit::Text => {
                    for f in g.nodes().iter() {
                        writeln!(out, "{}", t.fact_name(f))?;
                    }
                    for e in g.edges() {
                        writeln!(out, "{} -{}-> {}", t.fact_name(e.from), e.kind.label(), t.fact_name(e.to))?;
                    }
                }
            }
            Ok(true)
        }
        Command::Plan(args) => plan(&args, exec),
        Command::Oracle { files, cap, query } => {
            let t = files.load()?;
            let o = Oracle::new(&t, cap)?;
            let answer = match &query {
                OracleQuery::Landmark { fact: f } => o.landmark(fact(&t, f)?),
                OracleQuery::Gn { l, l2 } => o.greedy_necessary(fact(&t, l)?, fact(&t, l2)?),
                OracleQuery::N { l, l2 } => o.necessary(fact(&t, l)?, fact(&t, l2)?),
                OracleQuery::R { l, l2 } => o.reasonable(fact(&t, l)?, fact(&t, l2)?),
                OracleQuery::Mutex { x, y } => {
                    let (x, y) = (fact(&t, x)?, fact(&t, y)?);
                    let answer = o.inconsistent(x, y);
                    eprintln!("detected by the mutex analysis: {}", compute_mutexes(&t).query(x, y));
                    answer
                }
            };
            println!("{answer}");
            Ok(true)
        }
        Command::Gen { domain_out, kind } => {
            let (text, domain) = match kind {
                GenKind::Blocksworld { blocks, variant, seed } => {
                    if blocks == 0 {
                        bail!("--blocks must be at least 1");
                    }
                    match variant {
                        VariantChoice::Arm => (
                            gen_blocksworld(blocks, BlocksVariant::Arm, seed),
                            lmplan::fixtures::BLOCKSWORLD_ARM_DOMAIN,
                        ),
                        VariantChoice::NoArm => (
                            gen_blocksworld(blocks, BlocksVariant::NoArm, seed),
                            lmplan::fixtures::BLOCKSWORLD_NO_ARM_DOMAIN,
                        ),
                    }
                }
                GenKind::Logistics {
                    cities,
                    locations,
                    planes,
                    packages,
                    seed,
                } => {
                    if cities == 0 || locations == 0 || planes == 0 || packages == 0 {
                        bail!("all logistics sizes must be at least 1");
                    }
                    (
                        gen_logistics(cities, locations, planes, packages, seed),
                        lmplan::fixtures::LOGISTICS_DOMAIN,
                    )
                }
            };
            if let Some(p) = domain_out {
                fs::write(&p, domain).with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{text}");
            Ok(true)
        }
        Command::Bench(args) => bench(&args, exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
