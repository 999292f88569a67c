use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use agrmc::api::{parse_module, Api, ApiConfig};
use agrmc::export::{export_model, model_dot, module_dot};
use agrmc::report::{self, error_code, exit_code, limits_from_env, Mode, VerifyReport, VerifyRequest};
use agrmc_core::{compose_with, generate_simple_voting, parse_spec, print_module, print_spec, Engine, Error, SpecDocument};
use clap::{Parser, Subcommand, ValueEnum};

const USAGE_EXIT: u8 = 3;

// Writes to stdout that tolerate a closed pipe (`agrmc ... | head`).
macro_rules! outln {
    ($($t:tt)*) => {{
        let _ = std::io::Write::write_fmt(&mut std::io::stdout(), format_args!("{}\n", format_args!($($t)*)));
    }};
}

macro_rules! out {
    ($($t:tt)*) => {{
        let _ = std::io::Write::write_fmt(&mut std::io::stdout(), format_args!($($t)*));
    }};
}

#[derive(Parser)]
#[command(name = "agrmc", version, about = "Strategic model checking of asynchronous multi-agent systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelFormat {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssumptionFormat {
    Stv,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mono,
    Agr,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchMode {
    Mono,
    Agr,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Dfs,
    Apprx,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Dfs => Engine::Dfs,
            EngineArg::Apprx => Engine::Apprx,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the interleaving composition of a specification.
    Compose {
        spec: PathBuf,
        #[arg(long, value_enum)]
        export: Option<ModelFormat>,
    },
    /// Generate the assumption for one module.
    Assume {
        spec: PathBuf,
        #[arg(long)]
        module: String,
        #[arg(long, default_value_t = 1)]
        distance: usize,
        #[arg(long, value_enum)]
        export: Option<AssumptionFormat>,
    },
    /// Verify the goals declared in a specification.
    Verify {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "agr")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "dfs")]
        engine: EngineArg,
        #[arg(long, default_value_t = 1)]
        distance: usize,
        /// Hand-written assumption, as `FILE` or `MODULE=FILE`.
        #[arg(long)]
        assumption: Vec<String>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a benchmark family and print one table row per instance.
    Bench {
        #[command(subcommand)]
        family: Family,
    },
    /// Print a generated benchmark specification.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Append-only job log to reload results from.
        #[arg(long)]
        jobs: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Simple Voting with `k` voters and one coercer.
    Voting {
        #[arg(long)]
        voters: usize,
        #[arg(long, value_enum, default_value = "both")]
        mode: BenchMode,
        #[arg(long, value_enum, default_value = "dfs")]
        engine: EngineArg,
        #[arg(long, default_value_t = 1)]
        distance: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn load(path: &PathBuf) -> Result<SpecDocument, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_spec(&text)?)
}

/// `MODULE=FILE`, or `FILE` with the target inferred from the interface.
fn load_assumption(doc: &SpecDocument, arg: &str) -> Result<(String, agrmc_core::ModuleDecl), Failure> {
    let (target, file) = match arg.split_once('=') {
        Some((t, f)) if doc.module(t).is_some() => (Some(t.to_string()), f),
        _ => (None, arg),
    };
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Io(format!("{file}: {e}")))?;
    let module = parse_module(&text)?;
    let target = match target {
        Some(t) => t,
        None => {
            let provides = |m: &agrmc_core::ModuleDecl| {
                let mut inputs: Vec<&str> = m.inputs.iter().map(|i| i.name.as_str()).collect();
                let mut vars: Vec<&str> = module.state_vars.iter().map(|v| v.name.as_str()).collect();
                inputs.sort();
                vars.sort();
                !inputs.is_empty() && inputs == vars
            };
            let candidates: Vec<&str> = doc.modules().iter().filter(|m| provides(m)).map(|m| m.name.as_str()).collect();
            match candidates.as_slice() {
                [one] => one.to_string(),
                _ => {
                    return Err(Failure::Core(Error::InvalidAssumption(format!(
                        "cannot tell which module `{}` is for; use MODULE=FILE",
                        module.name
                    ))))
                }
            }
        }
    };
    Ok((target, module))
}

fn print_verify(r: &VerifyReport) {
    outln!("answer: {}", r.answer);
    outln!("goal: {}", r.goal);
    if let (Some(s), Some(t)) = (r.states, r.transitions) {
        outln!("model: {s} states, {t} transitions");
    }
    for task in &r.tasks {
        outln!(
            "task {}: {} | assumption {} ({} states) | local {} states, {} transitions | {}",
            task.target,
            task.goal,
            task.assumption.name,
            task.assumption.states,
            task.local_states,
            task.local_transitions,
            task.verdict.answer
        );
    }
    if let Some(strategy) = &r.strategy {
        outln!("strategy:");
        for e in strategy {
            let inputs: Vec<String> = e.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
            outln!("  {} @ {} {{{}}} -> {}", e.agent, e.local_state, inputs.join(", "), e.action);
        }
    }
    if let Some(trace) = &r.counterexample {
        outln!("counterexample:");
        for (i, v) in trace.valuations.iter().enumerate() {
            let marker = if trace.loop_start == Some(i) { " <- loop" } else { "" };
            let vals: Vec<String> = v.iter().map(|(k, v)| format!("{k}={v}")).collect();
            outln!("  s{} [{}]{marker}", trace.states[i], vals.join(", "));
            if let Some(m) = trace.moves.get(i) {
                outln!("    {m}");
            }
        }
    }
}

struct Cell {
    states: String,
    transitions: String,
    seconds: String,
    result: String,
}

impl Cell {
    fn skipped() -> Self {
        Cell { states: "-".into(), transitions: "-".into(), seconds: "-".into(), result: "-".into() }
    }

    fn failed(e: &Error) -> Self {
        let result = match e {
            Error::ResourceLimit { .. } => "memout".to_string(),
            other => format!("error: {other}"),
        };
        Cell { states: "-".into(), transitions: "-".into(), seconds: "-".into(), result }
    }
}

fn seconds(ms: Option<f64>) -> String {
    ms.map(|m| format!("{:.2}", m / 1000.0)).unwrap_or_else(|| "-".into())
}

fn bench_voting(k: usize, mode: BenchMode, engine: Engine, distance: usize, json: bool) -> Result<ExitCode, Failure> {
    let doc = generate_simple_voting(k)?;
    let limits = limits_from_env();
    let run = |m: Mode| report::verify(&doc, &VerifyRequest { mode: m, engine, distance, limits, ..VerifyRequest::default() });
    let mono = matches!(mode, BenchMode::Mono | BenchMode::Both).then(|| run(Mode::Mono));
    let agr = matches!(mode, BenchMode::Agr | BenchMode::Both).then(|| run(Mode::Agr));
    if json {
        let cell = |r: &Option<Result<VerifyReport, Error>>| match r {
            None => serde_json::Value::Null,
            Some(Ok(r)) => serde_json::to_value(r).unwrap(),
            Some(Err(e @ Error::ResourceLimit { .. })) => serde_json::json!({ "memout": e.to_string() }),
            Some(Err(e)) => serde_json::json!({ "error": e.to_string() }),
        };
        let row = serde_json::json!({ "voters": k, "engine": engine.name(), "mono": cell(&mono), "agr": cell(&agr) });
        outln!("{}", serde_json::to_string_pretty(&row).unwrap());
        return Ok(ExitCode::SUCCESS);
    }
    let mono_cell = match &mono {
        None => Cell::skipped(),
        Some(Err(e)) => Cell::failed(e),
        Some(Ok(r)) => Cell {
            states: r.states.map(|s| s.to_string()).unwrap_or_default(),
            transitions: r.transitions.map(|s| s.to_string()).unwrap_or_default(),
            seconds: seconds(r.millis),
            result: r.answer.clone(),
        },
    };
    let agr_cell = match &agr {
        None => Cell::skipped(),
        Some(Err(e)) => Cell::failed(e),
        Some(Ok(r)) => {
            // Sizes of the first task: Voter1 with its assumption.
            let t = r.tasks.first();
            Cell {
                states: t.map(|t| t.local_states.to_string()).unwrap_or_default(),
                transitions: t.map(|t| t.local_transitions.to_string()).unwrap_or_default(),
                seconds: seconds(r.millis),
                result: r.answer.clone(),
            }
        }
    };
    let mut out = String::new();
    writeln!(
        out,
        "{:>6} | {:>10} {:>12} {:>9} {:>8} | {:>10} {:>12} {:>9} {:>8}",
        "voters", "mono st", "mono tr", "mono s", "mono", "ag st", "ag tr", "ag s", "ag"
    )
    .unwrap();
    writeln!(
        out,
        "{:>6} | {:>10} {:>12} {:>9} {:>8} | {:>10} {:>12} {:>9} {:>8}",
        k,
        mono_cell.states,
        mono_cell.transitions,
        mono_cell.seconds,
        mono_cell.result,
        agr_cell.states,
        agr_cell.transitions,
        agr_cell.seconds,
        agr_cell.result
    )
    .unwrap();
    out!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let limits = limits_from_env();
    match cli.command {
        Command::Compose { spec, export } => {
            let doc = load(&spec)?;
            let m = compose_with(&doc, limits)?;
            match export {
                None => outln!("{} states, {} transitions", m.num_states(), m.num_transitions()),
                Some(ModelFormat::Json) => outln!("{}", serde_json::to_string_pretty(&export_model(&m)).unwrap()),
                Some(ModelFormat::Dot) => out!("{}", model_dot(&m)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Assume { spec, module, distance, export } => {
            let doc = load(&spec)?;
            let (a, sizes) = report::generate(&doc, &module, distance, limits)?;
            match export {
                None => {
                    eprintln!(
                        "{}: {} states, {} transitions (product of {{{}}}: {} states); {} with it: {} states, {} transitions",
                        a.module.name,
                        a.module.states.len(),
                        a.module.transitions.len(),
                        a.sources.join(", "),
                        a.product_states,
                        module,
                        sizes.local_states,
                        sizes.local_transitions
                    );
                    out!("{}", print_module(&a.module));
                }
                Some(AssumptionFormat::Stv) => out!("{}", print_module(&a.module)),
                Some(AssumptionFormat::Json) => outln!("{}", serde_json::to_string_pretty(&sizes).unwrap()),
                Some(AssumptionFormat::Dot) => out!("{}", module_dot(&a.module)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { spec, mode, engine, distance, assumption, json } => {
            let doc = load(&spec)?;
            let mut assumptions = BTreeMap::new();
            for arg in &assumption {
                let (target, module) = load_assumption(&doc, arg)?;
                assumptions.insert(target, module);
            }
            let mode = match mode {
                ModeArg::Mono => Mode::Mono,
                ModeArg::Agr => Mode::Agr,
            };
            let req = VerifyRequest { mode, engine: engine.into(), distance, assumptions, limits };
            let r = report::verify(&doc, &req)?;
            if json {
                outln!("{}", serde_json::to_string_pretty(&r).unwrap());
            } else {
                print_verify(&r);
            }
            Ok(ExitCode::from(exit_code(r.answer()) as u8))
        }
        Command::Bench { family: Family::Voting { voters, mode, engine, distance, json } } => {
            bench_voting(voters, mode, engine.into(), distance, json)
        }
        Command::Gen { family: Family::Voting { voters, .. } } => {
            out!("{}", print_spec(&generate_simple_voting(voters)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { addr, jobs } => {
            let mut config = ApiConfig::from_env();
            config.job_file = jobs;
            let api = Api::new(config).map_err(|e| Failure::Io(e.to_string()))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            rt.block_on(agrmc::server::serve(api, addr)).map_err(|e| Failure::Io(e.to_string()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE_EXIT) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e) as u8)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
