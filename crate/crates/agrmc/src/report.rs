//! Serializable reports shared by the CLI and the service, and the
//! verification pipeline that produces them.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use agrmc_core::agr::{AgrTask, MonolithicReport};
use agrmc_core::assume::generate_assumption_with;
use agrmc_core::strategy::{Stats, Trace};
use agrmc_core::{
    compose_with, print_module, verify_agr, verify_monolithic, AgrOptions, AgrReport,
    Answer, Assumption, Engine, Error, Limits, ModuleDecl, SpecDocument, Strategy, Verdict,
};
use serde::{Deserialize, Serialize};

/// Monotonic clock for the core's timing hooks.
pub fn now() -> Duration {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed()
}

fn millis(d: Option<Duration>) -> Option<f64> {
    d.map(|d| d.as_secs_f64() * 1000.0)
}

/// Caps from `AGRMC_STATE_CAP` / `AGRMC_TRANS_CAP`, defaulting to the
/// core's limits.
pub fn limits_from_env() -> Limits {
    let mut limits = Limits::default();
    let read = |name: &str| std::env::var(name).ok().and_then(|v| v.trim().replace('_', "").parse::<f64>().ok());
    if let Some(v) = read("AGRMC_STATE_CAP") {
        limits.max_states = v as usize;
    }
    if let Some(v) = read("AGRMC_TRANS_CAP") {
        limits.max_transitions = v as usize;
    }
    limits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mono,
    Agr,
}

pub fn parse_engine(s: &str) -> Option<Engine> {
    match s {
        "dfs" => Some(Engine::Dfs),
        "apprx" => Some(Engine::Apprx),
        _ => None,
    }
}

pub fn answer_name(a: Answer) -> &'static str {
    match a {
        Answer::Yes => "Yes",
        Answer::No => "No",
        Answer::Inconclusive => "Inconclusive",
    }
}

/// Process exit status for a verdict.
pub fn exit_code(a: Answer) -> i32 {
    match a {
        Answer::Yes => 0,
        Answer::No => 1,
        Answer::Inconclusive => 2,
    }
}

/// Process exit status for an error: 5 for exhausted caps, 4 otherwise.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::ResourceLimit { .. } => 5,
        _ => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub agent: String,
    pub local_state: String,
    pub inputs: BTreeMap<String, String>,
    pub action: String,
}

pub fn strategy_entries(s: &Strategy) -> Vec<StrategyEntry> {
    s.iter()
        .map(|(v, a)| StrategyEntry {
            agent: v.agent.clone(),
            local_state: v.local_state.clone(),
            inputs: v.inputs.iter().cloned().collect(),
            action: a.to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub states: Vec<usize>,
    pub valuations: Vec<BTreeMap<String, String>>,
    pub moves: Vec<String>,
    pub loop_start: Option<usize>,
}

impl From<&Trace> for TraceReport {
    fn from(t: &Trace) -> Self {
        TraceReport {
            states: t.states.clone(),
            valuations: t.valuations.iter().map(|v| v.iter().cloned().collect()).collect(),
            moves: t.moves.clone(),
            loop_start: t.loop_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub states: usize,
    pub transitions: usize,
    pub visited: u64,
    pub millis: Option<f64>,
}

impl From<&Stats> for StatsReport {
    fn from(s: &Stats) -> Self {
        StatsReport { states: s.states, transitions: s.transitions, visited: s.visited, millis: millis(s.elapsed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub answer: String,
    pub strategy: Option<Vec<StrategyEntry>>,
    pub counterexample: Option<TraceReport>,
    pub stats: StatsReport,
}

impl From<&Verdict> for VerdictReport {
    fn from(v: &Verdict) -> Self {
        VerdictReport {
            answer: answer_name(v.answer).into(),
            strategy: v.witness.as_ref().map(strategy_entries),
            counterexample: v.counterexample.as_ref().map(TraceReport::from),
            stats: (&v.stats).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub target: String,
    pub name: String,
    pub sources: Vec<String>,
    pub distance: usize,
    pub user_defined: bool,
    pub states: usize,
    pub transitions: usize,
    pub product_states: usize,
    pub product_transitions: usize,
    pub text: String,
}

impl AssumptionReport {
    pub fn new(a: &Assumption, user_defined: bool) -> Self {
        AssumptionReport {
            target: a.target.clone(),
            name: a.module.name.clone(),
            sources: a.sources.clone(),
            distance: a.distance,
            user_defined,
            states: a.module.states.len(),
            transitions: a.module.transitions.len(),
            product_states: a.product_states,
            product_transitions: a.product_transitions,
            text: print_module(&a.module),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub target: String,
    pub goal: String,
    pub assumption: AssumptionReport,
    pub local_states: usize,
    pub local_transitions: usize,
    pub verdict: VerdictReport,
}

impl From<&AgrTask> for TaskReport {
    fn from(t: &AgrTask) -> Self {
        TaskReport {
            target: t.target.clone(),
            goal: t.goal.to_string(),
            assumption: AssumptionReport::new(&t.assumption, t.user_assumption),
            local_states: t.local_states,
            local_transitions: t.local_transitions,
            verdict: (&t.verdict).into(),
        }
    }
}

/// Outcome of one verification run, in either mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub engine: String,
    pub answer: String,
    /// The global goal: the conjunction of the declared local goals.
    pub goal: String,
    pub local_goals: Vec<String>,
    /// Size of the model actually explored (monolithic mode only).
    pub states: Option<usize>,
    pub transitions: Option<usize>,
    pub tasks: Vec<TaskReport>,
    pub strategy: Option<Vec<StrategyEntry>>,
    pub counterexample: Option<TraceReport>,
    pub millis: Option<f64>,
}

impl VerifyReport {
    pub fn answer(&self) -> Answer {
        match self.answer.as_str() {
            "Yes" => Answer::Yes,
            "No" => Answer::No,
            _ => Answer::Inconclusive,
        }
    }

    fn from_agr(r: &AgrReport, engine: Engine) -> Self {
        VerifyReport {
            mode: Mode::Agr,
            engine: engine.name().into(),
            answer: answer_name(r.answer).into(),
            goal: r.global_goal.to_string(),
            local_goals: r.local_goals(),
            states: None,
            transitions: None,
            tasks: r.tasks.iter().map(TaskReport::from).collect(),
            strategy: r.strategy.as_ref().map(strategy_entries),
            counterexample: None,
            millis: millis(r.elapsed),
        }
    }

    fn from_mono(r: &MonolithicReport, engine: Engine) -> Self {
        VerifyReport {
            mode: Mode::Mono,
            engine: engine.name().into(),
            answer: answer_name(r.verdict.answer).into(),
            goal: r.goal.to_string(),
            local_goals: Vec::new(),
            states: Some(r.states),
            transitions: Some(r.transitions),
            tasks: Vec::new(),
            strategy: r.verdict.witness.as_ref().map(strategy_entries),
            counterexample: r.verdict.counterexample.as_ref().map(TraceReport::from),
            millis: millis(r.elapsed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyRequest {
    pub mode: Mode,
    pub engine: Engine,
    pub distance: usize,
    pub assumptions: BTreeMap<String, ModuleDecl>,
    pub limits: Limits,
}

impl Default for VerifyRequest {
    fn default() -> Self {
        VerifyRequest {
            mode: Mode::Agr,
            engine: Engine::Dfs,
            distance: 1,
            assumptions: BTreeMap::new(),
            limits: Limits::default(),
        }
    }
}

pub fn verify(doc: &SpecDocument, req: &VerifyRequest) -> Result<VerifyReport, Error> {
    let opts = AgrOptions {
        engine: req.engine,
        distance: req.distance,
        limits: req.limits,
        assumptions: req.assumptions.clone(),
        clock: Some(now),
    };
    match req.mode {
        Mode::Agr => Ok(VerifyReport::from_agr(&verify_agr(doc, &opts)?, req.engine)),
        Mode::Mono => Ok(VerifyReport::from_mono(&verify_monolithic(doc, &opts)?, req.engine)),
    }
}

/// An assumption together with the size of `target ∥ assumption`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionSizes {
    pub assumption: AssumptionReport,
    pub local_states: usize,
    pub local_transitions: usize,
}

pub fn assumption_sizes(doc: &SpecDocument, a: &Assumption, user: bool, limits: Limits) -> Result<AssumptionSizes, Error> {
    let local = compose_with(&a.local_spec(doc)?, limits)?;
    Ok(AssumptionSizes {
        assumption: AssumptionReport::new(a, user),
        local_states: local.num_states(),
        local_transitions: local.num_transitions(),
    })
}

pub fn generate(doc: &SpecDocument, target: &str, distance: usize, limits: Limits) -> Result<(Assumption, AssumptionSizes), Error> {
    let a = generate_assumption_with(doc, target, distance, limits)?;
    let sizes = assumption_sizes(doc, &a, false, limits)?;
    Ok((a, sizes))
}
