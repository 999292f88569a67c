//! Assume-guarantee verification and its monolithic counterpart.
//!
//! Every group that declares a goal contributes one task per member: the
//! member is checked against the goal with itself as the only agent, in
//! composition with an assumption about its environment. If every task
//! succeeds, the local strategies together form a joint strategy for the
//! conjunction of the goals. A local failure proves nothing about the full
//! system, since the assumption over-approximates it, so the combined answer
//! is then `Inconclusive`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::time::Duration;

use crate::approx::fixpoint_approx;
use crate::assume::{generate_assumption_with, Assumption};
use crate::compose::{compose_with, GlobalModel, Limits};
use crate::formula::{Formula, Predicate, Temporal};
use crate::spec::{ModuleDecl, SpecDocument};
use crate::strategy::{Answer, Strategy, Verdict};
use crate::synth::dfs_synthesize_with;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Dfs,
    Apprx,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Dfs => "dfs",
            Engine::Apprx => "apprx",
        }
    }

    pub fn run(self, m: &GlobalModel, f: &Formula, limits: Limits) -> Result<Verdict> {
        match self {
            Engine::Dfs => dfs_synthesize_with(m, f, limits),
            Engine::Apprx => fixpoint_approx(m, f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgrOptions {
    pub engine: Engine,
    pub distance: usize,
    pub limits: Limits,
    /// Hand-written assumptions by target module; they replace generation.
    pub assumptions: BTreeMap<String, ModuleDecl>,
    /// Monotonic time source used to fill in elapsed times.
    pub clock: Option<fn() -> Duration>,
}

impl Default for AgrOptions {
    fn default() -> Self {
        AgrOptions { engine: Engine::Dfs, distance: 1, limits: Limits::default(), assumptions: BTreeMap::new(), clock: None }
    }
}

impl AgrOptions {
    fn now(&self) -> Option<Duration> {
        self.clock.map(|c| c())
    }

    fn since(&self, start: Option<Duration>) -> Option<Duration> {
        Some(self.now()?.saturating_sub(start?))
    }
}

/// One local verification.
#[derive(Debug, Clone)]
pub struct AgrTask {
    pub target: String,
    pub goal: Formula,
    pub assumption: Assumption,
    pub user_assumption: bool,
    pub local_states: usize,
    pub local_transitions: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct AgrReport {
    pub answer: Answer,
    /// The conjunction of the local goals over the union of their agents.
    pub global_goal: Formula,
    pub tasks: Vec<AgrTask>,
    /// Union of the local witnesses, present iff `answer` is `Yes`.
    pub strategy: Option<Strategy>,
    pub elapsed: Option<Duration>,
}

/// Result of checking the global goal on the full composition.
#[derive(Debug, Clone)]
pub struct MonolithicReport {
    pub goal: Formula,
    pub states: usize,
    pub transitions: usize,
    pub verdict: Verdict,
    pub elapsed: Option<Duration>,
}

/// (member, local goal) for every member of every group with a goal.
pub fn local_goals(doc: &SpecDocument) -> Result<Vec<(String, Formula)>> {
    let mut out = Vec::new();
    let mut temporal = None;
    for g in doc.groups() {
        let Some(goal) = &g.goal else { continue };
        if *temporal.get_or_insert(goal.temporal) != goal.temporal {
            return Err(Error::MixedTemporalOperators);
        }
        for agent in &goal.coalition {
            if !g.members.contains(agent) {
                let owner = doc.group_of(agent).map_or_else(|| agent.clone(), |h| h.name.clone());
                if doc.group_of(agent).and_then(|h| h.goal.as_ref()).is_none() {
                    return Err(Error::MissingGoal(owner));
                }
            }
        }
        for member in &g.members {
            out.push((member.clone(), Formula::new(alloc::vec![member.clone()], goal.temporal, goal.predicate.clone())));
        }
    }
    if out.is_empty() {
        return Err(Error::MissingGoal("no group declares a GOAL".into()));
    }
    Ok(out)
}

/// The conjunction of all goals, with the union of the goal groups as the
/// coalition.
pub fn global_goal(doc: &SpecDocument) -> Result<Formula> {
    let goals = local_goals(doc)?;
    let mut coalition: Vec<String> = Vec::new();
    let mut parts: Vec<Predicate> = Vec::new();
    for g in doc.groups() {
        let Some(goal) = &g.goal else { continue };
        for m in &g.members {
            if !coalition.contains(m) {
                coalition.push(m.clone());
            }
        }
        if !parts.contains(&goal.predicate) {
            parts.push(goal.predicate.clone());
        }
    }
    Ok(Formula::new(coalition, goals[0].1.temporal, Predicate::conjunction(parts)))
}

pub fn verify_agr(doc: &SpecDocument, opts: &AgrOptions) -> Result<AgrReport> {
    let start = opts.now();
    let goals = local_goals(doc)?;
    let global = global_goal(doc)?;
    let mut tasks = Vec::new();
    for (target, goal) in goals {
        let t0 = opts.now();
        let (assumption, user) = match opts.assumptions.get(&target) {
            Some(m) => (Assumption::user_defined(doc, &target, m.clone())?, true),
            None => (generate_assumption_with(doc, &target, opts.distance, opts.limits)?, false),
        };
        let local = compose_with(&assumption.local_spec(doc)?, opts.limits)?;
        let mut verdict = opts.engine.run(&local, &goal, opts.limits)?;
        verdict.stats.elapsed = opts.since(t0);
        tasks.push(AgrTask {
            target,
            goal,
            assumption,
            user_assumption: user,
            local_states: local.num_states(),
            local_transitions: local.num_transitions(),
            verdict,
        });
    }
    let all_yes = tasks.iter().all(|t| t.verdict.answer == Answer::Yes);
    let strategy = all_yes.then(|| {
        let mut joint = Strategy::new();
        for t in &tasks {
            if let Some(w) = &t.verdict.witness {
                joint.merge(w);
            }
        }
        joint
    });
    Ok(AgrReport {
        answer: if all_yes { Answer::Yes } else { Answer::Inconclusive },
        global_goal: global,
        tasks,
        strategy,
        elapsed: opts.since(start),
    })
}

pub fn verify_monolithic(doc: &SpecDocument, opts: &AgrOptions) -> Result<MonolithicReport> {
    let start = opts.now();
    let goal = global_goal(doc)?;
    let m = compose_with(doc, opts.limits)?;
    let mut verdict = opts.engine.run(&m, &goal, opts.limits)?;
    let elapsed = opts.since(start);
    verdict.stats.elapsed = elapsed;
    Ok(MonolithicReport { goal, states: m.num_states(), transitions: m.num_transitions(), verdict, elapsed })
}

impl AgrReport {
    /// Local goals rendered as text, in task order.
    pub fn local_goals(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.goal.to_string()).collect()
    }

    pub fn is_always(&self) -> bool {
        self.global_goal.temporal == Temporal::Always
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose;
    use crate::parse_spec;
    use crate::strategy::check_strategy;
    use crate::voting::generate_simple_voting;

    #[test]
    fn voting_agr_transfers() {
        for engine in [Engine::Dfs, Engine::Apprx] {
            let doc = generate_simple_voting(2).unwrap();
            let opts = AgrOptions { engine, ..AgrOptions::default() };
            let report = verify_agr(&doc, &opts).unwrap();
            assert_eq!(report.answer, Answer::Yes);
            assert_eq!(report.tasks.len(), 1);
            let m = compose(&doc).unwrap();
            let joint = report.strategy.unwrap();
            assert_eq!(check_strategy(&m, &joint, &report.global_goal).unwrap().answer, Answer::Yes);
        }
    }

    #[test]
    fn monolithic_agrees() {
        let doc = generate_simple_voting(2).unwrap();
        let r = verify_monolithic(&doc, &AgrOptions::default()).unwrap();
        assert_eq!(r.states, 529);
        assert_eq!(r.verdict.answer, Answer::Yes);
    }

    #[test]
    fn goals_are_required() {
        let doc = parse_spec("MODULE A\n STATE a [ ]\n INIT a\n").unwrap();
        assert!(matches!(verify_agr(&doc, &AgrOptions::default()), Err(Error::MissingGoal(_))));
    }

    #[test]
    fn mixed_operators_are_rejected() {
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a [ x=0 ]\n INIT a\n\
             MODULE B\n VAR y : { 0, 1 }\n STATE b [ y=0 ]\n INIT b\n\
             GROUP GA { A } GOAL \"<<A>> G x=0\"\nGROUP GB { B } GOAL \"<<B>> F y=1\"\n",
        )
        .unwrap();
        assert_eq!(verify_agr(&doc, &AgrOptions::default()).unwrap_err(), Error::MixedTemporalOperators);
    }

    #[test]
    fn local_failure_is_inconclusive() {
        // The scheduler may starve A forever, so B cannot force y=1.
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a0 [ x=0 ]\n STATE a1 [ x=1 ]\n INIT a0\n TRANS a0 -> a1 ;\n\
             MODULE B\n VAR y : { 0, 1 }\n INPUT x\n STATE b0 [ y=0 ]\n STATE b1 [ y=1 ]\n INIT b0\n TRANS b0 -> b1 [ x=1 ] ;\n\
             GROUP GA { A }\nGROUP GB { B } GOAL \"<<B>> F y=1\"\n",
        )
        .unwrap();
        let report = verify_agr(&doc, &AgrOptions::default()).unwrap();
        assert_eq!(report.answer, Answer::Inconclusive);
        assert!(report.strategy.is_none());
    }
}
