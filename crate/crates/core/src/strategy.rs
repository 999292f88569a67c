//! Uniform memoryless strategies and outcome checking.
//!
//! A [`Strategy`] maps views to action names, so it is uniform by
//! construction: states an agent cannot distinguish receive the same choice.
//! Outcomes are taken over the submodel that keeps only the chosen moves of
//! coalition agents and every move of everyone else, scheduler included.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use crate::compose::{Edge, GlobalModel, View, ViewTable};
use crate::formula::{Formula, Predicate, Temporal};
use crate::{Error, Result};

/// Per-agent map from views to action names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Strategy {
    choices: BTreeMap<View, String>,
}

impl Strategy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the choice at `view`, returning the previous one.
    pub fn insert(&mut self, view: View, action: impl Into<String>) -> Option<String> {
        self.choices.insert(view, action.into())
    }

    pub fn get(&self, view: &View) -> Option<&str> {
        self.choices.get(view).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Entries in canonical order: agent, local state, inputs.
    pub fn iter(&self) -> impl Iterator<Item = (&View, &str)> {
        self.choices.iter().map(|(v, a)| (v, a.as_str()))
    }

    pub fn agents(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.choices.keys().map(|v| v.agent.as_str()).collect();
        out.dedup();
        out
    }

    /// Union of two strategies; on conflicts `other` wins.
    pub fn merge(&mut self, other: &Strategy) {
        for (v, a) in &other.choices {
            self.choices.insert(v.clone(), a.clone());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub states: usize,
    pub transitions: usize,
    /// States expanded by the engine, counting revisits across branches.
    pub visited: u64,
    pub elapsed: Option<Duration>,
}

/// A finite path, or a lasso when `loop_start` is set (the last state
/// steps back to `states[loop_start]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<usize>,
    pub valuations: Vec<Vec<(String, String)>>,
    /// `moves[i]` leads from `states[i]` to `states[i + 1]`, as `Module.action`.
    pub moves: Vec<String>,
    pub loop_start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub answer: Answer,
    pub witness: Option<Strategy>,
    pub counterexample: Option<Trace>,
    pub stats: Stats,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

/// Predicate compiled to (variable id, value index) atoms.
#[derive(Debug, Clone)]
enum Compiled {
    Const(bool),
    Atom(usize, u16),
    Not(alloc::boxed::Box<Compiled>),
    And(alloc::boxed::Box<Compiled>, alloc::boxed::Box<Compiled>),
    Or(alloc::boxed::Box<Compiled>, alloc::boxed::Box<Compiled>),
}

fn compile_predicate(m: &GlobalModel, p: &Predicate) -> Result<Compiled> {
    Ok(match p {
        Predicate::Const(b) => Compiled::Const(*b),
        Predicate::Atom { var, value } => {
            let id = m.vars.id(var).ok_or_else(|| Error::UnknownVariable(var.clone()))?;
            let x = m
                .vars
                .value_index(id, value)
                .ok_or_else(|| Error::DomainMismatch { var: var.clone(), value: value.clone() })?;
            Compiled::Atom(id, x)
        }
        Predicate::Not(a) => Compiled::Not(compile_predicate(m, a)?.into()),
        Predicate::And(a, b) => Compiled::And(compile_predicate(m, a)?.into(), compile_predicate(m, b)?.into()),
        Predicate::Or(a, b) => Compiled::Or(compile_predicate(m, a)?.into(), compile_predicate(m, b)?.into()),
    })
}

fn eval(m: &GlobalModel, s: usize, p: &Compiled) -> bool {
    match p {
        Compiled::Const(b) => *b,
        Compiled::Atom(var, x) => m.value_index(s, *var) == *x,
        Compiled::Not(a) => !eval(m, s, a),
        Compiled::And(a, b) => eval(m, s, a) && eval(m, s, b),
        Compiled::Or(a, b) => eval(m, s, a) || eval(m, s, b),
    }
}

pub fn eval_predicate(m: &GlobalModel, s: usize, pred: &Predicate) -> Result<bool> {
    if s >= m.num_states() {
        return Err(Error::InvalidParameter(format!("state {s} out of range")));
    }
    Ok(eval(m, s, &compile_predicate(m, pred)?))
}

/// A model paired with an objective: coalition views and the predicate's
/// truth set, shared by all engines.
pub(crate) struct Game<'m> {
    pub model: &'m GlobalModel,
    pub temporal: Temporal,
    /// Coalition members as module indices.
    pub coalition: Vec<usize>,
    /// Module index -> position in `coalition`.
    pub member: Vec<Option<usize>>,
    pub views: Vec<ViewTable>,
    pub sat: Vec<bool>,
}

/// Choice per coalition member and dense view id.
pub(crate) type Choices = Vec<Vec<Option<u16>>>;

impl<'m> Game<'m> {
    pub fn new(model: &'m GlobalModel, f: &Formula) -> Result<Self> {
        let mut coalition = Vec::new();
        for agent in &f.coalition {
            let a = model.module_index(agent).ok_or_else(|| Error::UnknownAgent(agent.clone()))?;
            if !coalition.contains(&a) {
                coalition.push(a);
            }
        }
        if coalition.is_empty() {
            return Err(Error::InvalidParameter("empty coalition".into()));
        }
        coalition.sort_unstable();
        let mut member = vec![None; model.module_count()];
        for (i, &a) in coalition.iter().enumerate() {
            member[a] = Some(i);
        }
        let views = coalition.iter().map(|&a| model.view_table(a)).collect();
        let pred = compile_predicate(model, &f.predicate)?;
        let sat = (0..model.num_states()).map(|s| eval(model, s, &pred)).collect();
        Ok(Game { model, temporal: f.temporal, coalition, member, views, sat })
    }

    pub fn empty_choices(&self) -> Choices {
        self.views.iter().map(|t| vec![None; t.len()]).collect()
    }

    #[inline]
    pub fn view(&self, ci: usize, s: usize) -> usize {
        self.views[ci].of_state[s] as usize
    }

    /// States every coalition member confuses with the initial state.
    pub fn start_set(&self) -> Vec<u32> {
        let init = self.model.initial();
        (0..self.model.num_states())
            .filter(|&t| (0..self.coalition.len()).all(|ci| self.view(ci, t) == self.view(ci, init)))
            .map(|t| t as u32)
            .collect()
    }

    /// `Some(true)` if the edge survives under `choices`, `None` if the
    /// owning coalition member has no choice at this view yet.
    #[inline]
    pub fn allowed(&self, choices: &Choices, s: usize, e: &Edge) -> Option<bool> {
        match self.member[e.module as usize] {
            None => Some(true),
            Some(ci) => choices[ci][self.view(ci, s)].map(|a| a == e.action),
        }
    }

    pub fn named_view(&self, ci: usize, view: usize) -> View {
        self.model.named_view(self.coalition[ci], &self.views[ci].keys[view])
    }

    /// Resolves a named strategy to dense choices, checking enabledness.
    pub fn resolve(&self, sigma: &Strategy) -> Result<Choices> {
        let mut choices = self.empty_choices();
        for (ci, table) in self.views.iter().enumerate() {
            let module = &self.model.modules[table.agent];
            for v in 0..table.len() {
                let view = self.named_view(ci, v);
                if let Some(action) = sigma.get(&view) {
                    let idx = module.actions.iter().position(|a| a == action);
                    match idx {
                        Some(i) if table.actions[v].contains(&(i as u16)) => choices[ci][v] = Some(i as u16),
                        _ => {
                            return Err(Error::InvalidStrategy {
                                agent: view.agent.clone(),
                                view: view.to_string(),
                                action: action.to_string(),
                            })
                        }
                    }
                }
            }
        }
        Ok(choices)
    }

    /// Named strategy over every coalition view; unset views get their
    /// first enabled action.
    pub fn complete(&self, choices: &Choices) -> Strategy {
        let mut sigma = Strategy::new();
        for (ci, table) in self.views.iter().enumerate() {
            for v in 0..table.len() {
                let action = choices[ci][v].unwrap_or(table.actions[v][0]);
                sigma.insert(self.named_view(ci, v), self.model.action_name(table.agent, action));
            }
        }
        sigma
    }

    pub fn partial_error(&self, choices: &Choices, s: usize) -> Error {
        let ci = (0..self.coalition.len()).find(|&ci| choices[ci][self.view(ci, s)].is_none()).unwrap_or(0);
        let view = self.named_view(ci, self.view(ci, s));
        Error::PartialStrategy { agent: view.agent.clone(), view: view.to_string() }
    }

    pub fn trace(&self, states: Vec<usize>, edges: Vec<Edge>, loop_start: Option<usize>) -> Trace {
        let m = self.model;
        Trace {
            valuations: states
                .iter()
                .map(|&s| m.valuation(s).into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect())
                .collect(),
            moves: edges
                .iter()
                .map(|e| format!("{}.{}", m.module_name(e.module as usize), m.action_name(e.module as usize, e.action)))
                .collect(),
            states,
            loop_start,
        }
    }

    /// Outcome check of fully resolved choices from `start`.
    /// Returns the counterexample on failure.
    pub fn check(&self, choices: &Choices, start: &[u32]) -> Result<(Option<Trace>, usize)> {
        match self.temporal {
            Temporal::Always => self.check_always(choices, start),
            Temporal::Eventually => self.check_eventually(choices, start),
        }
    }

    fn check_always(&self, choices: &Choices, start: &[u32]) -> Result<(Option<Trace>, usize)> {
        let n = self.model.num_states();
        const NONE: u32 = u32::MAX;
        let mut parent = vec![NONE; n];
        let mut via: Vec<Option<Edge>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &s in start {
            if !seen[s as usize] {
                seen[s as usize] = true;
                queue.push_back(s as usize);
            }
        }
        let mut reached = 0;
        while let Some(s) = queue.pop_front() {
            reached += 1;
            if !self.sat[s] {
                let mut states = vec![s];
                let mut edges = Vec::new();
                let mut cur = s;
                while parent[cur] != NONE {
                    edges.push(via[cur].unwrap());
                    cur = parent[cur] as usize;
                    states.push(cur);
                }
                states.reverse();
                edges.reverse();
                return Ok((Some(self.trace(states, edges, None)), reached));
            }
            for e in self.model.successors(s) {
                match self.allowed(choices, s, e) {
                    None => return Err(self.partial_error(choices, s)),
                    Some(false) => {}
                    Some(true) => {
                        let d = e.dst as usize;
                        if !seen[d] {
                            seen[d] = true;
                            parent[d] = s as u32;
                            via[d] = Some(*e);
                            queue.push_back(d);
                        }
                    }
                }
            }
        }
        Ok((None, reached))
    }

    fn check_eventually(&self, choices: &Choices, start: &[u32]) -> Result<(Option<Trace>, usize)> {
        // Iterative DFS over unsatisfied states; a back edge closes a lasso.
        let n = self.model.num_states();
        let mut color = vec![0u8; n];
        let mut reached = 0;
        for &root in start {
            let root = root as usize;
            if self.sat[root] || color[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            let mut path_edges: Vec<Edge> = Vec::new();
            color[root] = 1;
            reached += 1;
            while let Some(&mut (s, ref mut next)) = stack.last_mut() {
                let succ = self.model.successors(s);
                if *next == 0 && succ.iter().any(|e| self.allowed(choices, s, e).is_none()) {
                    return Err(self.partial_error(choices, s));
                }
                let mut advanced = false;
                while *next < succ.len() {
                    let e = succ[*next];
                    *next += 1;
                    if self.allowed(choices, s, &e) != Some(true) {
                        continue;
                    }
                    let d = e.dst as usize;
                    if self.sat[d] {
                        continue;
                    }
                    match color[d] {
                        0 => {
                            color[d] = 1;
                            reached += 1;
                            path_edges.push(e);
                            stack.push((d, 0));
                            advanced = true;
                            break;
                        }
                        1 => {
                            let mut states: Vec<usize> = stack.iter().map(|&(x, _)| x).collect();
                            let loop_start = states.iter().position(|&x| x == d);
                            let mut edges = path_edges.clone();
                            edges.push(e);
                            states.push(d);
                            return Ok((Some(self.trace(states, edges, loop_start)), reached));
                        }
                        _ => {}
                    }
                }
                if !advanced {
                    color[s] = 2;
                    stack.pop();
                    path_edges.pop();
                }
            }
        }
        Ok((None, reached))
    }
}

/// States from which the coalition is evaluated: those indistinguishable
/// from the initial state for every member.
pub fn start_set(m: &GlobalModel, f: &Formula) -> Result<Vec<usize>> {
    Ok(Game::new(m, f)?.start_set().into_iter().map(|s| s as usize).collect())
}

pub fn check_strategy(m: &GlobalModel, sigma: &Strategy, f: &Formula) -> Result<Verdict> {
    let game = Game::new(m, f)?;
    let start = game.start_set();
    check_game(&game, sigma, &start)
}

/// Like [`check_strategy`] with an explicit set of start states.
pub fn check_strategy_from(m: &GlobalModel, sigma: &Strategy, f: &Formula, start: &[usize]) -> Result<Verdict> {
    let game = Game::new(m, f)?;
    let start: Vec<u32> = start.iter().map(|&s| s as u32).collect();
    check_game(&game, sigma, &start)
}

fn check_game(game: &Game<'_>, sigma: &Strategy, start: &[u32]) -> Result<Verdict> {
    let choices = game.resolve(sigma)?;
    let (cex, reached) = game.check(&choices, start)?;
    let stats = Stats {
        states: game.model.num_states(),
        transitions: game.model.num_transitions(),
        visited: reached as u64,
        elapsed: None,
    };
    Ok(match cex {
        None => Verdict { answer: Answer::Yes, witness: Some(sigma.clone()), counterexample: None, stats },
        Some(trace) => Verdict { answer: Answer::No, witness: None, counterexample: Some(trace), stats },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose;
    use crate::voting::{generate_simple_voting, voter_goal};
    use crate::parse_spec;

    fn voter1_strategy(m: &GlobalModel, vote: &str, reveal: bool) -> Strategy {
        let mut sigma = Strategy::new();
        let a = m.module_index("Voter1").unwrap();
        let mut seen = alloc::collections::BTreeSet::new();
        for s in 0..m.num_states() {
            let view = m.view_of("Voter1", s).unwrap();
            if !seen.insert(view.clone()) {
                continue;
            }
            let actions: Vec<&str> = m
                .successors(s)
                .iter()
                .filter(|e| e.module as usize == a)
                .map(|e| m.action_name(a, e.action))
                .collect();
            let pick = if view.local_state == "s_qqq" {
                format!("vote{vote}")
            } else if view.local_state.ends_with("qq") && view.local_state != "s_qqq" {
                if reveal { format!("share{vote}") } else { format!("refuse{vote}") }
            } else {
                actions[0].to_string()
            };
            let pick = if actions.contains(&pick.as_str()) { pick } else { actions[0].to_string() };
            sigma.insert(view, pick);
        }
        sigma
    }

    #[test]
    fn predicate_at_initial_state() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        assert!(eval_predicate(&m, 0, &Predicate::atom("pstatus1", "?")).unwrap());
        assert!(eval_predicate(&m, 0, &voter_goal(1).predicate).unwrap());
        assert!(matches!(eval_predicate(&m, 0, &Predicate::atom("nope", "?")), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn punished_two_voter_violates_goal() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        let goal = voter_goal(1).predicate;
        let bad = (0..m.num_states())
            .find(|&s| m.value(s, "pstatus1") == Some("T") && m.value(s, "vote1") == Some("2"))
            .expect("coercer can punish a voter who voted 2");
        assert!(!eval_predicate(&m, bad, &goal).unwrap());
    }

    #[test]
    fn voting_one_and_refusing_wins() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        let sigma = voter1_strategy(&m, "1", false);
        let v = check_strategy(&m, &sigma, &voter_goal(1)).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        assert!(v.witness.is_some());
    }

    #[test]
    fn voting_two_and_sharing_loses() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        let sigma = voter1_strategy(&m, "2", true);
        let v = check_strategy(&m, &sigma, &voter_goal(1)).unwrap();
        assert_eq!(v.answer, Answer::No);
        let cex = v.counterexample.unwrap();
        let last = *cex.states.last().unwrap();
        assert_eq!(m.value(last, "pstatus1"), Some("T"));
        assert_eq!(m.value(last, "vote1"), Some("2"));
        assert!(cex.moves.iter().any(|mv| mv.starts_with("Coercer.") && mv.contains("punish1")));
        assert_eq!(cex.moves.len() + 1, cex.states.len());
    }

    #[test]
    fn single_state_model() {
        let doc = parse_spec("MODULE A\n VAR x : { v, w }\n STATE s [ x=v ]\n INIT s\n TRANS s -> s ;\n").unwrap();
        let m = compose(&doc).unwrap();
        let f = Formula::always(["A"], Predicate::atom("x", "v"));
        let mut sigma = Strategy::new();
        sigma.insert(m.view_of("A", 0).unwrap(), "t0");
        assert_eq!(check_strategy(&m, &sigma, &f).unwrap().answer, Answer::Yes);
    }

    #[test]
    fn partial_and_invalid_strategies_are_errors() {
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let f = voter_goal(1);
        assert!(matches!(check_strategy(&m, &Strategy::new(), &f), Err(Error::PartialStrategy { .. })));
        let mut sigma = Strategy::new();
        sigma.insert(m.view_of("Voter1", 0).unwrap(), "share1");
        assert!(matches!(check_strategy(&m, &sigma, &f), Err(Error::InvalidStrategy { .. })));
    }

    #[test]
    fn eventually_lasso_counterexample() {
        // The environment can keep looping forever before B ever moves.
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a0 [ x=0 ]\n STATE a1 [ x=1 ]\n INIT a0\n TRANS a0 -> a1 : go ;\n TRANS a1 -> a1 : stay ;\n\
             MODULE E\n STATE e [ ]\n INIT e\n TRANS e -> e : spin ;\n",
        )
        .unwrap();
        let m = compose(&doc).unwrap();
        let f = Formula::eventually(["A"], Predicate::atom("x", "1"));
        let mut sigma = Strategy::new();
        sigma.insert(m.view_of("A", 0).unwrap(), "go");
        let v = check_strategy(&m, &sigma, &f).unwrap();
        assert_eq!(v.answer, Answer::No);
        let cex = v.counterexample.unwrap();
        assert_eq!(cex.loop_start, Some(0));
        assert_eq!(cex.moves, ["E.spin"]);
    }
}
