//! Local semantics of a single module: guards and enabled transitions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::spec::{Constraint, Guard, ModuleDecl, SpecDocument, TransitionDecl};
use crate::{Error, Result, STUTTER};

/// Values of a module's input variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputValuation(pub BTreeMap<String, String>);

impl InputValuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, value: impl Into<String>) -> Self {
        self.0.insert(var.into(), value.into());
        self
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    /// Every valuation of `m`'s inputs, in lexicographic domain order.
    pub fn enumerate(m: &ModuleDecl) -> Vec<InputValuation> {
        let mut out = alloc::vec![InputValuation::new()];
        for input in &m.inputs {
            out = out
                .into_iter()
                .flat_map(|iv| input.domain.iter().map(move |v| iv.clone().with(input.name.clone(), v.clone())))
                .collect();
        }
        out
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for InputValuation {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        InputValuation(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

/// A transition as seen by the local semantics; `stutter` marks the
/// synthetic self-loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalTransition {
    pub src: String,
    pub dst: String,
    pub guard: Guard,
    pub action: String,
    pub stutter: bool,
}

impl From<&TransitionDecl> for LocalTransition {
    fn from(t: &TransitionDecl) -> Self {
        LocalTransition {
            src: t.src.clone(),
            dst: t.dst.clone(),
            guard: t.guard.clone(),
            action: t.action.clone(),
            stutter: false,
        }
    }
}

/// Unconstrained inputs (absent from `iv`) are unrestricted.
pub fn guard_satisfied(g: &Guard, iv: &InputValuation) -> bool {
    g.constraints.iter().all(|(var, c)| match (c, iv.get(var)) {
        (Constraint::Any, _) => true,
        (_, None) => true,
        (c, Some(value)) => c.holds(value),
    })
}

/// Transitions leaving `state` under `iv`, or the synthetic stutter when
/// none is enabled.
pub fn enabled_transitions(m: &ModuleDecl, state: &str, iv: &InputValuation) -> Result<Vec<LocalTransition>> {
    if m.state(state).is_none() {
        return Err(Error::UnknownState { module: m.name.clone(), state: state.to_string() });
    }
    if let Some(missing) = m.inputs.iter().find(|i| iv.get(&i.name).is_none()) {
        return Err(Error::UnknownVariable(missing.name.clone()));
    }
    let enabled: Vec<LocalTransition> = m
        .outgoing(state)
        .filter(|t| guard_satisfied(&t.guard, iv))
        .map(LocalTransition::from)
        .collect();
    if enabled.is_empty() {
        return Ok(alloc::vec![LocalTransition {
            src: state.to_string(),
            dst: state.to_string(),
            guard: Guard::any(),
            action: STUTTER.to_string(),
            stutter: true,
        }]);
    }
    Ok(enabled)
}

/// Index-based comparison against one input value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Test {
    Eq(u16),
    Neq(u16),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledTransition {
    pub action: u16,
    pub dst: u16,
    /// (position in the module's input list, test)
    pub guard: Vec<(u16, Test)>,
}

impl CompiledTransition {
    #[inline]
    pub fn enabled(&self, inputs: &[u16]) -> bool {
        self.guard.iter().all(|&(pos, test)| {
            let v = inputs[pos as usize];
            match test {
                Test::Eq(x) => v == x,
                Test::Neq(x) => v != x,
            }
        })
    }
}

/// A module lowered to dense indices for the composer.
#[derive(Debug, Clone)]
pub(crate) struct CompiledModule {
    pub name: String,
    pub state_ids: Vec<String>,
    /// `valuations[state][var]` is an index into the variable's domain.
    pub valuations: Vec<Vec<u16>>,
    /// Global ids of the module's input variables.
    pub inputs: Vec<usize>,
    pub outgoing: Vec<Vec<CompiledTransition>>,
    /// Action names; index `transitions.len()` is the stutter.
    pub actions: Vec<String>,
    pub initial: u16,
}

impl CompiledModule {
    pub fn stutter_action(&self) -> u16 {
        (self.actions.len() - 1) as u16
    }
}

/// Table of all state variables of a document.
#[derive(Debug, Clone)]
pub(crate) struct VarTable {
    pub names: Vec<String>,
    pub domains: Vec<Vec<String>>,
    /// (module index, position among that module's state variables)
    pub owner: Vec<(usize, usize)>,
    pub by_name: BTreeMap<String, usize>,
}

impl VarTable {
    pub fn id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn value_index(&self, var: usize, value: &str) -> Option<u16> {
        self.domains[var].iter().position(|v| v == value).map(|i| i as u16)
    }
}

pub(crate) fn compile(doc: &SpecDocument) -> Result<(Vec<CompiledModule>, VarTable)> {
    let mut vars = VarTable { names: Vec::new(), domains: Vec::new(), owner: Vec::new(), by_name: BTreeMap::new() };
    for (mi, m) in doc.modules().iter().enumerate() {
        for (pos, v) in m.state_vars.iter().enumerate() {
            if v.domain.len() > u16::MAX as usize {
                return Err(Error::InvalidDomain(v.name.clone()));
            }
            vars.by_name.insert(v.name.clone(), vars.names.len());
            vars.names.push(v.name.clone());
            vars.domains.push(v.domain.clone());
            vars.owner.push((mi, pos));
        }
    }

    let mut modules = Vec::with_capacity(doc.modules().len());
    for m in doc.modules() {
        if m.states.len() > u16::MAX as usize || m.transitions.len() >= u16::MAX as usize {
            return Err(Error::InvalidParameter(alloc::format!("module `{}` is too large", m.name)));
        }
        let index: BTreeMap<&str, u16> = m.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i as u16)).collect();
        let valuations = m
            .states
            .iter()
            .map(|s| {
                m.state_vars
                    .iter()
                    .zip(&s.valuation)
                    .map(|(v, value)| v.index_of(value).unwrap() as u16)
                    .collect()
            })
            .collect();
        let input_ids: Vec<usize> = m.inputs.iter().map(|i| vars.id(&i.name).unwrap()).collect();
        let mut outgoing = alloc::vec![Vec::new(); m.states.len()];
        let mut actions = Vec::with_capacity(m.transitions.len() + 1);
        for (ti, t) in m.transitions.iter().enumerate() {
            let mut guard = Vec::new();
            for (var, c) in &t.guard.constraints {
                let pos = m.inputs.iter().position(|i| i.name == *var).unwrap();
                let id = input_ids[pos];
                let test = match c {
                    Constraint::Any => continue,
                    Constraint::Eq(v) => Test::Eq(vars.value_index(id, v).unwrap()),
                    Constraint::Neq(v) => Test::Neq(vars.value_index(id, v).unwrap()),
                };
                guard.push((pos as u16, test));
            }
            outgoing[index[t.src.as_str()] as usize].push(CompiledTransition {
                action: ti as u16,
                dst: index[t.dst.as_str()],
                guard,
            });
            actions.push(t.action.clone());
        }
        actions.push(STUTTER.to_string());
        modules.push(CompiledModule {
            name: m.name.clone(),
            state_ids: m.states.iter().map(|s| s.id.clone()).collect(),
            valuations,
            inputs: input_ids,
            outgoing,
            actions,
            initial: index[m.initial.as_str()],
        });
    }
    Ok((modules, vars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voting::generate_simple_voting;

    #[test]
    fn coercer_punish_guard() {
        let g = Guard::any().neq("reported1", "?").with("reported2", Constraint::Any);
        let iv = InputValuation::new().with("reported1", "1").with("reported2", "?");
        assert!(guard_satisfied(&g, &iv));
    }

    #[test]
    fn empty_guard_always_holds() {
        assert!(guard_satisfied(&Guard::any(), &InputValuation::new()));
        assert!(guard_satisfied(&Guard::any(), &InputValuation::new().with("pun1", "T")));
    }

    #[test]
    fn eq_guard_fails_on_other_value() {
        let g = Guard::any().eq("pun1", "T");
        assert!(!guard_satisfied(&g, &InputValuation::new().with("pun1", "F")));
    }

    #[test]
    fn voter_initial_state_offers_both_votes() {
        let doc = generate_simple_voting(2).unwrap();
        let voter = doc.module("Voter1").unwrap();
        for pun in ["?", "T", "F"] {
            let iv = InputValuation::new().with("pun1", pun);
            let ts = enabled_transitions(voter, &voter.initial, &iv).unwrap();
            let dsts: Vec<_> = ts.iter().map(|t| voter.value_at(&t.dst, "vote1").unwrap()).collect();
            assert_eq!(dsts, ["1", "2"]);
        }
    }

    #[test]
    fn coercer_waits_while_nothing_reported() {
        let doc = generate_simple_voting(2).unwrap();
        let coercer = doc.module("Coercer").unwrap();
        let iv = InputValuation::new().with("reported1", "?").with("reported2", "?");
        let ts = enabled_transitions(coercer, &coercer.initial, &iv).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].src, ts[0].dst);
        assert!(!ts[0].stutter);
    }

    #[test]
    fn dead_state_gets_stutter() {
        let doc = crate::parse_spec("MODULE M\n STATE a [ ]\n STATE b [ ]\n INIT a\n TRANS a -> b ;\n").unwrap();
        let m = &doc.modules()[0];
        let ts = enabled_transitions(m, "b", &InputValuation::new()).unwrap();
        assert_eq!(ts.len(), 1);
        assert!(ts[0].stutter);
        assert_eq!(ts[0].action, STUTTER);
        assert_eq!(ts[0].dst, "b");
    }

    #[test]
    fn rejects_partial_input_valuation() {
        let doc = generate_simple_voting(1).unwrap();
        let voter = doc.module("Voter1").unwrap();
        assert!(enabled_transitions(voter, &voter.initial, &InputValuation::new()).is_err());
    }
}
