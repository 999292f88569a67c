//! Resolved specification documents.
//!
//! A [`SpecDocument`] can only be built through [`SpecDocument::new`], which
//! checks every structural invariant: unique names, total valuations, inputs
//! resolving to exactly one foreign owner, guards over inputs only, and groups
//! partitioning the module set.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::formula::Formula;
use crate::{Error, Result, STUTTER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: Vec<String>,
    pub owner: String,
}

impl VarDecl {
    pub fn new<S: Into<String>>(name: impl Into<String>, domain: impl IntoIterator<Item = S>) -> Self {
        VarDecl {
            name: name.into(),
            domain: domain.into_iter().map(Into::into).collect(),
            owner: String::new(),
        }
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == value)
    }
}

/// Constraint placed by a guard on a single input variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Any,
    Eq(String),
    Neq(String),
}

impl Constraint {
    pub fn holds(&self, value: &str) -> bool {
        match self {
            Constraint::Any => true,
            Constraint::Eq(v) => v == value,
            Constraint::Neq(v) => v != value,
        }
    }
}

/// Conjunction of per-input constraints; unconstrained inputs are free.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub constraints: Vec<(String, Constraint)>,
}

impl Guard {
    pub fn any() -> Self {
        Guard::default()
    }

    pub fn with(mut self, var: impl Into<String>, c: Constraint) -> Self {
        self.constraints.push((var.into(), c));
        self
    }

    pub fn eq(self, var: impl Into<String>, value: impl Into<String>) -> Self {
        self.with(var, Constraint::Eq(value.into()))
    }

    pub fn neq(self, var: impl Into<String>, value: impl Into<String>) -> Self {
        self.with(var, Constraint::Neq(value.into()))
    }

    /// Sorted, `Any`-free form used to compare guards semantically.
    pub fn canonical(&self) -> Guard {
        let set: BTreeSet<(String, Constraint)> = self
            .constraints
            .iter()
            .filter(|(_, c)| *c != Constraint::Any)
            .cloned()
            .collect();
        Guard { constraints: set.into_iter().collect() }
    }

    /// True iff every valuation satisfying `self` also satisfies `other`,
    /// judged syntactically on canonical forms.
    pub fn implies(&self, other: &Guard) -> bool {
        let mine = self.canonical();
        other
            .canonical()
            .constraints
            .iter()
            .all(|c| mine.constraints.contains(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVar {
    pub name: String,
    pub domain: Vec<String>,
    /// Module owning the variable as a state variable.
    pub source: String,
}

impl InputVar {
    pub fn unresolved(name: impl Into<String>) -> Self {
        InputVar { name: name.into(), domain: Vec::new(), source: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub id: String,
    /// One value per state variable, in declaration order.
    pub valuation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionDecl {
    pub src: String,
    pub dst: String,
    pub guard: Guard,
    pub action: String,
}

/// Where a synthetic module came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub target: String,
    pub sources: Vec<String>,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub state_vars: Vec<VarDecl>,
    pub inputs: Vec<InputVar>,
    pub states: Vec<StateDecl>,
    pub initial: String,
    pub transitions: Vec<TransitionDecl>,
    pub provenance: Option<Provenance>,
}

impl ModuleDecl {
    pub fn new(name: impl Into<String>) -> Self {
        ModuleDecl {
            name: name.into(),
            state_vars: Vec::new(),
            inputs: Vec::new(),
            states: Vec::new(),
            initial: String::new(),
            transitions: Vec::new(),
            provenance: None,
        }
    }

    pub fn state(&self, id: &str) -> Option<&StateDecl> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    pub fn input(&self, name: &str) -> Option<&InputVar> {
        self.inputs.iter().find(|i| i.name == name)
    }

    /// Value of state variable `var` in local state `state`.
    pub fn value_at(&self, state: &str, var: &str) -> Option<&str> {
        let pos = self.state_vars.iter().position(|v| v.name == var)?;
        self.state(state).map(|s| s.valuation[pos].as_str())
    }

    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a TransitionDecl> + 'a {
        self.transitions.iter().filter(move |t| t.src == state)
    }

    pub fn is_synthetic(&self) -> bool {
        self.provenance.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupDecl {
    pub name: String,
    pub members: Vec<String>,
    pub goal: Option<Formula>,
}

/// A fully resolved set of modules and groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    modules: Vec<ModuleDecl>,
    groups: Vec<GroupDecl>,
}

impl SpecDocument {
    /// Resolves and validates. Input domains and sources are (re)computed
    /// from the owners, unnamed actions get `t<index>`, and an empty group
    /// list becomes one group per module.
    pub fn new(mut modules: Vec<ModuleDecl>, mut groups: Vec<GroupDecl>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for m in &modules {
            if !names.insert(m.name.clone()) {
                return Err(Error::DuplicateModule(m.name.clone()));
            }
        }

        // variable name -> (owner, domain)
        let mut owners: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
        for m in &mut modules {
            for v in &mut m.state_vars {
                v.owner = m.name.clone();
                let distinct: BTreeSet<&String> = v.domain.iter().collect();
                if v.domain.is_empty() || distinct.len() != v.domain.len() {
                    return Err(Error::InvalidDomain(v.name.clone()));
                }
                if owners.insert(v.name.clone(), (m.name.clone(), v.domain.clone())).is_some() {
                    return Err(Error::DuplicateVariable(v.name.clone()));
                }
            }
        }

        for m in &mut modules {
            resolve_module(m, &owners)?;
        }

        if groups.is_empty() {
            groups = modules
                .iter()
                .map(|m| GroupDecl { name: m.name.clone(), members: alloc::vec![m.name.clone()], goal: None })
                .collect();
        }
        let mut covered: BTreeMap<&str, &str> = BTreeMap::new();
        let mut group_names = BTreeSet::new();
        for g in &groups {
            if !group_names.insert(g.name.as_str()) {
                return Err(Error::GroupsNotPartition(format!("group `{}` declared twice", g.name)));
            }
            if g.members.is_empty() {
                return Err(Error::GroupsNotPartition(format!("group `{}` is empty", g.name)));
            }
            for member in &g.members {
                if !names.contains(member) {
                    return Err(Error::UnknownModule(member.clone()));
                }
                if let Some(prev) = covered.insert(member, &g.name) {
                    return Err(Error::GroupsNotPartition(format!(
                        "module `{member}` is in both `{prev}` and `{}`",
                        g.name
                    )));
                }
            }
            if let Some(goal) = &g.goal {
                check_formula(goal, &names, &owners)?;
            }
        }
        if let Some(missing) = modules.iter().find(|m| !covered.contains_key(m.name.as_str())) {
            return Err(Error::GroupsNotPartition(format!("module `{}` is in no group", missing.name)));
        }

        Ok(SpecDocument { modules, groups })
    }

    pub fn modules(&self) -> &[ModuleDecl] {
        &self.modules
    }

    pub fn groups(&self) -> &[GroupDecl] {
        &self.groups
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.name == name)
    }

    /// The declaration of a state variable, wherever it lives.
    pub fn variable(&self, name: &str) -> Option<&VarDecl> {
        self.modules
            .iter()
            .flat_map(|m| m.state_vars.iter())
            .find(|v| v.name == name)
    }

    pub fn group_of(&self, module: &str) -> Option<&GroupDecl> {
        self.groups.iter().find(|g| g.members.iter().any(|m| m == module))
    }

    pub fn into_parts(self) -> (Vec<ModuleDecl>, Vec<GroupDecl>) {
        (self.modules, self.groups)
    }
}

/// Checks that a formula's agents are modules and its atoms are declared.
pub(crate) fn check_formula(
    f: &Formula,
    modules: &BTreeSet<String>,
    owners: &BTreeMap<String, (String, Vec<String>)>,
) -> Result<()> {
    if f.coalition.is_empty() {
        return Err(Error::InvalidParameter("empty coalition".to_string()));
    }
    for agent in &f.coalition {
        if !modules.contains(agent) {
            return Err(Error::UnknownAgent(agent.clone()));
        }
    }
    for (var, value) in f.predicate.atoms() {
        let (_, domain) = owners.get(var).ok_or_else(|| Error::UnknownVariable(var.to_string()))?;
        if !domain.iter().any(|d| d == value) {
            return Err(Error::DomainMismatch { var: var.to_string(), value: value.to_string() });
        }
    }
    Ok(())
}

fn resolve_module(m: &mut ModuleDecl, owners: &BTreeMap<String, (String, Vec<String>)>) -> Result<()> {
    let mut seen_inputs = BTreeSet::new();
    for input in &mut m.inputs {
        if !seen_inputs.insert(input.name.clone()) {
            return Err(Error::DuplicateVariable(input.name.clone()));
        }
        let (owner, domain) = owners
            .get(&input.name)
            .ok_or_else(|| Error::UnknownVariable(input.name.clone()))?;
        if *owner == m.name {
            return Err(Error::SelfInput { module: m.name.clone(), var: input.name.clone() });
        }
        input.source = owner.clone();
        input.domain = domain.clone();
    }

    if m.states.is_empty() {
        return Err(Error::NoStates(m.name.clone()));
    }
    let mut ids = BTreeSet::new();
    for s in &m.states {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::DuplicateState { module: m.name.clone(), state: s.id.clone() });
        }
        if s.valuation.len() != m.state_vars.len() {
            return Err(Error::IncompleteValuation { module: m.name.clone(), state: s.id.clone() });
        }
        for (var, value) in m.state_vars.iter().zip(&s.valuation) {
            if var.index_of(value).is_none() {
                return Err(Error::DomainMismatch { var: var.name.clone(), value: value.clone() });
            }
        }
    }
    if m.initial.is_empty() {
        return Err(Error::MissingInit(m.name.clone()));
    }
    if !ids.contains(m.initial.as_str()) {
        return Err(Error::UnknownState { module: m.name.clone(), state: m.initial.clone() });
    }

    for (i, t) in m.transitions.iter_mut().enumerate() {
        if t.action.is_empty() {
            t.action = format!("t{i}");
        }
    }
    let mut actions = BTreeSet::new();
    for t in &m.transitions {
        for end in [&t.src, &t.dst] {
            if !ids.contains(end.as_str()) {
                return Err(Error::UnknownState { module: m.name.clone(), state: end.clone() });
            }
        }
        if t.action == STUTTER || !actions.insert(t.action.as_str()) {
            return Err(Error::DuplicateAction { module: m.name.clone(), action: t.action.clone() });
        }
        for (var, c) in &t.guard.constraints {
            let input = m
                .inputs
                .iter()
                .find(|i| i.name == *var)
                .ok_or_else(|| {
                    if owners.contains_key(var) {
                        Error::GuardOnNonInput { module: m.name.clone(), var: var.clone() }
                    } else {
                        Error::UnknownVariable(var.clone())
                    }
                })?;
            if let Constraint::Eq(v) | Constraint::Neq(v) = c {
                if !input.domain.contains(v) {
                    return Err(Error::DomainMismatch { var: var.clone(), value: v.clone() });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_modules() -> Vec<ModuleDecl> {
        let mut a = ModuleDecl::new("A");
        a.state_vars.push(VarDecl::new("x", ["0", "1"]));
        a.states.push(StateDecl { id: "p".into(), valuation: vec!["0".into()] });
        a.initial = "p".into();
        a.transitions.push(TransitionDecl { src: "p".into(), dst: "p".into(), guard: Guard::any(), action: String::new() });
        let mut b = ModuleDecl::new("B");
        b.inputs.push(InputVar::unresolved("x"));
        b.states.push(StateDecl { id: "q".into(), valuation: vec![] });
        b.initial = "q".into();
        b.transitions.push(TransitionDecl {
            src: "q".into(),
            dst: "q".into(),
            guard: Guard::any().eq("x", "1"),
            action: "go".into(),
        });
        vec![a, b]
    }

    #[test]
    fn resolves_inputs_and_default_groups() {
        let doc = SpecDocument::new(two_modules(), vec![]).unwrap();
        let b = doc.module("B").unwrap();
        assert_eq!(b.inputs[0].source, "A");
        assert_eq!(b.inputs[0].domain, vec!["0", "1"]);
        assert_eq!(doc.groups().len(), 2);
        assert_eq!(doc.module("A").unwrap().transitions[0].action, "t0");
    }

    #[test]
    fn rejects_guard_value_outside_domain() {
        let mut ms = two_modules();
        ms[1].transitions[0].guard = Guard::any().eq("x", "7");
        assert_eq!(
            SpecDocument::new(ms, vec![]),
            Err(Error::DomainMismatch { var: "x".into(), value: "7".into() })
        );
    }

    #[test]
    fn rejects_overlapping_groups() {
        let g = |n: &str, ms: &[&str]| GroupDecl {
            name: n.into(),
            members: ms.iter().map(|s| s.to_string()).collect(),
            goal: None,
        };
        let err = SpecDocument::new(two_modules(), vec![g("G1", &["A", "B"]), g("G2", &["B"])]).unwrap_err();
        assert!(matches!(err, Error::GroupsNotPartition(_)));
        let err = SpecDocument::new(two_modules(), vec![g("G1", &["A"])]).unwrap_err();
        assert!(matches!(err, Error::GroupsNotPartition(_)));
    }

    #[test]
    fn guard_implication_is_syntactic() {
        let strong = Guard::any().eq("x", "1").neq("y", "?");
        let weak = Guard::any().neq("y", "?");
        assert!(strong.implies(&weak));
        assert!(!weak.implies(&strong));
        assert!(strong.implies(&Guard::any()));
    }
}
