//! Interleaving composition of modules into an explicit global model.
//!
//! From every reachable global state each module fires each of its enabled
//! local transitions, changing only its own component. Inputs are read off
//! the current global valuation. A module with no enabled transition fires a
//! single synthetic stutter. Edges are stored in CSR form in breadth-first
//! state order.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::model::{compile, CompiledModule, VarTable};
use crate::spec::SpecDocument;
use crate::{Error, Resource, Result};

/// Caps that turn state-space explosion into [`Error::ResourceLimit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_transitions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 10_000_000, max_transitions: 100_000_000 }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits { max_states: usize::MAX, max_transitions: usize::MAX }
    }
}

/// One labelled global transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub module: u16,
    pub action: u16,
    pub dst: u32,
}

/// What an agent observes: its local state and the values of its inputs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct View {
    pub agent: String,
    pub local_state: String,
    pub inputs: Vec<(String, String)>,
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.agent, self.local_state)?;
        f.write_str("{")?;
        for (i, (var, value)) in self.inputs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{var}={value}")?;
        }
        f.write_str("}")
    }
}

/// Dense view ids of one agent over every global state.
#[derive(Debug, Clone)]
pub(crate) struct ViewTable {
    pub agent: usize,
    pub of_state: Vec<u32>,
    /// Per view: local state followed by input value indices.
    pub keys: Vec<Vec<u16>>,
    /// Per view: enabled actions in declaration order (stutter last).
    pub actions: Vec<Vec<u16>>,
}

impl ViewTable {
    pub fn len(&self) -> usize {
        self.keys.len()
    }
}

#[derive(Debug, Clone)]
pub struct GlobalModel {
    pub(crate) modules: Vec<CompiledModule>,
    pub(crate) vars: VarTable,
    /// `tuples[s * modules.len() + m]` is module `m`'s local state index.
    tuples: Vec<u16>,
    offsets: Vec<u32>,
    edges: Vec<Edge>,
}

enum StateIndex {
    Packed { radix: Vec<u64>, map: HashMap<u64, u32> },
    Wide(HashMap<Vec<u16>, u32>),
}

impl StateIndex {
    fn new(modules: &[CompiledModule]) -> Self {
        let mut radix = Vec::with_capacity(modules.len());
        let mut acc: u64 = 1;
        for m in modules {
            radix.push(acc);
            match acc.checked_mul(m.state_ids.len() as u64) {
                Some(next) => acc = next,
                None => return StateIndex::Wide(HashMap::new()),
            }
        }
        StateIndex::Packed { radix, map: HashMap::new() }
    }

    /// Returns the existing index or inserts `next`.
    fn get_or_insert(&mut self, tuple: &[u16], next: u32) -> (u32, bool) {
        match self {
            StateIndex::Packed { radix, map } => {
                let key = tuple.iter().zip(radix.iter()).map(|(&l, &r)| l as u64 * r).sum();
                match map.entry(key) {
                    hashbrown::hash_map::Entry::Occupied(e) => (*e.get(), false),
                    hashbrown::hash_map::Entry::Vacant(e) => {
                        e.insert(next);
                        (next, true)
                    }
                }
            }
            StateIndex::Wide(map) => match map.get(tuple) {
                Some(&i) => (i, false),
                None => {
                    map.insert(tuple.to_vec(), next);
                    (next, true)
                }
            },
        }
    }
}

/// Composes with the default [`Limits`].
pub fn compose(doc: &SpecDocument) -> Result<GlobalModel> {
    compose_with(doc, Limits::default())
}

pub fn compose_with(doc: &SpecDocument, limits: Limits) -> Result<GlobalModel> {
    let (modules, vars) = compile(doc)?;
    if modules.is_empty() {
        return Err(Error::InvalidParameter("cannot compose an empty module set".into()));
    }
    if modules.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many modules".into()));
    }
    let n = modules.len();
    let mut index = StateIndex::new(&modules);
    let mut tuples: Vec<u16> = modules.iter().map(|m| m.initial).collect();
    index.get_or_insert(&tuples.clone(), 0);
    let mut count: usize = 1;
    let mut offsets: Vec<u32> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();

    let mut current = alloc::vec![0u16; n];
    let mut next = alloc::vec![0u16; n];
    let mut inputs: Vec<u16> = Vec::new();

    let mut s = 0usize;
    while s < count {
        offsets.push(edges.len() as u32);
        current.copy_from_slice(&tuples[s * n..(s + 1) * n]);
        for (mi, m) in modules.iter().enumerate() {
            inputs.clear();
            for &var in &m.inputs {
                let (owner, pos) = vars.owner[var];
                inputs.push(modules[owner].valuations[current[owner] as usize][pos]);
            }
            let local = current[mi] as usize;
            let mut fired = false;
            for t in &m.outgoing[local] {
                if !t.enabled(&inputs) {
                    continue;
                }
                fired = true;
                next.copy_from_slice(&current);
                next[mi] = t.dst;
                let dst = intern(&mut index, &mut tuples, &mut count, &next, limits)?;
                edges.push(Edge { module: mi as u16, action: t.action, dst });
            }
            if !fired {
                edges.push(Edge { module: mi as u16, action: m.stutter_action(), dst: s as u32 });
            }
            if edges.len() > limits.max_transitions.min(u32::MAX as usize) {
                return Err(Error::ResourceLimit { resource: Resource::Transitions, limit: limits.max_transitions as u64 });
            }
        }
        s += 1;
    }
    offsets.push(edges.len() as u32);
    tuples.shrink_to_fit();
    edges.shrink_to_fit();
    Ok(GlobalModel { modules, vars, tuples, offsets, edges })
}

fn intern(index: &mut StateIndex, tuples: &mut Vec<u16>, count: &mut usize, tuple: &[u16], limits: Limits) -> Result<u32> {
    let (id, fresh) = index.get_or_insert(tuple, *count as u32);
    if fresh {
        if *count >= limits.max_states || *count >= u32::MAX as usize {
            return Err(Error::ResourceLimit { resource: Resource::States, limit: limits.max_states as u64 });
        }
        tuples.extend_from_slice(tuple);
        *count += 1;
    }
    Ok(id)
}

impl GlobalModel {
    pub fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.len()
    }

    /// Always state 0.
    pub fn initial(&self) -> usize {
        0
    }

    pub fn successors(&self, s: usize) -> &[Edge] {
        &self.edges[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    pub fn module_count(&self) -> usize {
        self.modules.len()
    }

    pub fn module_names(&self) -> impl Iterator<Item = &str> {
        self.modules.iter().map(|m| m.name.as_str())
    }

    pub fn module_index(&self, name: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.name == name)
    }

    pub fn module_name(&self, m: usize) -> &str {
        &self.modules[m].name
    }

    pub fn action_name(&self, module: usize, action: u16) -> &str {
        &self.modules[module].actions[action as usize]
    }

    pub fn is_stutter(&self, e: &Edge) -> bool {
        e.action == self.modules[e.module as usize].stutter_action()
    }

    pub fn local_index(&self, s: usize, module: usize) -> u16 {
        self.tuples[s * self.modules.len() + module]
    }

    pub fn local_state(&self, s: usize, module: usize) -> &str {
        &self.modules[module].state_ids[self.local_index(s, module) as usize]
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.vars.names.iter().map(String::as_str)
    }

    pub(crate) fn value_index(&self, s: usize, var: usize) -> u16 {
        let (owner, pos) = self.vars.owner[var];
        self.modules[owner].valuations[self.local_index(s, owner) as usize][pos]
    }

    /// Value of a state variable at `s`.
    pub fn value(&self, s: usize, var: &str) -> Option<&str> {
        let id = self.vars.id(var)?;
        Some(&self.vars.domains[id][self.value_index(s, id) as usize])
    }

    /// The full valuation at `s`, in variable declaration order.
    pub fn valuation(&self, s: usize) -> Vec<(&str, &str)> {
        (0..self.vars.names.len())
            .map(|v| (self.vars.names[v].as_str(), self.vars.domains[v][self.value_index(s, v) as usize].as_str()))
            .collect()
    }

    pub fn view_of(&self, agent: &str, s: usize) -> Result<View> {
        let a = self.module_index(agent).ok_or_else(|| Error::UnknownAgent(agent.into()))?;
        if s >= self.num_states() {
            return Err(Error::InvalidParameter(alloc::format!("state {s} out of range")));
        }
        let m = &self.modules[a];
        Ok(View {
            agent: m.name.clone(),
            local_state: self.local_state(s, a).into(),
            inputs: m
                .inputs
                .iter()
                .map(|&v| (self.vars.names[v].clone(), self.vars.domains[v][self.value_index(s, v) as usize].clone()))
                .collect(),
        })
    }

    pub(crate) fn view_key(&self, agent: usize, s: usize, key: &mut Vec<u16>) {
        key.clear();
        key.push(self.local_index(s, agent));
        for &v in &self.modules[agent].inputs {
            key.push(self.value_index(s, v));
        }
    }

    /// Whether `agent` cannot tell `s` and `t` apart; unknown agents see
    /// nothing and distinguish nothing.
    pub fn indistinguishable(&self, agent: &str, s: usize, t: usize) -> bool {
        let Some(a) = self.module_index(agent) else { return true };
        let (mut ks, mut kt) = (Vec::new(), Vec::new());
        self.view_key(a, s, &mut ks);
        self.view_key(a, t, &mut kt);
        ks == kt
    }

    pub(crate) fn view_table(&self, agent: usize) -> ViewTable {
        let mut ids: HashMap<Vec<u16>, u32> = HashMap::new();
        let mut of_state = Vec::with_capacity(self.num_states());
        let mut keys = Vec::new();
        let mut actions = Vec::new();
        let mut key = Vec::new();
        for s in 0..self.num_states() {
            self.view_key(agent, s, &mut key);
            let id = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    let id = keys.len() as u32;
                    ids.insert(key.clone(), id);
                    keys.push(key.clone());
                    actions.push(
                        self.successors(s)
                            .iter()
                            .filter(|e| e.module as usize == agent)
                            .map(|e| e.action)
                            .collect(),
                    );
                    id
                }
            };
            of_state.push(id);
        }
        ViewTable { agent, of_state, keys, actions }
    }

    pub(crate) fn named_view(&self, agent: usize, key: &[u16]) -> View {
        let m = &self.modules[agent];
        View {
            agent: m.name.clone(),
            local_state: m.state_ids[key[0] as usize].clone(),
            inputs: m
                .inputs
                .iter()
                .zip(&key[1..])
                .map(|(&v, &x)| (self.vars.names[v].clone(), self.vars.domains[v][x as usize].clone()))
                .collect(),
        }
    }
}
