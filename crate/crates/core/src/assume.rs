//! Communication distance and automatically generated assumptions.
//!
//! Two modules communicate when one reads a state variable of the other.
//! The assumption for a target module is built from the modules within a
//! distance bound: their product is explored with everything the target
//! cannot observe abstracted away, each state gets an idle self-loop (the
//! rest of the system may always move instead), and the result is reduced
//! by partition refinement.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::compose::Limits;
use crate::spec::{Constraint, Guard, InputVar, ModuleDecl, Provenance, SpecDocument, StateDecl, TransitionDecl};
use crate::{Error, Resource, Result};

/// Undirected graph with an edge between two modules when one reads a
/// state variable of the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    pub nodes: Vec<String>,
    adjacency: Vec<BTreeSet<usize>>,
}

impl CommGraph {
    pub fn new(doc: &SpecDocument) -> Self {
        let nodes: Vec<String> = doc.modules().iter().map(|m| m.name.clone()).collect();
        let mut adjacency = vec![BTreeSet::new(); nodes.len()];
        for (i, m) in doc.modules().iter().enumerate() {
            for input in &m.inputs {
                if let Some(j) = doc.module_index(&input.source) {
                    if i != j {
                        adjacency[i].insert(j);
                        adjacency[j].insert(i);
                    }
                }
            }
        }
        CommGraph { nodes, adjacency }
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().copied()
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (i, adj) in self.adjacency.iter().enumerate() {
            for &j in adj.range(i + 1..) {
                out.push((self.nodes[i].as_str(), self.nodes[j].as_str()));
            }
        }
        out
    }

    /// Breadth-first distances from `i`; `None` for unreachable modules.
    pub fn distances_from(&self, i: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[i] = Some(0);
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

fn module_index(doc: &SpecDocument, name: &str) -> Result<usize> {
    doc.module_index(name).ok_or_else(|| Error::UnknownModule(name.to_string()))
}

/// Shortest-path length in the communication graph; `None` if the modules
/// are disconnected.
pub fn communication_distance(doc: &SpecDocument, a: &str, b: &str) -> Result<Option<usize>> {
    let i = module_index(doc, a)?;
    let j = module_index(doc, b)?;
    Ok(CommGraph::new(doc).distances_from(i)[j])
}

/// Modules other than `target` within distance `d`, in declaration order.
pub fn close_modules(doc: &SpecDocument, target: &str, d: usize) -> Result<Vec<String>> {
    let i = module_index(doc, target)?;
    if d < 1 {
        return Err(Error::InvalidParameter("the distance bound must be at least 1".into()));
    }
    let dist = CommGraph::new(doc).distances_from(i);
    Ok(doc
        .modules()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i && dist[j].is_some_and(|x| x <= d))
        .map(|(_, m)| m.name.clone())
        .collect())
}

/// A generated (or user-supplied) environment model for one target module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assumption {
    pub target: String,
    pub module: ModuleDecl,
    pub sources: Vec<String>,
    pub distance: usize,
    /// Size of the product of the sources before reduction.
    pub product_states: usize,
    pub product_transitions: usize,
}

impl Assumption {
    /// Wraps a hand-written module after checking that it provides exactly
    /// what `target` reads and reads only `target`'s variables.
    pub fn user_defined(doc: &SpecDocument, target: &str, module: ModuleDecl) -> Result<Self> {
        let t = doc.module(target).ok_or_else(|| Error::UnknownModule(target.to_string()))?;
        for input in &t.inputs {
            if !module.state_vars.iter().any(|v| v.name == input.name) {
                return Err(Error::InvalidAssumption(format!("does not provide `{}`", input.name)));
            }
        }
        for v in &module.state_vars {
            if !t.inputs.iter().any(|i| i.name == v.name) {
                return Err(Error::InvalidAssumption(format!("`{}` is not an input of `{target}`", v.name)));
            }
        }
        for i in &module.inputs {
            if !t.state_vars.iter().any(|v| v.name == i.name) {
                return Err(Error::InvalidAssumption(format!("reads `{}`, which `{target}` does not own", i.name)));
            }
        }
        if module.name == target {
            return Err(Error::InvalidAssumption("shares the target's name".into()));
        }
        let a = Assumption {
            target: target.to_string(),
            product_states: module.states.len(),
            product_transitions: module.transitions.len(),
            sources: Vec::new(),
            distance: 0,
            module,
        };
        a.local_spec(doc)?;
        Ok(a)
    }

    /// The two-module document `target ∥ assumption`.
    pub fn local_spec(&self, doc: &SpecDocument) -> Result<SpecDocument> {
        let t = doc.module(&self.target).ok_or_else(|| Error::UnknownModule(self.target.clone()))?;
        let mut target = t.clone();
        for i in &mut target.inputs {
            *i = InputVar::unresolved(i.name.clone());
        }
        let mut module = self.module.clone();
        for i in &mut module.inputs {
            *i = InputVar::unresolved(i.name.clone());
        }
        SpecDocument::new(vec![target, module], Vec::new()).map_err(|e| match e {
            Error::InvalidAssumption(_) => e,
            other => Error::InvalidAssumption(other.to_string()),
        })
    }
}

pub fn generate_assumption(doc: &SpecDocument, target: &str, d: usize) -> Result<Assumption> {
    generate_assumption_with(doc, target, d, Limits::default())
}

/// `limits` bounds the intermediate product of the close modules.
pub fn generate_assumption_with(doc: &SpecDocument, target: &str, d: usize, limits: Limits) -> Result<Assumption> {
    let t = doc.module(target).ok_or_else(|| Error::UnknownModule(target.to_string()))?;
    let sources = close_modules(doc, target, d)?;
    let close: Vec<&ModuleDecl> = sources.iter().map(|n| doc.module(n).unwrap()).collect();
    let target_vars: BTreeSet<&str> = t.state_vars.iter().map(|v| v.name.as_str()).collect();

    // Visible labels: target inputs owned by the sources.
    let mut state_vars = Vec::new();
    for i in &t.inputs {
        if let Some(v) = close.iter().flat_map(|m| m.state_vars.iter()).find(|v| v.name == i.name) {
            state_vars.push(v.clone());
        }
    }
    // Guards may only mention target variables that some source reads.
    let mut read: BTreeSet<&str> = BTreeSet::new();
    for m in &close {
        for i in &m.inputs {
            if target_vars.contains(i.name.as_str()) {
                read.insert(i.name.as_str());
            }
        }
    }
    let inputs: Vec<InputVar> = t
        .state_vars
        .iter()
        .filter(|v| read.contains(v.name.as_str()))
        .map(|v| InputVar::unresolved(v.name.clone()))
        .collect();

    let product = explore(&close, t, &state_vars, limits)?;
    let mut module = ModuleDecl::new(format!("Assume_{target}"));
    module.state_vars = state_vars;
    module.inputs = inputs;
    module.states = product.states;
    module.initial = module.states[0].id.clone();
    module.transitions = product.transitions;
    let product_states = module.states.len();
    let product_transitions = module.transitions.len();

    // The rest of the system may always move instead of the sources.
    let loops: Vec<TransitionDecl> = module
        .states
        .iter()
        .map(|s| TransitionDecl { src: s.id.clone(), dst: s.id.clone(), guard: Guard::any(), action: String::new() })
        .collect();
    module.transitions.extend(loops);

    let mut module = rename(&quotient_reduce(&module));
    module.provenance = Some(Provenance { target: target.to_string(), sources: sources.clone(), distance: d });
    Ok(Assumption { target: target.to_string(), module, sources, distance: d, product_states, product_transitions })
}

struct Product {
    states: Vec<StateDecl>,
    transitions: Vec<TransitionDecl>,
}

/// Reachable product of the close modules. Constraints on variables of the
/// close modules are evaluated, constraints on the target's variables are
/// kept, and everything else becomes unconstrained.
fn explore(close: &[&ModuleDecl], target: &ModuleDecl, visible: &[crate::spec::VarDecl], limits: Limits) -> Result<Product> {
    // variable -> (module position, variable position)
    let mut owned: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (mi, m) in close.iter().enumerate() {
        for (vi, v) in m.state_vars.iter().enumerate() {
            owned.insert(v.name.as_str(), (mi, vi));
        }
    }
    let target_vars: BTreeSet<&str> = target.state_vars.iter().map(|v| v.name.as_str()).collect();

    struct Local<'a> {
        dst: usize,
        tests: Vec<(usize, usize, &'a Constraint)>,
        kept: Guard,
    }
    let mut locals: Vec<Vec<Vec<Local<'_>>>> = Vec::new();
    for m in close {
        let index: BTreeMap<&str, usize> = m.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let mut out: Vec<Vec<Local<'_>>> = (0..m.states.len()).map(|_| Vec::new()).collect();
        for t in &m.transitions {
            let mut tests = Vec::new();
            let mut kept = Guard::any();
            for (var, c) in &t.guard.constraints {
                if let Some(&(mi, vi)) = owned.get(var.as_str()) {
                    tests.push((mi, vi, c));
                } else if target_vars.contains(var.as_str()) {
                    kept = kept.with(var.clone(), c.clone());
                }
            }
            out[index[t.src.as_str()]].push(Local { dst: index[t.dst.as_str()], tests, kept: kept.canonical() });
        }
        locals.push(out);
    }

    let label = |tuple: &[usize]| -> Vec<String> {
        visible
            .iter()
            .map(|v| {
                let (mi, vi) = owned[v.name.as_str()];
                close[mi].states[tuple[mi]].valuation[vi].clone()
            })
            .collect()
    };
    let id = |tuple: &[usize]| -> String {
        let parts: Vec<&str> = tuple.iter().zip(close).map(|(&l, m)| m.states[l].id.as_str()).collect();
        if parts.is_empty() {
            "idle".to_string()
        } else {
            parts.join(".")
        }
    };

    let init: Vec<usize> = close.iter().map(|m| m.state_index(&m.initial).unwrap()).collect();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut tuples = vec![init.clone()];
    index.insert(init, 0);
    let mut transitions = Vec::new();
    let mut s = 0;
    while s < tuples.len() {
        let cur = tuples[s].clone();
        for (mi, m) in locals.iter().enumerate() {
            for t in &m[cur[mi]] {
                let holds = t.tests.iter().all(|&(oi, vi, c)| c.holds(&close[oi].states[cur[oi]].valuation[vi]));
                if !holds {
                    continue;
                }
                let mut next = cur.clone();
                next[mi] = t.dst;
                let dst = match index.get(&next) {
                    Some(&d) => d,
                    None => {
                        if tuples.len() >= limits.max_states {
                            return Err(Error::ResourceLimit { resource: Resource::States, limit: limits.max_states as u64 });
                        }
                        index.insert(next.clone(), tuples.len());
                        tuples.push(next);
                        tuples.len() - 1
                    }
                };
                transitions.push((s, t.kept.clone(), dst));
                if transitions.len() > limits.max_transitions {
                    return Err(Error::ResourceLimit {
                        resource: Resource::Transitions,
                        limit: limits.max_transitions as u64,
                    });
                }
            }
        }
        s += 1;
    }

    let ids: Vec<String> = tuples.iter().map(|t| id(t)).collect();
    Ok(Product {
        states: tuples.iter().zip(&ids).map(|(t, id)| StateDecl { id: id.clone(), valuation: label(t) }).collect(),
        transitions: transitions
            .into_iter()
            .enumerate()
            .map(|(i, (src, guard, dst))| TransitionDecl {
                src: ids[src].clone(),
                dst: ids[dst].clone(),
                guard,
                action: format!("p{i}"),
            })
            .collect(),
    })
}

/// Drops `(g, B)` when another `(g', B)` with `g ⇒ g'` is present. Guard
/// ids are canonical, so distinct ids never imply each other both ways.
fn prune(moves: &mut Vec<(usize, usize)>, implies: &[Vec<bool>]) {
    let all = moves.clone();
    moves.retain(|&(g, b)| !all.iter().any(|&(h, c)| c == b && h != g && implies[g][h]));
}

/// Quotient by the coarsest partition that refines equality of state
/// valuations and is stable under guarded transitions. Parallel moves into
/// the same class whose guard is subsumed by a weaker one are dropped.
/// Each class keeps the id of its first member.
pub fn quotient_reduce(m: &ModuleDecl) -> ModuleDecl {
    let n = m.states.len();
    let index: BTreeMap<&str, usize> = m.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut guards: Vec<Guard> = Vec::new();
    let mut guard_ids: BTreeMap<Guard, usize> = BTreeMap::new();
    let mut out: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
    for (ti, t) in m.transitions.iter().enumerate() {
        let g = t.guard.canonical();
        let gid = *guard_ids.entry(g.clone()).or_insert_with(|| {
            guards.push(g);
            guards.len() - 1
        });
        out[index[t.src.as_str()]].push((gid, index[t.dst.as_str()], ti));
    }
    let implies: Vec<Vec<bool>> =
        guards.iter().map(|g| guards.iter().map(|h| g.implies(h)).collect()).collect();

    let mut block = vec![0usize; n];
    {
        let mut labels: BTreeMap<&[String], usize> = BTreeMap::new();
        for (i, s) in m.states.iter().enumerate() {
            let next = labels.len();
            block[i] = *labels.entry(s.valuation.as_slice()).or_insert(next);
        }
    }
    let signature = |block: &[usize], s: usize| -> Vec<(usize, usize)> {
        let mut moves: Vec<(usize, usize)> = out[s].iter().map(|&(g, d, _)| (g, block[d])).collect();
        moves.sort_unstable();
        moves.dedup();
        prune(&mut moves, &implies);
        moves
    };
    let mut count = block.iter().max().map_or(0, |b| b + 1);
    loop {
        let mut sigs: BTreeMap<(usize, Vec<(usize, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0usize; n];
        for s in 0..n {
            let key = (block[s], signature(&block, s));
            let fresh = sigs.len();
            next[s] = *sigs.entry(key).or_insert(fresh);
        }
        let new_count = sigs.len();
        block = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }

    let mut reps: Vec<usize> = Vec::new();
    let mut rep_of = vec![usize::MAX; count];
    for s in 0..n {
        if rep_of[block[s]] == usize::MAX {
            rep_of[block[s]] = s;
            reps.push(s);
        }
    }
    let mut q = ModuleDecl::new(m.name.clone());
    q.state_vars = m.state_vars.clone();
    q.inputs = m.inputs.clone();
    q.provenance = m.provenance.clone();
    q.states = reps.iter().map(|&r| m.states[r].clone()).collect();
    q.initial = m.states[rep_of[block[index[m.initial.as_str()]]]].id.clone();
    for &r in &reps {
        let keep = signature(&block, r);
        let mut done = BTreeSet::new();
        for &(g, d, ti) in &out[r] {
            let key = (g, block[d]);
            if keep.contains(&key) && done.insert(key) {
                let t = &m.transitions[ti];
                q.transitions.push(TransitionDecl {
                    src: m.states[r].id.clone(),
                    dst: m.states[rep_of[block[d]]].id.clone(),
                    guard: guards[g].clone(),
                    action: t.action.clone(),
                });
            }
        }
    }
    q
}

/// Canonical names: states `s<i>` in breadth-first order from the initial
/// state, moves `m<i>` in order of appearance.
fn rename(m: &ModuleDecl) -> ModuleDecl {
    let index: BTreeMap<&str, usize> = m.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut order = vec![usize::MAX; m.states.len()];
    let mut queue = VecDeque::from([index[m.initial.as_str()]]);
    let mut seq = Vec::new();
    order[queue[0]] = 0;
    while let Some(s) = queue.pop_front() {
        seq.push(s);
        for t in m.outgoing(&m.states[s].id) {
            let d = index[t.dst.as_str()];
            if order[d] == usize::MAX {
                order[d] = seq.len() + queue.len();
                queue.push_back(d);
            }
        }
    }
    let name = |i: usize| format!("s{}", order[i]);
    let mut r = ModuleDecl::new(m.name.clone());
    r.state_vars = m.state_vars.clone();
    r.inputs = m.inputs.clone();
    r.provenance = m.provenance.clone();
    r.initial = name(index[m.initial.as_str()]);
    r.states = seq.iter().map(|&s| StateDecl { id: name(s), valuation: m.states[s].valuation.clone() }).collect();
    let mut k = 0;
    for &s in &seq {
        for t in m.outgoing(&m.states[s].id) {
            r.transitions.push(TransitionDecl {
                src: name(s),
                dst: name(index[t.dst.as_str()]),
                guard: t.guard.clone(),
                action: format!("m{k}"),
            });
            k += 1;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose;
    use crate::parse_spec;
    use crate::voting::generate_simple_voting;

    #[test]
    fn voting_distances() {
        let doc = generate_simple_voting(2).unwrap();
        assert_eq!(communication_distance(&doc, "Voter1", "Coercer").unwrap(), Some(1));
        assert_eq!(communication_distance(&doc, "Voter1", "Voter2").unwrap(), Some(2));
        assert_eq!(communication_distance(&doc, "Voter1", "Voter1").unwrap(), Some(0));
        assert!(matches!(communication_distance(&doc, "Voter1", "X"), Err(Error::UnknownModule(_))));
    }

    #[test]
    fn close_sets() {
        let doc = generate_simple_voting(3).unwrap();
        assert_eq!(close_modules(&doc, "Voter1", 1).unwrap(), ["Coercer"]);
        assert_eq!(close_modules(&doc, "Voter1", 2).unwrap(), ["Voter2", "Voter3", "Coercer"]);
        assert!(close_modules(&doc, "Voter1", 0).is_err());
    }

    #[test]
    fn disconnected_modules() {
        let doc = parse_spec("MODULE A\n STATE a [ ]\n INIT a\nMODULE B\n STATE b [ ]\n INIT b\n").unwrap();
        assert_eq!(communication_distance(&doc, "A", "B").unwrap(), None);
        assert!(close_modules(&doc, "A", 1).unwrap().is_empty());
    }

    #[test]
    fn voter_assumption_tracks_its_punishment() {
        let doc = generate_simple_voting(2).unwrap();
        let a = generate_assumption(&doc, "Voter1", 1).unwrap();
        let m = &a.module;
        assert_eq!(m.name, "Assume_Voter1");
        assert_eq!(m.state_vars.len(), 1);
        assert_eq!(m.state_vars[0].name, "pun1");
        assert_eq!(m.inputs.len(), 1);
        assert_eq!(m.inputs[0].name, "reported1");
        assert_eq!(a.product_states, 9);
        assert_eq!(m.states.len(), 3);
        assert_eq!(m.initial, "s0");
        assert!(m.is_synthetic());
        // Every guard only mentions reported1.
        assert!(m.transitions.iter().all(|t| t.guard.canonical().constraints.iter().all(|(v, _)| v == "reported1")));
    }

    #[test]
    fn projected_coercer_shrinks() {
        let doc = generate_simple_voting(3).unwrap();
        let a = generate_assumption(&doc, "Voter1", 1).unwrap();
        assert_eq!(a.product_states, 27);
        assert!(a.module.states.len() < 27);
    }

    #[test]
    fn local_composition_is_small() {
        let doc = generate_simple_voting(3).unwrap();
        let a = generate_assumption(&doc, "Voter1", 1).unwrap();
        let local = compose(&a.local_spec(&doc).unwrap()).unwrap();
        assert!(local.num_states() <= 15 * a.module.states.len());
    }

    #[test]
    fn target_without_inputs_gets_trivial_assumption() {
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a0 [ x=0 ]\n STATE a1 [ x=1 ]\n INIT a0\n TRANS a0 -> a1 ;\n\
             MODULE B\n VAR y : { 0, 1 }\n INPUT x\n STATE b0 [ y=0 ]\n STATE b1 [ y=1 ]\n INIT b0\n TRANS b0 -> b1 [ x=1 ] ;\n",
        )
        .unwrap();
        let a = generate_assumption(&doc, "A", 1).unwrap();
        assert_eq!(a.module.states.len(), 1);
        assert_eq!(a.module.transitions.len(), 1);
        assert!(a.module.state_vars.is_empty());
        let lone = parse_spec("MODULE A\n STATE a [ ]\n INIT a\n").unwrap();
        let a = generate_assumption(&lone, "A", 1).unwrap();
        assert_eq!((a.module.states.len(), a.module.transitions.len()), (1, 1));
    }

    #[test]
    fn quotient_merges_symmetric_states() {
        let doc = parse_spec(
            "MODULE M\n VAR x : { 0 }\n STATE a [ x=0 ]\n STATE b [ x=0 ]\n INIT a\n TRANS a -> b ;\n TRANS b -> a ;\n",
        )
        .unwrap();
        let q = quotient_reduce(&doc.modules()[0]);
        assert_eq!(q.states.len(), 1);
        assert_eq!(q.transitions.len(), 1);
        assert_eq!(q.states[0].id, "a");
    }

    #[test]
    fn quotient_keeps_distinct_labels() {
        let doc = parse_spec(
            "MODULE M\n VAR x : { 0, 1 }\n STATE a [ x=0 ]\n STATE b [ x=1 ]\n INIT a\n TRANS a -> b ;\n TRANS b -> a ;\n",
        )
        .unwrap();
        let q = quotient_reduce(&doc.modules()[0]);
        assert_eq!(q.states.len(), 2);
        assert_eq!(quotient_reduce(&q), q);
    }

    #[test]
    fn user_assumption_must_match_interface() {
        let doc = generate_simple_voting(2).unwrap();
        let generated = generate_assumption(&doc, "Voter1", 1).unwrap();
        assert!(Assumption::user_defined(&doc, "Voter1", generated.module.clone()).is_ok());
        let mut wrong = generated.module.clone();
        wrong.state_vars[0].name = "pun2".into();
        assert!(matches!(Assumption::user_defined(&doc, "Voter1", wrong), Err(Error::InvalidAssumption(_))));
    }
}
