//! Path coverage of a full system by `target ∥ assumption`.
//!
//! Both models are observed through the target: its local state and the
//! values of its inputs. A step of the target is labelled with its action;
//! any other step is labelled with the new observation, and is invisible
//! when the observation does not change.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use agrmc_core::{GlobalModel, View};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageError {
    /// Observations along the uncovered path, ending at the first step the
    /// local model cannot follow.
    pub path: Vec<String>,
}

impl fmt::Display for CoverageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uncovered path: {}", self.path.join(" -> "))
    }
}

struct Observed<'m> {
    m: &'m GlobalModel,
    target: usize,
    obs: Vec<View>,
}

impl<'m> Observed<'m> {
    fn new(m: &'m GlobalModel, target: &str) -> Self {
        let t = m.module_index(target).expect("target in model");
        let obs = (0..m.num_states()).map(|s| m.view_of(target, s).unwrap()).collect();
        Observed { m, target: t, obs }
    }

    /// (target action or `None` for an environment step, destination)
    fn steps(&self, s: usize) -> impl Iterator<Item = (Option<&str>, usize)> + '_ {
        self.m.successors(s).iter().map(move |e| {
            let d = e.dst as usize;
            if e.module as usize == self.target {
                (Some(self.m.action_name(self.target, e.action)), d)
            } else {
                (None, d)
            }
        })
    }

    /// States reachable from `set` through invisible environment steps.
    fn close(&self, set: &mut BTreeSet<usize>) {
        let mut queue: VecDeque<usize> = set.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for (label, d) in self.steps(s) {
                if label.is_none() && self.obs[d] == self.obs[s] && set.insert(d) {
                    queue.push_back(d);
                }
            }
        }
    }
}

/// Greatest simulation of the full model by the local one, restricted to
/// pairs with equal observations. An environment step of the full model is
/// matched by staying put when invisible, and otherwise by one environment
/// step of the local model with the same new observation.
pub fn simulation_check(full: &GlobalModel, local: &GlobalModel, target: &str) -> Result<usize, CoverageError> {
    let f = Observed::new(full, target);
    let l = Observed::new(local, target);
    let (nf, nl) = (full.num_states(), local.num_states());
    let mut rel = vec![false; nf * nl];
    for s in 0..nf {
        for t in 0..nl {
            rel[s * nl + t] = f.obs[s] == l.obs[t];
        }
    }
    loop {
        let mut changed = false;
        for s in 0..nf {
            for t in 0..nl {
                if !rel[s * nl + t] {
                    continue;
                }
                let ok = f.steps(s).all(|(label, d)| match label {
                    Some(a) => l.steps(t).any(|(b, e)| b == Some(a) && rel[d * nl + e]),
                    None => {
                        (f.obs[d] == f.obs[s] && rel[d * nl + t])
                            || l.steps(t).any(|(b, e)| b.is_none() && rel[d * nl + e])
                    }
                });
                if !ok {
                    rel[s * nl + t] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if rel[full.initial() * nl + local.initial()] {
        Ok(rel.iter().filter(|&&b| b).count())
    } else {
        Err(CoverageError { path: vec![f.obs[full.initial()].to_string()] })
    }
}

/// Bounded trace inclusion by subset construction: every path of the full
/// model of at most `depth` steps must have an observationally equal path
/// in the local model. Returns the number of (state, subset) pairs explored.
pub fn trace_inclusion(
    full: &GlobalModel,
    local: &GlobalModel,
    target: &str,
    depth: usize,
) -> Result<usize, CoverageError> {
    let f = Observed::new(full, target);
    let l = Observed::new(local, target);
    let mut init = BTreeSet::from([local.initial()]);
    l.close(&mut init);
    if f.obs[full.initial()] != l.obs[local.initial()] {
        return Err(CoverageError { path: vec![f.obs[full.initial()].to_string()] });
    }
    let mut seen: HashSet<(usize, BTreeSet<usize>)> = HashSet::new();
    // (full state, local subset, depth, path so far)
    let mut queue: VecDeque<(usize, BTreeSet<usize>, usize, Vec<String>)> = VecDeque::new();
    seen.insert((full.initial(), init.clone()));
    queue.push_back((full.initial(), init, 0, vec![f.obs[full.initial()].to_string()]));
    while let Some((s, set, k, path)) = queue.pop_front() {
        if k == depth {
            continue;
        }
        for (label, d) in f.steps(s) {
            let next: BTreeSet<usize> = match label {
                None if f.obs[d] == f.obs[s] => set.clone(),
                None => set
                    .iter()
                    .flat_map(|&t| l.steps(t).filter(|(b, e)| b.is_none() && l.obs[*e] == f.obs[d]))
                    .map(|(_, e)| e)
                    .collect(),
                Some(a) => set
                    .iter()
                    .flat_map(|&t| l.steps(t).filter(move |(b, _)| *b == Some(a)))
                    .map(|(_, e)| e)
                    .filter(|&e| l.obs[e] == f.obs[d])
                    .collect(),
            };
            let mut next = next;
            l.close(&mut next);
            let mut extended = path.clone();
            extended.push(match label {
                Some(a) => format!("{a} / {}", f.obs[d]),
                None => f.obs[d].to_string(),
            });
            if next.is_empty() {
                return Err(CoverageError { path: extended });
            }
            if seen.insert((d, next.clone())) {
                queue.push_back((d, next, k + 1, extended));
            }
        }
    }
    Ok(seen.len())
}
