//! Exhaustive enumeration of uniform memoryless strategies.
//!
//! Views are recomputed from [`GlobalModel::view_of`] and predicates are
//! evaluated on the public valuation, so nothing here depends on the
//! engines' internal tables.

use std::collections::BTreeMap;

use agrmc_core::{Formula, GlobalModel, Strategy, Temporal, View};

#[derive(Debug, Clone)]
pub struct Oracle {
    /// Some strategy wins from every start state.
    pub exists: bool,
    /// Per state: some strategy wins from that state alone.
    pub truth: Vec<bool>,
    pub start: Vec<usize>,
    pub strategies: u64,
    pub witness: Option<Strategy>,
}

struct Choice {
    view: View,
    module: usize,
    actions: Vec<String>,
}

pub fn brute_force(m: &GlobalModel, f: &Formula) -> Oracle {
    let n = m.num_states();
    let sat: Vec<bool> = (0..n)
        .map(|s| {
            let val: BTreeMap<&str, &str> = m.valuation(s).into_iter().collect();
            f.predicate.eval_with(&|v: &str| val.get(v).map(|x| x.to_string()))
        })
        .collect();

    let mut members: Vec<usize> = f.coalition.iter().map(|a| m.module_index(a).expect("known agent")).collect();
    members.sort_unstable();
    members.dedup();

    // Enumerate the views in a fixed order together with their action names.
    let mut choices: Vec<Choice> = Vec::new();
    let mut index: BTreeMap<View, usize> = BTreeMap::new();
    let mut view_of: Vec<Vec<usize>> = vec![Vec::with_capacity(members.len()); n];
    for s in 0..n {
        for &a in &members {
            let view = m.view_of(m.module_name(a), s).unwrap();
            let id = *index.entry(view.clone()).or_insert_with(|| {
                let actions = m
                    .successors(s)
                    .iter()
                    .filter(|e| e.module as usize == a)
                    .map(|e| m.action_name(a, e.action).to_string())
                    .collect();
                choices.push(Choice { view, module: a, actions });
                choices.len() - 1
            });
            view_of[s].push(id);
        }
    }

    let init_views = view_of[m.initial()].clone();
    let start: Vec<usize> = (0..n).filter(|&s| view_of[s] == init_views).collect();

    let mut truth = vec![false; n];
    let mut exists = false;
    let mut witness = None;
    let mut pick = vec![0usize; choices.len()];
    let mut strategies = 0u64;
    loop {
        strategies += 1;
        let win = winning_under(m, f.temporal, &sat, &members, &choices, &view_of, &pick);
        for s in 0..n {
            truth[s] |= win[s];
        }
        if !exists && start.iter().all(|&s| win[s]) {
            exists = true;
            let mut sigma = Strategy::new();
            for (c, &p) in choices.iter().zip(&pick) {
                sigma.insert(c.view.clone(), c.actions[p].clone());
            }
            witness = Some(sigma);
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Oracle { exists, truth, start, strategies, witness };
            }
            pick[i] += 1;
            if pick[i] < choices[i].actions.len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Winning states under one fixed strategy.
fn winning_under(
    m: &GlobalModel,
    temporal: Temporal,
    sat: &[bool],
    members: &[usize],
    choices: &[Choice],
    view_of: &[Vec<usize>],
    pick: &[usize],
) -> Vec<bool> {
    let n = m.num_states();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            m.successors(s)
                .iter()
                .filter(|e| match members.iter().position(|&a| a == e.module as usize) {
                    None => true,
                    Some(k) => {
                        let c = &choices[view_of[s][k]];
                        debug_assert_eq!(c.module, e.module as usize);
                        m.action_name(c.module, e.action) == c.actions[pick[view_of[s][k]]]
                    }
                })
                .map(|e| e.dst as usize)
                .collect()
        })
        .collect();
    match temporal {
        Temporal::Always => {
            // Losing: can reach a violation.
            let mut lose: Vec<bool> = sat.iter().map(|&b| !b).collect();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if !lose[s] && succ[s].iter().any(|&d| lose[d]) {
                        lose[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    return lose.into_iter().map(|b| !b).collect();
                }
            }
        }
        Temporal::Eventually => {
            // Winning: every path hits sat.
            let mut win = sat.to_vec();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if !win[s] && succ[s].iter().all(|&d| win[d]) {
                        win[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    return win;
                }
            }
        }
    }
}
