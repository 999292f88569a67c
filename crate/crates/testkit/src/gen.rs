use std::collections::BTreeSet;

use agrmc_core::{
    compose, Formula, GlobalModel, GroupDecl, Guard, InputVar, ModuleDecl, Predicate, SpecDocument, StateDecl, Temporal,
    TransitionDecl, VarDecl,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_STATES: usize = 200;
pub const MAX_STRATEGIES: u64 = 1024;
/// Smaller systems are rejected; they rarely exercise imperfect information.
pub const MIN_STATES: usize = 8;

/// One generated instance.
#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub doc: SpecDocument,
    pub formula: Formula,
    pub model: GlobalModel,
}

const VALUES: [&str; 3] = ["0", "1", "2"];

fn random_module(rng: &mut ChaCha8Rng, i: usize, n: usize, domains: &[usize]) -> ModuleDecl {
    let mut m = ModuleDecl::new(format!("M{i}"));
    m.state_vars.push(VarDecl::new(format!("v{i}"), VALUES[..domains[i]].iter().copied()));
    for j in 0..n {
        if j != i && rng.gen_bool(0.5) {
            m.inputs.push(InputVar::unresolved(format!("v{j}")));
        }
    }
    let states = rng.gen_range(2..=5);
    for s in 0..states {
        let value = VALUES[rng.gen_range(0..domains[i])];
        m.states.push(StateDecl { id: format!("q{s}"), valuation: vec![value.into()] });
    }
    m.initial = "q0".into();
    let mut k = 0;
    for s in 0..states {
        // Occasionally leave a state without moves to exercise stuttering.
        let moves = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=3) };
        for _ in 0..moves {
            let mut guard = Guard::any();
            for input in &m.inputs {
                if rng.gen_bool(0.25) {
                    let j: usize = input.name[1..].parse().unwrap();
                    let v = VALUES[rng.gen_range(0..domains[j])];
                    guard = if rng.gen_bool(0.5) { guard.eq(input.name.clone(), v) } else { guard.neq(input.name.clone(), v) };
                }
            }
            m.transitions.push(TransitionDecl {
                src: format!("q{s}"),
                dst: format!("q{}", rng.gen_range(0..states)),
                guard,
                action: format!("a{k}"),
            });
            k += 1;
        }
    }
    m
}

fn random_predicate(rng: &mut ChaCha8Rng, n: usize, domains: &[usize]) -> Predicate {
    let atom = |rng: &mut ChaCha8Rng| {
        let j = rng.gen_range(0..n);
        Predicate::atom(format!("v{j}"), VALUES[rng.gen_range(0..domains[j])])
    };
    match rng.gen_range(0..4) {
        0 => atom(rng),
        1 => Predicate::not(atom(rng)),
        2 => Predicate::or(atom(rng), atom(rng)),
        _ => Predicate::and(Predicate::not(atom(rng)), atom(rng)),
    }
}

/// Number of uniform memoryless strategies of the coalition.
pub fn strategy_count(m: &GlobalModel, coalition: &[String]) -> u64 {
    let mut total: u64 = 1;
    for agent in coalition {
        let a = m.module_index(agent).unwrap();
        let mut seen = BTreeSet::new();
        for s in 0..m.num_states() {
            if seen.insert(m.view_of(agent, s).unwrap()) {
                let choices = m.successors(s).iter().filter(|e| e.module as usize == a).count() as u64;
                total = total.saturating_mul(choices);
            }
        }
    }
    total
}

/// A random case within the size bounds, deterministic in `seed`.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(2..=4);
        let domains: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
        let modules: Vec<ModuleDecl> = (0..n).map(|i| random_module(&mut rng, i, n, &domains)).collect();
        let Ok(doc) = SpecDocument::new(modules, Vec::new()) else { continue };
        let Ok(model) = compose(&doc) else { continue };
        if model.num_states() > MAX_STATES || model.num_states() < MIN_STATES {
            continue;
        }
        let mut names: Vec<String> = (0..n).map(|i| format!("M{i}")).collect();
        names.shuffle(&mut rng);
        let size = rng.gen_range(1..=n);
        let mut coalition: Vec<String> = names.into_iter().take(size).collect();
        coalition.sort();
        if strategy_count(&model, &coalition) > MAX_STRATEGIES {
            continue;
        }
        let temporal = if rng.gen_bool(0.6) { Temporal::Always } else { Temporal::Eventually };
        let formula = Formula::new(coalition, temporal, random_predicate(&mut rng, n, &domains));
        return Case { seed, doc, formula, model };
    }
}

/// `count` cases with seeds derived from `base`.
pub fn corpus(count: usize, base: u64) -> Vec<Case> {
    (0..count as u64).map(|i| random_case(base.wrapping_mul(1_000_003).wrapping_add(i))).collect()
}

/// A case whose document carries a goal for one module, phrased over
/// variables that module can observe, so it can be checked compositionally.
pub fn random_agr_case(seed: u64) -> Case {
    let base = random_case(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let target = base.formula.coalition[0].clone();
    let module = base.doc.module(&target).unwrap();
    let mut visible: Vec<(&str, &[String])> = vec![(&module.state_vars[0].name, &module.state_vars[0].domain)];
    for i in &module.inputs {
        visible.push((&i.name, &i.domain));
    }
    let atom = |rng: &mut ChaCha8Rng| {
        let (var, domain) = visible[rng.gen_range(0..visible.len())];
        Predicate::atom(var, domain[rng.gen_range(0..domain.len())].clone())
    };
    let predicate = match rng.gen_range(0..3) {
        0 => Predicate::not(atom(&mut rng)),
        1 => Predicate::or(atom(&mut rng), atom(&mut rng)),
        _ => atom(&mut rng),
    };
    let formula = Formula::new(vec![target.clone()], base.formula.temporal, predicate);
    let (modules, _) = base.doc.into_parts();
    let groups = modules
        .iter()
        .map(|m| GroupDecl {
            name: format!("G{}", m.name),
            members: vec![m.name.clone()],
            goal: (m.name == target).then(|| formula.clone()),
        })
        .collect();
    let doc = SpecDocument::new(modules, groups).unwrap();
    Case { seed, doc, formula, model: base.model }
}
