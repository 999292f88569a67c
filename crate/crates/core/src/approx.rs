//! Fixpoint approximation of uniform strategic ability.
//!
//! Two state sets bracket the states from which a uniform memoryless
//! strategy exists:
//!
//! * the **upper** set is the perfect-information winning region, where the
//!   coalition may choose per state;
//! * the **lower** set only admits states whose coalition views can all be
//!   served by one common action per view, so it carries a uniform strategy.
//!
//! Interleaving makes the controllable pre-image factorize: a state is safe
//! under a choice when every move of every non-coalition module, and the
//! chosen move of every coalition member, lands in the target set.

use alloc::vec;
use alloc::vec::Vec;

use crate::compose::GlobalModel;
use crate::formula::{Formula, Temporal};
use crate::strategy::{Answer, Choices, Game, Stats, Strategy, Verdict};
use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ApproxOptions {
    /// Evaluate each view over every state that shares it instead of only
    /// the current candidate set. Coarser, but independent of iteration
    /// order.
    pub global_classes: bool,
}

/// Both fixpoints and the uniform strategy read off the lower one.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub lower: Vec<bool>,
    pub upper: Vec<bool>,
    pub strategy: Strategy,
    pub start: Vec<usize>,
    pub visited: u64,
}

pub fn fixpoint_approx(m: &GlobalModel, f: &Formula) -> Result<Verdict> {
    fixpoint_approx_with(m, f, ApproxOptions::default())
}

pub fn fixpoint_approx_with(m: &GlobalModel, f: &Formula, opts: ApproxOptions) -> Result<Verdict> {
    let a = approximate(m, f, opts)?;
    let stats = Stats { states: m.num_states(), transitions: m.num_transitions(), visited: a.visited, elapsed: None };
    let answer = if a.start.iter().all(|&s| a.lower[s]) {
        Answer::Yes
    } else if a.start.iter().any(|&s| !a.upper[s]) {
        Answer::No
    } else {
        Answer::Inconclusive
    };
    let witness = (answer == Answer::Yes).then_some(a.strategy);
    Ok(Verdict { answer, witness, counterexample: None, stats })
}

pub fn approximate(m: &GlobalModel, f: &Formula, opts: ApproxOptions) -> Result<Approximation> {
    let game = Game::new(m, f)?;
    let mut fx = Fixpoints { game: &game, opts, visited: 0 };
    let upper = fx.upper();
    let (lower, choices) = fx.lower();
    Ok(Approximation {
        lower,
        upper,
        strategy: game.complete(&choices),
        start: game.start_set().into_iter().map(|s| s as usize).collect(),
        visited: fx.visited,
    })
}

struct Fixpoints<'g, 'm> {
    game: &'g Game<'m>,
    opts: ApproxOptions,
    visited: u64,
}

/// Per coalition member and view, a flag per enabled action position.
struct ActionSets {
    offsets: Vec<Vec<usize>>,
    flags: Vec<Vec<bool>>,
}

impl ActionSets {
    fn new(game: &Game<'_>) -> Self {
        let mut offsets = Vec::new();
        let mut flags = Vec::new();
        for t in &game.views {
            let mut off = Vec::with_capacity(t.len() + 1);
            let mut acc = 0;
            for acts in &t.actions {
                off.push(acc);
                acc += acts.len();
            }
            off.push(acc);
            offsets.push(off);
            flags.push(vec![true; acc]);
        }
        ActionSets { offsets, flags }
    }

    fn reset(&mut self) {
        for f in &mut self.flags {
            f.fill(true);
        }
    }

    fn range(&self, ci: usize, v: usize) -> core::ops::Range<usize> {
        self.offsets[ci][v]..self.offsets[ci][v + 1]
    }

    fn clear(&mut self, ci: usize, v: usize) {
        let r = self.range(ci, v);
        self.flags[ci][r].fill(false);
    }

    fn first(&self, ci: usize, v: usize) -> Option<usize> {
        let r = self.range(ci, v);
        self.flags[ci][r].iter().position(|&b| b)
    }
}

impl Fixpoints<'_, '_> {
    /// Visits the edges of `s` as (coalition position, action position, dst);
    /// non-coalition edges report `None`.
    fn edges(&self, s: usize, mut f: impl FnMut(Option<(usize, usize)>, usize)) {
        let mut module = usize::MAX;
        let mut pos = 0;
        for e in self.game.model.successors(s) {
            let mi = e.module as usize;
            if mi != module {
                module = mi;
                pos = 0;
            }
            match self.game.member[mi] {
                None => f(None, e.dst as usize),
                Some(ci) => f(Some((ci, pos)), e.dst as usize),
            }
            pos += 1;
        }
    }

    /// Perfect-information controllable pre-image test.
    fn cpre(&self, s: usize, target: &[bool]) -> bool {
        let k = self.game.coalition.len();
        let mut ok = true;
        let mut some = vec![false; k];
        self.edges(s, |who, d| match who {
            None => ok &= target[d],
            Some((ci, _)) => some[ci] |= target[d],
        });
        ok && some.iter().all(|&b| b)
    }

    fn upper(&mut self) -> Vec<bool> {
        let g = self.game;
        let n = g.model.num_states();
        match g.temporal {
            Temporal::Always => {
                let mut x = g.sat.clone();
                loop {
                    let mut changed = false;
                    for s in 0..n {
                        if x[s] {
                            self.visited += 1;
                            if !self.cpre(s, &x) {
                                x[s] = false;
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        return x;
                    }
                }
            }
            Temporal::Eventually => {
                let mut y = g.sat.clone();
                loop {
                    let mut changed = false;
                    for s in 0..n {
                        if !y[s] {
                            self.visited += 1;
                            if self.cpre(s, &y) {
                                y[s] = true;
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        return y;
                    }
                }
            }
        }
    }

    fn lower(&mut self) -> (Vec<bool>, Choices) {
        match self.game.temporal {
            Temporal::Always => self.lower_always(),
            Temporal::Eventually => self.lower_eventually(),
        }
    }

    fn lower_always(&mut self) -> (Vec<bool>, Choices) {
        let g = self.game;
        let n = g.model.num_states();
        let k = g.coalition.len();
        let mut x = g.sat.clone();
        let mut sets = ActionSets::new(g);
        loop {
            sets.reset();
            let mut changed = false;
            for s in 0..n {
                if !x[s] {
                    if self.opts.global_classes {
                        for ci in 0..k {
                            sets.clear(ci, g.view(ci, s));
                        }
                    }
                    continue;
                }
                self.visited += 1;
                let mut env_ok = true;
                let views: Vec<usize> = (0..k).map(|ci| g.view(ci, s)).collect();
                let flags = &mut sets.flags;
                let offsets = &sets.offsets;
                self.edges(s, |who, d| match who {
                    None => env_ok &= x[d],
                    Some((ci, j)) => {
                        if !x[d] {
                            flags[ci][offsets[ci][views[ci]] + j] = false;
                        }
                    }
                });
                if !env_ok {
                    x[s] = false;
                    changed = true;
                }
            }
            for s in 0..n {
                if x[s] && (0..k).any(|ci| sets.first(ci, g.view(ci, s)).is_none()) {
                    x[s] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut choices = g.empty_choices();
        for s in 0..n {
            if x[s] {
                for ci in 0..k {
                    let v = g.view(ci, s);
                    let j = sets.first(ci, v).expect("non-empty at the fixpoint");
                    choices[ci][v] = Some(g.views[ci].actions[v][j]);
                }
            }
        }
        (x, choices)
    }

    /// Rounds of simultaneous additions. A view's action is committed the
    /// first time a state that needs it enters, and every later state with
    /// that view must enter through the same action.
    fn lower_eventually(&mut self) -> (Vec<bool>, Choices) {
        let g = self.game;
        let n = g.model.num_states();
        let k = g.coalition.len();
        let mut y = g.sat.clone();
        // Committed action positions per view.
        let mut committed: Vec<Vec<Option<usize>>> = g.views.iter().map(|t| vec![None; t.len()]).collect();
        let sets = ActionSets::new(g);
        let mut support: Vec<Vec<u32>> = sets.flags.iter().map(|f| vec![0; f.len()]).collect();
        let mut outside: Vec<Vec<u32>> = g.views.iter().map(|t| vec![0; t.len()]).collect();
        let mut feasible: Vec<Vec<usize>> = vec![Vec::new(); k];

        // Positions of coalition member `ci` at `s` whose move lands in `y`,
        // or `None` if some environment move leaves `y`.
        let targets = |this: &mut Self, s: usize, y: &[bool], feasible: &mut Vec<Vec<usize>>| -> bool {
            this.visited += 1;
            for f in feasible.iter_mut() {
                f.clear();
            }
            let mut env_ok = true;
            this.edges(s, |who, d| match who {
                None => env_ok &= y[d],
                Some((ci, j)) => {
                    if y[d] {
                        feasible[ci].push(j);
                    }
                }
            });
            env_ok
        };

        loop {
            for c in &mut support {
                c.fill(0);
            }
            for c in &mut outside {
                c.fill(0);
            }
            // Pass 1: count which action each uncommitted view could use.
            for s in 0..n {
                if y[s] {
                    continue;
                }
                for ci in 0..k {
                    outside[ci][g.view(ci, s)] += 1;
                }
                if !targets(self, s, &y, &mut feasible) {
                    continue;
                }
                let views: Vec<usize> = (0..k).map(|ci| g.view(ci, s)).collect();
                let viable = (0..k).all(|ci| match committed[ci][views[ci]] {
                    Some(j) => feasible[ci].contains(&j),
                    None => !feasible[ci].is_empty(),
                });
                if !viable {
                    continue;
                }
                for ci in 0..k {
                    if committed[ci][views[ci]].is_none() {
                        for &j in &feasible[ci] {
                            support[ci][sets.offsets[ci][views[ci]] + j] += 1;
                        }
                    }
                }
            }
            // Tentative choice: the best supported action, lowest position on ties.
            let mut tentative: Vec<Vec<Option<usize>>> = committed.clone();
            for ci in 0..k {
                for v in 0..g.views[ci].len() {
                    if committed[ci][v].is_some() {
                        continue;
                    }
                    let r = sets.range(ci, v);
                    let counts = &support[ci][r];
                    let best = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)));
                    if let Some((j, &c)) = best {
                        let whole = !self.opts.global_classes || c == outside[ci][v];
                        if c > 0 && whole {
                            tentative[ci][v] = Some(j);
                        }
                    }
                }
            }
            // Pass 2: states whose every view is served by the tentative choice.
            let mut entering = Vec::new();
            for s in 0..n {
                if y[s] || !targets(self, s, &y, &mut feasible) {
                    continue;
                }
                let enters = (0..k).all(|ci| match tentative[ci][g.view(ci, s)] {
                    Some(j) => feasible[ci].contains(&j),
                    None => false,
                });
                if enters {
                    entering.push(s);
                }
            }
            if entering.is_empty() {
                break;
            }
            for &s in &entering {
                y[s] = true;
                for ci in 0..k {
                    let v = g.view(ci, s);
                    committed[ci][v] = tentative[ci][v];
                }
            }
        }
        let mut choices = g.empty_choices();
        for ci in 0..k {
            for v in 0..g.views[ci].len() {
                if let Some(j) = committed[ci][v] {
                    choices[ci][v] = Some(g.views[ci].actions[v][j]);
                }
            }
        }
        (y, choices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose;
    use crate::formula::Predicate;
    use crate::parse_spec;
    use crate::strategy::check_strategy;
    use crate::voting::{generate_simple_voting, voter_goal};

    /// The environment may flip `h` while the agent waits, so the agent
    /// starts in either of two states it cannot tell apart, and each needs
    /// a different action.
    const GADGET: &str = "\
MODULE Env
  VAR h : { 0, 1 }
  INPUT r
  STATE e0 [ h=0 ]
  STATE e1 [ h=1 ]
  INIT e0
  TRANS e0 -> e1 [ r=w ] : flip ;
MODULE Agt
  VAR r : { w, ok, bad }
  STATE a [ r=w ]
  STATE g [ r=ok ]
  STATE b [ r=bad ]
  INIT a
  TRANS a -> g : left ;
  TRANS a -> b : right ;
";

    #[test]
    fn voting_is_conclusive() {
        for k in 1..=3 {
            let m = compose(&generate_simple_voting(k).unwrap()).unwrap();
            let v = fixpoint_approx(&m, &voter_goal(1)).unwrap();
            assert_eq!(v.answer, Answer::Yes, "k={k}");
            let sigma = v.witness.unwrap();
            assert_eq!(check_strategy(&m, &sigma, &voter_goal(1)).unwrap().answer, Answer::Yes);
        }
    }

    #[test]
    fn lower_is_inside_upper() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        for f in [voter_goal(1), Formula::eventually(["Voter1"], Predicate::atom("pstatus1", "F"))] {
            for global_classes in [false, true] {
                let a = approximate(&m, &f, ApproxOptions { global_classes }).unwrap();
                assert!(a.lower.iter().zip(&a.upper).all(|(&l, &u)| !l || u));
            }
        }
    }

    #[test]
    fn coercer_cannot_force_a_decision_alone() {
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let f = Formula::eventually(["Coercer"], Predicate::atom("pun1", "T"));
        assert_eq!(fixpoint_approx(&m, &f).unwrap().answer, Answer::No);
    }

    #[test]
    fn eventually_with_a_single_agent() {
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1, 2 }\n STATE a0 [ x=0 ]\n STATE a1 [ x=1 ]\n STATE a2 [ x=2 ]\n INIT a0\n \
             TRANS a0 -> a0 : stay ;\n TRANS a0 -> a1 : go ;\n TRANS a1 -> a2 : on ;\n",
        )
        .unwrap();
        let m = compose(&doc).unwrap();
        let f = Formula::eventually(["A"], Predicate::atom("x", "2"));
        let v = fixpoint_approx(&m, &f).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        assert_eq!(check_strategy(&m, v.witness.as_ref().unwrap(), &f).unwrap().answer, Answer::Yes);
    }

    #[test]
    fn indistinguishable_conflict_is_inconclusive() {
        let m = compose(&parse_spec(GADGET).unwrap()).unwrap();
        let wrong = Predicate::or(
            Predicate::and(Predicate::atom("h", "0"), Predicate::atom("r", "bad")),
            Predicate::and(Predicate::atom("h", "1"), Predicate::atom("r", "ok")),
        );
        let f = Formula::always(["Agt"], Predicate::not(wrong));
        let a = approximate(&m, &f, ApproxOptions::default()).unwrap();
        assert_eq!(a.start.len(), 2);
        assert!(a.start.iter().all(|&s| a.upper[s] && !a.lower[s]));
        assert_eq!(fixpoint_approx(&m, &f).unwrap().answer, Answer::Inconclusive);
        assert_eq!(crate::synth::dfs_synthesize(&m, &f).unwrap().answer, Answer::No);
    }
}
