//! Depth-first synthesis of uniform memoryless strategies.
//!
//! The search commits to choices one view at a time. Reachability under the
//! partial strategy is grown incrementally: a reached state whose view is
//! still undecided for some coalition member is parked as *blocked* and the
//! search branches on the first such view. Committing a choice releases the
//! blocked states it decides. For `G` objectives a reached bad state prunes
//! the branch immediately; `F` objectives are checked once the strategy is
//! total on the reachable part.

use alloc::vec;
use alloc::vec::Vec;

use crate::compose::{GlobalModel, Limits};
use crate::formula::{Formula, Temporal};
use crate::strategy::{Answer, Choices, Game, Stats, Verdict};
use crate::{Error, Resource, Result};

pub fn dfs_synthesize(m: &GlobalModel, f: &Formula) -> Result<Verdict> {
    dfs_synthesize_with(m, f, Limits::default())
}

/// `limits.max_states` bounds the number of state visits over the whole
/// search, revisits in different branches included.
pub fn dfs_synthesize_with(m: &GlobalModel, f: &Formula, limits: Limits) -> Result<Verdict> {
    let game = Game::new(m, f)?;
    let start = game.start_set();
    let mut search = Search {
        game: &game,
        choices: game.empty_choices(),
        visited: vec![false; m.num_states()],
        trail: Vec::new(),
        pending: Vec::new(),
        work: Vec::new(),
        visits: 0,
        budget: limits.max_states as u64,
    };
    let found = search.run(&start)?;
    let stats = Stats {
        states: m.num_states(),
        transitions: m.num_transitions(),
        visited: search.visits,
        elapsed: None,
    };
    if found {
        let witness = game.complete(&search.choices);
        return Ok(Verdict { answer: Answer::Yes, witness: Some(witness), counterexample: None, stats });
    }
    // Every uniform strategy fails; show how the default one does.
    let fallback = game.resolve(&game.complete(&game.empty_choices()))?;
    let (cex, _) = game.check(&fallback, &start)?;
    Ok(Verdict { answer: Answer::No, witness: None, counterexample: cex, stats })
}

struct Frame {
    agent: usize,
    view: usize,
    next: usize,
    trail_len: usize,
    pending: Vec<u32>,
}

struct Search<'g, 'm> {
    game: &'g Game<'m>,
    choices: Choices,
    visited: Vec<bool>,
    trail: Vec<u32>,
    pending: Vec<u32>,
    work: Vec<u32>,
    visits: u64,
    budget: u64,
}

impl Search<'_, '_> {
    fn blocked(&self, s: usize) -> Option<(usize, usize)> {
        (0..self.game.coalition.len()).find_map(|ci| {
            let v = self.game.view(ci, s);
            self.choices[ci][v].is_none().then_some((ci, v))
        })
    }

    fn mark(&mut self, s: u32) -> Result<()> {
        self.visited[s as usize] = true;
        self.trail.push(s);
        self.visits += 1;
        if self.visits > self.budget {
            return Err(Error::ResourceLimit { resource: Resource::States, limit: self.budget });
        }
        self.work.push(s);
        Ok(())
    }

    /// Drains the work list. Returns `false` on a violation of a `G` goal.
    fn expand(&mut self) -> Result<bool> {
        let always = self.game.temporal == Temporal::Always;
        while let Some(s) = self.work.pop() {
            let s = s as usize;
            if self.game.sat[s] != always {
                if always {
                    self.work.clear();
                    return Ok(false);
                }
                // F is satisfied here; nothing beyond matters.
                continue;
            }
            if self.blocked(s).is_some() {
                self.pending.push(s as u32);
                continue;
            }
            for e in self.game.model.successors(s) {
                let d = e.dst;
                if !self.visited[d as usize] && self.game.allowed(&self.choices, s, e) == Some(true) {
                    self.mark(d)?;
                }
            }
        }
        Ok(true)
    }

    /// Releases pending states that the latest choice decided.
    fn release(&mut self) -> Result<bool> {
        let pending = core::mem::take(&mut self.pending);
        for s in pending {
            if self.blocked(s as usize).is_some() {
                self.pending.push(s);
            } else {
                self.work.push(s);
            }
        }
        self.expand()
    }

    fn undo_to(&mut self, len: usize) {
        for s in self.trail.drain(len..) {
            self.visited[s as usize] = false;
        }
    }

    fn leaf_ok(&self, start: &[u32]) -> Result<bool> {
        match self.game.temporal {
            Temporal::Always => Ok(true),
            Temporal::Eventually => Ok(self.game.check(&self.choices, start)?.0.is_none()),
        }
    }

    fn run(&mut self, start: &[u32]) -> Result<bool> {
        for &s in start {
            if !self.visited[s as usize] {
                self.mark(s)?;
            }
        }
        let mut ok = self.expand()?;
        let mut stack: Vec<Frame> = Vec::new();
        loop {
            if ok {
                // Pick the earliest parked state that is still blocked.
                let next = self.pending.iter().find_map(|&s| self.blocked(s as usize));
                match next {
                    None => {
                        if self.leaf_ok(start)? {
                            return Ok(true);
                        }
                    }
                    Some((agent, view)) => {
                        stack.push(Frame {
                            agent,
                            view,
                            next: 0,
                            trail_len: self.trail.len(),
                            pending: self.pending.clone(),
                        });
                    }
                }
            }
            // Advance the innermost frame to its next action, backtracking
            // over exhausted frames.
            loop {
                let Some(frame) = stack.last_mut() else { return Ok(false) };
                let (agent, view) = (frame.agent, frame.view);
                let len = frame.trail_len;
                let action = self.game.views[agent].actions[view].get(frame.next).copied();
                frame.next += 1;
                let saved = frame.pending.clone();
                self.undo_to(len);
                self.work.clear();
                self.pending = saved;
                match action {
                    Some(a) => {
                        self.choices[agent][view] = Some(a);
                        ok = self.release()?;
                        break;
                    }
                    None => {
                        self.choices[agent][view] = None;
                        stack.pop();
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose;
    use crate::formula::Predicate;
    use crate::strategy::check_strategy;
    use crate::voting::{generate_simple_voting, voter_goal};
    use crate::parse_spec;

    #[test]
    fn voter_can_avoid_punishment() {
        for k in 1..=3 {
            let m = compose(&generate_simple_voting(k).unwrap()).unwrap();
            let v = dfs_synthesize(&m, &voter_goal(1)).unwrap();
            assert_eq!(v.answer, Answer::Yes, "k={k}");
            let sigma = v.witness.unwrap();
            assert_eq!(check_strategy(&m, &sigma, &voter_goal(1)).unwrap().answer, Answer::Yes);
            let first = m.view_of("Voter1", 0).unwrap();
            assert_eq!(sigma.get(&first), Some("vote1"));
        }
    }

    #[test]
    fn coercer_cannot_force_punishment_alone() {
        // The voter may never report, leaving pun1 undecided.
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let f = Formula::eventually(["Coercer"], Predicate::atom("pun1", "T"));
        let v = dfs_synthesize(&m, &f).unwrap();
        assert_eq!(v.answer, Answer::No);
        assert!(v.counterexample.unwrap().loop_start.is_some());
    }

    #[test]
    fn eventually_needs_progress_by_the_agent() {
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a0 [ x=0 ]\n STATE a1 [ x=1 ]\n INIT a0\n \
             TRANS a0 -> a0 : stay ;\n TRANS a0 -> a1 : go ;\n",
        )
        .unwrap();
        let m = compose(&doc).unwrap();
        let f = Formula::eventually(["A"], Predicate::atom("x", "1"));
        let v = dfs_synthesize(&m, &f).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        assert_eq!(v.witness.as_ref().unwrap().get(&m.view_of("A", 0).unwrap()), Some("go"));
    }

    #[test]
    fn scheduler_can_starve_the_voter() {
        // No fairness: the coercer may wait forever while nothing is reported.
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let f = Formula::eventually(["Voter1", "Coercer"], Predicate::not(Predicate::atom("pstatus1", "?")));
        assert_eq!(dfs_synthesize(&m, &f).unwrap().answer, Answer::No);
    }

    #[test]
    fn observed_inputs_inform_the_choice() {
        // The right move depends on h, which the agent reads as an input.
        let doc = parse_spec(
            "MODULE Env\n VAR h : { 0, 1, u }\n STATE e0 [ h=u ]\n STATE e1 [ h=0 ]\n STATE e2 [ h=1 ]\n INIT e0\n \
             TRANS e0 -> e1 : zero ;\n TRANS e0 -> e2 : one ;\n\
             MODULE Agt\n VAR r : { w, ok, bad }\n INPUT h\n STATE a [ r=w ]\n STATE g [ r=ok ]\n STATE b [ r=bad ]\n INIT a\n \
             TRANS a -> g [ h=0 ] : left0 ;\n TRANS a -> b [ h=1 ] : left1 ;\n \
             TRANS a -> b [ h=0 ] : right0 ;\n TRANS a -> g [ h=1 ] : right1 ;\n",
        )
        .unwrap();
        let m = compose(&doc).unwrap();
        let f = Formula::always(["Agt"], Predicate::not(Predicate::atom("r", "bad")));
        assert_eq!(dfs_synthesize(&m, &f).unwrap().answer, Answer::Yes);
    }

    #[test]
    fn visit_budget_is_enforced() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        let err = dfs_synthesize_with(&m, &voter_goal(1), Limits { max_states: 10, max_transitions: usize::MAX })
            .unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { resource: Resource::States, .. }));
    }
}
