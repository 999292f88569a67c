//! The asynchronous Simple Voting benchmark with `k` voters and one coercer.
//!
//! Each voter casts a vote, then either shows it to the coercer or refuses
//! (`!`), then waits for the coercer's decision `pun_i` and records it in
//! `pstatus_i`. The coercer may set `pun_i` to `T` (punish) or `F` (refrain)
//! once voter `i` has reported something.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::formula::{Formula, Predicate};
use crate::spec::{GroupDecl, Guard, InputVar, ModuleDecl, SpecDocument, StateDecl, TransitionDecl, VarDecl};
use crate::{Error, Result};

fn code(v: &str) -> char {
    match v {
        "?" => 'q',
        "!" => 'x',
        other => other.chars().next().unwrap(),
    }
}

/// Local state id of a voter, e.g. `s_1xq` for vote 1, refused, not punished.
fn voter_state(vote: &str, reported: &str, pstatus: &str) -> String {
    format!("s_{}{}{}", code(vote), code(reported), code(pstatus))
}

fn trans(src: &str, dst: &str, guard: Guard, action: String) -> TransitionDecl {
    TransitionDecl { src: src.to_string(), dst: dst.to_string(), guard, action }
}

pub fn voter(i: usize) -> ModuleDecl {
    let (vote, reported, pstatus, pun) =
        (format!("vote{i}"), format!("reported{i}"), format!("pstatus{i}"), format!("pun{i}"));
    let mut m = ModuleDecl::new(format!("Voter{i}"));
    m.state_vars = vec![
        VarDecl::new(&vote, ["?", "1", "2"]),
        VarDecl::new(&reported, ["?", "1", "2", "!"]),
        VarDecl::new(&pstatus, ["?", "T", "F"]),
    ];
    m.inputs = vec![InputVar::unresolved(&pun)];

    let mut add_state = |v: &str, r: &str, p: &str| {
        let id = voter_state(v, r, p);
        m.states.push(StateDecl { id: id.clone(), valuation: vec![v.into(), r.into(), p.into()] });
        id
    };
    let init = add_state("?", "?", "?");
    let mut transitions = Vec::new();
    for v in ["1", "2"] {
        let voted = add_state(v, "?", "?");
        transitions.push(trans(&init, &voted, Guard::any(), format!("vote{v}")));
        for (r, verb) in [(v, "share"), ("!", "refuse")] {
            let decided = add_state(v, r, "?");
            transitions.push(trans(&voted, &decided, Guard::any(), format!("{verb}{v}")));
            let tag = &decided[2..4];
            transitions.push(trans(&decided, &decided, Guard::any().eq(&pun, "?"), format!("wait_{tag}")));
            for (p, verb) in [("T", "punished"), ("F", "spared")] {
                let done = add_state(v, r, p);
                transitions.push(trans(&decided, &done, Guard::any().eq(&pun, p), format!("{verb}_{tag}")));
                transitions.push(trans(&done, &done, Guard::any(), format!("done_{tag}{}", code(p))));
            }
        }
    }
    m.initial = init;
    m.transitions = transitions;
    m
}

pub fn coercer(k: usize) -> ModuleDecl {
    let mut m = ModuleDecl::new("Coercer");
    m.state_vars = (1..=k).map(|i| VarDecl::new(format!("pun{i}"), ["?", "T", "F"])).collect();
    m.inputs = (1..=k).map(|i| InputVar::unresolved(format!("reported{i}"))).collect();

    let id = |puns: &[&str]| -> String {
        let mut s = String::from("c_");
        s.extend(puns.iter().map(|p| code(p)));
        s
    };
    let mut tuples: Vec<Vec<&str>> = vec![Vec::new()];
    for _ in 0..k {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                ["?", "T", "F"].into_iter().map(move |p| {
                    let mut t = t.clone();
                    t.push(p);
                    t
                })
            })
            .collect();
    }
    for puns in &tuples {
        let src = id(puns);
        m.states.push(StateDecl { id: src.clone(), valuation: puns.iter().map(|p| p.to_string()).collect() });
        let mut wait = Guard::any();
        for (i, p) in puns.iter().enumerate() {
            if *p == "?" {
                wait = wait.eq(format!("reported{}", i + 1), "?");
            }
        }
        m.transitions.push(trans(&src, &src, wait, format!("{src}_wait")));
        for (i, p) in puns.iter().enumerate() {
            if *p != "?" {
                continue;
            }
            for (decision, verb) in [("T", "punish"), ("F", "spare")] {
                let mut next = puns.clone();
                next[i] = decision;
                let guard = Guard::any().neq(format!("reported{}", i + 1), "?");
                m.transitions.push(trans(&src, &id(&next), guard, format!("{src}_{verb}{}", i + 1)));
            }
        }
    }
    m.initial = id(&vec!["?"; k]);
    m
}

/// The goal of voter `i`: never be punished unless having voted 1.
pub fn voter_goal(i: usize) -> Formula {
    Formula::always(
        [format!("Voter{i}")],
        Predicate::or(
            Predicate::not(Predicate::atom(format!("pstatus{i}"), "T")),
            Predicate::atom(format!("vote{i}"), "1"),
        ),
    )
}

/// `k` voters, one coercer, one group per module; group `Voter1` carries
/// the goal.
pub fn generate_simple_voting(k: usize) -> Result<SpecDocument> {
    if k < 1 {
        return Err(Error::InvalidParameter("the number of voters must be at least 1".into()));
    }
    let mut modules: Vec<ModuleDecl> = (1..=k).map(voter).collect();
    modules.push(coercer(k));
    let groups = modules
        .iter()
        .map(|m| GroupDecl {
            name: m.name.clone(),
            members: vec![m.name.clone()],
            goal: (m.name == "Voter1").then(|| voter_goal(1)),
        })
        .collect();
    SpecDocument::new(modules, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_voters_match_the_figure() {
        let doc = generate_simple_voting(2).unwrap();
        let sizes: Vec<_> = doc.modules().iter().map(|m| (m.name.as_str(), m.states.len())).collect();
        assert_eq!(sizes, [("Voter1", 15), ("Voter2", 15), ("Coercer", 9)]);
        assert_eq!(doc.groups().len(), 3);
        assert!(doc.groups()[0].goal.is_some());
    }

    #[test]
    fn coercer_sizes() {
        assert_eq!(generate_simple_voting(1).unwrap().module("Coercer").unwrap().states.len(), 3);
        assert_eq!(generate_simple_voting(3).unwrap().module("Coercer").unwrap().states.len(), 27);
    }

    #[test]
    fn zero_voters_is_invalid() {
        assert!(matches!(generate_simple_voting(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn voter_structure() {
        let v = voter(1);
        // 1 initial, 2 voted, 4 decided, 8 done
        assert_eq!(v.states.len(), 15);
        // 2 votes + 4 decisions + 4 x (wait + 2 outcomes + 2 done loops)
        assert_eq!(v.transitions.len(), 2 + 4 + 4 * 5);
        let coercer = coercer(2);
        let init = coercer.outgoing(&coercer.initial).count();
        assert_eq!(init, 5);
    }
}
