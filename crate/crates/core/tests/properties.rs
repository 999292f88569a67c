use agrmc_core::model::{guard_satisfied, InputValuation};
use agrmc_core::{
    close_modules, communication_distance, compose, generate_assumption, generate_simple_voting, parse_spec,
    print_spec, quotient_reduce, validate_spec, Constraint, Guard,
};
use agrmc_testkit::{random_agr_case, random_case};
use proptest::prelude::*;

fn constraint() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        Just(Constraint::Any),
        (0..3usize).prop_map(|v| Constraint::Eq(v.to_string())),
        (0..3usize).prop_map(|v| Constraint::Neq(v.to_string())),
    ]
}

fn guard() -> impl Strategy<Value = Guard> {
    prop::collection::vec(((0..3usize).prop_map(|i| format!("x{i}")), constraint()), 0..4)
        .prop_map(|constraints| Guard { constraints })
}

fn valuation() -> impl Strategy<Value = InputValuation> {
    prop::collection::vec(0..3usize, 3)
        .prop_map(|vs| vs.iter().enumerate().map(|(i, v)| (format!("x{i}"), v.to_string())).collect())
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let case = random_agr_case(seed);
        let text = print_spec(&case.doc);
        let back = parse_spec(&text).unwrap();
        prop_assert_eq!(back, case.doc);
    }

    #[test]
    fn strengthening_a_guard_never_enables_more(g in guard(), var in 0..3usize, c in constraint(), iv in valuation()) {
        let stronger = g.clone().with(format!("x{var}"), c);
        prop_assert!(!guard_satisfied(&stronger, &iv) || guard_satisfied(&g, &iv));
        prop_assert!(stronger.implies(&g));
    }

    #[test]
    fn implication_is_sound(g in guard(), h in guard(), iv in valuation()) {
        if g.implies(&h) && guard_satisfied(&g, &iv) {
            prop_assert!(guard_satisfied(&h, &iv));
        }
    }

    #[test]
    fn indistinguishability_is_an_equivalence(seed in any::<u64>()) {
        let case = random_case(seed);
        let m = &case.model;
        let n = m.num_states().min(40);
        for agent in case.doc.modules().iter().map(|x| x.name.as_str()) {
            for s in 0..n {
                prop_assert!(m.indistinguishable(agent, s, s));
                for t in 0..n {
                    prop_assert_eq!(m.indistinguishable(agent, s, t), m.indistinguishable(agent, t, s));
                    if !m.indistinguishable(agent, s, t) { continue; }
                    for u in 0..n {
                        if m.indistinguishable(agent, t, u) {
                            prop_assert!(m.indistinguishable(agent, s, u));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quotient_is_idempotent_and_shrinks(seed in any::<u64>()) {
        let case = random_case(seed);
        for m in case.doc.modules() {
            let q = quotient_reduce(m);
            prop_assert!(q.states.len() <= m.states.len());
            prop_assert_eq!(&quotient_reduce(&q), &q);
        }
        for target in case.doc.modules().iter().map(|m| m.name.clone()) {
            let a = generate_assumption(&case.doc, &target, 1).unwrap();
            let q = quotient_reduce(&a.module);
            prop_assert_eq!(q.states.len(), a.module.states.len());
        }
    }

    #[test]
    fn distance_is_a_metric(seed in any::<u64>()) {
        let case = random_case(seed);
        let names: Vec<&str> = case.doc.modules().iter().map(|m| m.name.as_str()).collect();
        let d = |a: &str, b: &str| communication_distance(&case.doc, a, b).unwrap();
        for &a in &names {
            prop_assert_eq!(d(a, a), Some(0));
            for &b in &names {
                prop_assert_eq!(d(a, b), d(b, a));
                if a != b { prop_assert_ne!(d(a, b), Some(0)); }
                for &c in &names {
                    if let (Some(x), Some(y)) = (d(a, b), d(b, c)) {
                        let z = d(a, c);
                        prop_assert!(z.is_some_and(|z| z <= x + y));
                    }
                }
            }
        }
    }

    #[test]
    fn close_sets_grow_with_the_bound(seed in any::<u64>()) {
        let case = random_case(seed);
        for m in case.doc.modules() {
            let mut prev: Vec<String> = Vec::new();
            for d in 1..=4 {
                let now = close_modules(&case.doc, &m.name, d).unwrap();
                prop_assert!(prev.iter().all(|x| now.contains(x)));
                prev = now;
            }
        }
    }
}

#[test]
fn generated_voting_specs_are_valid() {
    for k in 1..=5 {
        let doc = generate_simple_voting(k).unwrap();
        assert!(validate_spec(&doc).is_total(), "k={k}");
        assert_eq!(parse_spec(&print_spec(&doc)).unwrap(), doc, "k={k}");
    }
}

#[test]
fn three_voter_state_count() {
    let m = compose(&generate_simple_voting(3).unwrap()).unwrap();
    assert_eq!(m.num_states(), 23usize.pow(3));
}

#[test]
fn printed_assumption_reloads() {
    let doc = generate_simple_voting(3).unwrap();
    let a = generate_assumption(&doc, "Voter1", 1).unwrap();
    let text = agrmc_core::print_module(&a.module);
    assert!(text.contains("# synthetic"));
    let (modules, _) = agrmc_core::parser::parse_parts(&text).unwrap();
    let mut reloaded = modules.into_iter().next().unwrap();
    assert!(reloaded.provenance.is_none());
    reloaded.provenance = a.module.provenance.clone();
    assert_eq!(reloaded.transitions, a.module.transitions);
    assert_eq!(reloaded.states, a.module.states);
}
