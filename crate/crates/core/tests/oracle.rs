use agrmc_core::approx::{approximate, ApproxOptions};
use agrmc_core::voting::voter_goal;
use agrmc_core::{check_strategy, compose, dfs_synthesize, fixpoint_approx, generate_simple_voting, Answer};
use agrmc_testkit::{brute_force, corpus};

#[test]
fn dfs_matches_enumeration_on_random_specs() {
    let mut yes = 0;
    for case in corpus(100, 7) {
        let oracle = brute_force(&case.model, &case.formula);
        let v = dfs_synthesize(&case.model, &case.formula).unwrap();
        assert_eq!(v.answer == Answer::Yes, oracle.exists, "seed {} formula {}", case.seed, case.formula);
        if let Some(w) = &v.witness {
            assert_eq!(check_strategy(&case.model, w, &case.formula).unwrap().answer, Answer::Yes);
            yes += 1;
        } else {
            assert!(v.counterexample.is_some(), "seed {}", case.seed);
        }
    }
    // The corpus must exercise both outcomes.
    assert!(yes > 10 && yes < 90, "{yes} positive cases");
}

#[test]
fn oracle_witness_is_accepted_by_the_checker() {
    for case in corpus(100, 7) {
        if let Some(w) = brute_force(&case.model, &case.formula).witness {
            assert_eq!(check_strategy(&case.model, &w, &case.formula).unwrap().answer, Answer::Yes, "seed {}", case.seed);
        }
    }
}

#[test]
fn dfs_matches_enumeration_on_two_voters() {
    let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
    let oracle = brute_force(&m, &voter_goal(1));
    assert!(oracle.exists);
    assert_eq!(dfs_synthesize(&m, &voter_goal(1)).unwrap().answer, Answer::Yes);
}

#[test]
fn approximation_sandwich_on_random_specs() {
    let mut conclusive = 0;
    for case in corpus(100, 7) {
        let oracle = brute_force(&case.model, &case.formula);
        for global_classes in [false, true] {
            let a = approximate(&case.model, &case.formula, ApproxOptions { global_classes }).unwrap();
            for s in 0..case.model.num_states() {
                assert!(!a.lower[s] || oracle.truth[s], "seed {} state {s}: lower exceeds truth", case.seed);
                assert!(!oracle.truth[s] || a.upper[s], "seed {} state {s}: truth exceeds upper", case.seed);
            }
        }
        let v = fixpoint_approx(&case.model, &case.formula).unwrap();
        match v.answer {
            Answer::Yes => {
                assert!(oracle.exists, "seed {}", case.seed);
                assert_eq!(check_strategy(&case.model, v.witness.as_ref().unwrap(), &case.formula).unwrap().answer, Answer::Yes);
                conclusive += 1;
            }
            Answer::No => {
                assert!(!oracle.exists, "seed {}", case.seed);
                conclusive += 1;
            }
            Answer::Inconclusive => {}
        }
    }
    assert!(conclusive > 50, "only {conclusive} conclusive");
}
