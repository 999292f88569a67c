//! Acceptance suite: one PASS/FAIL line per criterion, then a non-zero exit
//! status if any criterion failed.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use agrmc_core::agr::global_goal;
use agrmc_core::approx::{approximate, ApproxOptions};
use agrmc_core::voting::voter_goal;
use agrmc_core::{
    check_strategy, compose, compose_with, dfs_synthesize, fixpoint_approx, generate_assumption, generate_simple_voting,
    verify_agr, AgrOptions, Answer, Engine, Error, Limits,
};
use agrmc_testkit::{brute_force, corpus, random_agr_case, simulation_check, trace_inclusion};

/// Reference figures for `k` voters: monolithic states and transitions,
/// then Voter1 with its assumption.
const REFERENCE: [(usize, u64, u64, u64, u64); 4] = [
    (2, 529, 2216, 161, 528),
    (3, 12_167, 127_558, 1127, 7830),
    (4, 279_841, 6_730_000, 7889, 108_000),
    (5, 0, 0, 55_200, 1_450_000),
];

const CORPUS_SIZE: usize = 100;
const CORPUS_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn voter_with_assumption(k: usize) -> Result<(usize, usize, usize), Error> {
    let doc = generate_simple_voting(k)?;
    let a = generate_assumption(&doc, "Voter1", 1)?;
    let local = compose(&a.local_spec(&doc)?)?;
    Ok((local.num_states(), local.num_transitions(), a.module.states.len()))
}

fn monolithic_counts() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(k, states, transitions, _, _) in &REFERENCE[..3] {
        let start = Instant::now();
        let m = compose(&generate_simple_voting(k).unwrap()).unwrap();
        let took = start.elapsed();
        let exact = m.num_states() as u64 == states && m.num_states() == 23usize.pow(k as u32);
        ok &= exact && took < Duration::from_secs(60);
        parts.push(format!(
            "k={k}: {} states (want {states}), {} transitions (reference {transitions}), {:.2}s",
            m.num_states(),
            m.num_transitions(),
            took.as_secs_f64()
        ));
    }
    parts.push(
        "transition convention: one edge per enabled local transition of each module, plus one stutter edge for a \
         module with no enabled transition"
            .into(),
    );
    outcome(ok, parts.join("; "))
}

fn coverage_holds(k: usize) -> Result<(), String> {
    let doc = generate_simple_voting(k).unwrap();
    let a = generate_assumption(&doc, "Voter1", 1).unwrap();
    let full = compose(&doc).unwrap();
    let local = compose(&a.local_spec(&doc).unwrap()).unwrap();
    simulation_check(&full, &local, "Voter1").map_err(|e| e.to_string())?;
    trace_inclusion(&full, &local, "Voter1", 12).map_err(|e| e.to_string())?;
    Ok(())
}

fn assumption_sizes() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(k, _, _, states, transitions) in &REFERENCE {
        match voter_with_assumption(k) {
            Ok((s, t, a)) => {
                let s64 = s as u64;
                let exact = s64 == states && t as u64 == transitions;
                let close = s64 * 2 >= states && s64 <= states * 2;
                ok &= exact || close;
                parts.push(format!(
                    "k={k}: {s}/{t} (reference {states}/{transitions}, assumption {a} states){}",
                    if exact {
                        ""
                    } else if close {
                        " within 2x"
                    } else {
                        " outside 2x"
                    }
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("k={k}: {e}"));
            }
        }
    }
    let coverage = [2, 3].iter().map(|&k| coverage_holds(k)).collect::<Result<Vec<_>, _>>();
    parts.push(format!("path coverage: {}", if coverage.is_ok() { "holds" } else { "violated" }));
    outcome(ok && coverage.is_ok(), parts.join("; "))
}

fn crossover() -> Outcome {
    let limits = Limits { max_states: 10_000_000, max_transitions: 100_000_000 };
    let doc = generate_simple_voting(5).unwrap();
    let opts = AgrOptions { limits, ..AgrOptions::default() };

    let start = Instant::now();
    let mono = match compose_with(&doc, limits) {
        Err(Error::ResourceLimit { resource, limit }) => (true, format!("monolithic memout ({resource} > {limit})")),
        Err(e) => (false, format!("monolithic error: {e}")),
        Ok(m) => (
            false,
            format!(
                "monolithic completed within the caps: {} states, {} transitions in {:.1}s",
                m.num_states(),
                m.num_transitions(),
                start.elapsed().as_secs_f64()
            ),
        ),
    };

    let start = Instant::now();
    let agr = match verify_agr(&doc, &opts) {
        Ok(r) => {
            let took = start.elapsed();
            (
                r.answer == Answer::Yes && took < Duration::from_secs(300),
                format!("AG {} in {:.2}s ({} local states)", answer(r.answer), took.as_secs_f64(), r.tasks[0].local_states),
            )
        }
        Err(e) => (false, format!("AG error: {e}")),
    };
    outcome(mono.0 && agr.0, format!("{}; {}", mono.1, agr.1))
}

fn answer(a: Answer) -> &'static str {
    agrmc::report::answer_name(a)
}

fn oracle_equivalence() -> Outcome {
    let mut disagreements = Vec::new();
    let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
    let goal = voter_goal(1);
    let oracle = brute_force(&m, &goal);
    let dfs = dfs_synthesize(&m, &goal).unwrap();
    if (dfs.answer == Answer::Yes) != oracle.exists {
        disagreements.push("voting k=2".to_string());
    }
    let mut yes = 0;
    let cases = corpus(CORPUS_SIZE, CORPUS_SEED);
    let largest = cases.iter().map(|c| c.model.num_states()).max().unwrap();
    for case in &cases {
        let oracle = brute_force(&case.model, &case.formula);
        let v = dfs_synthesize(&case.model, &case.formula).unwrap();
        yes += oracle.exists as usize;
        if (v.answer == Answer::Yes) != oracle.exists {
            disagreements.push(format!("seed {}", case.seed));
        }
    }
    outcome(
        disagreements.is_empty(),
        format!(
            "voting k=2 {} + {} random specs (largest {largest} states, {yes} positive): {} disagreements {:?}",
            answer(dfs.answer),
            cases.len(),
            disagreements.len(),
            disagreements
        ),
    )
}

fn sandwich() -> Outcome {
    let mut violations = Vec::new();
    let mut conclusive = 0;
    let cases = corpus(CORPUS_SIZE, CORPUS_SEED);
    for case in &cases {
        let oracle = brute_force(&case.model, &case.formula);
        for global_classes in [false, true] {
            let a = approximate(&case.model, &case.formula, ApproxOptions { global_classes }).unwrap();
            let bad = (0..case.model.num_states()).any(|s| (a.lower[s] && !oracle.truth[s]) || (oracle.truth[s] && !a.upper[s]));
            if bad {
                violations.push(format!("seed {}", case.seed));
            }
        }
        let v = fixpoint_approx(&case.model, &case.formula).unwrap();
        conclusive += (v.answer != Answer::Inconclusive) as usize;
    }
    let mut voting = Vec::new();
    let mut voting_ok = true;
    for k in [2, 3] {
        let m = compose(&generate_simple_voting(k).unwrap()).unwrap();
        let v = fixpoint_approx(&m, &voter_goal(1)).unwrap();
        voting_ok &= v.answer == Answer::Yes;
        voting.push(format!("k={k} {}", answer(v.answer)));
    }
    outcome(
        violations.is_empty() && voting_ok,
        format!(
            "{} violations over {} specs ({conclusive} conclusive); voting {}",
            violations.len(),
            cases.len(),
            voting.join(", ")
        ),
    )
}

fn path_coverage() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in [2, 3] {
        let doc = generate_simple_voting(k).unwrap();
        let a = generate_assumption(&doc, "Voter1", 1).unwrap();
        let full = compose(&doc).unwrap();
        let local = compose(&a.local_spec(&doc).unwrap()).unwrap();
        let sim = simulation_check(&full, &local, "Voter1");
        let traces = trace_inclusion(&full, &local, "Voter1", 12);
        ok &= sim.is_ok() && traces.is_ok();
        parts.push(format!(
            "k={k}: simulation {}, depth-12 traces {}",
            sim.map(|n| format!("ok ({n} pairs)")).unwrap_or_else(|e| e.to_string()),
            traces.map(|n| format!("ok ({n} configurations)")).unwrap_or_else(|e| e.to_string())
        ));
    }
    outcome(ok, parts.join("; "))
}

fn positive_transfer() -> Outcome {
    let mut violations = Vec::new();
    let mut positives = 0;
    for k in 1..=4 {
        let doc = generate_simple_voting(k).unwrap();
        let full = compose(&doc).unwrap();
        for engine in [Engine::Dfs, Engine::Apprx] {
            let r = verify_agr(&doc, &AgrOptions { engine, ..AgrOptions::default() }).unwrap();
            if let Some(joint) = &r.strategy {
                positives += 1;
                if check_strategy(&full, joint, &r.global_goal).map(|v| v.answer) != Ok(Answer::Yes) {
                    violations.push(format!("voting k={k} {engine:?}"));
                }
            }
        }
    }
    for seed in 0..CORPUS_SIZE as u64 {
        let case = random_agr_case(CORPUS_SEED + seed);
        for engine in [Engine::Dfs, Engine::Apprx] {
            for distance in [1, 2] {
                let r = verify_agr(&case.doc, &AgrOptions { engine, distance, ..AgrOptions::default() }).unwrap();
                if r.answer != Answer::Yes {
                    continue;
                }
                positives += 1;
                let joint = r.strategy.as_ref().unwrap();
                if check_strategy(&case.model, joint, &r.global_goal).map(|v| v.answer) != Ok(Answer::Yes) {
                    violations.push(format!("seed {} {engine:?} d={distance}", case.seed));
                }
            }
        }
    }
    outcome(violations.is_empty() && positives > 0, format!("{positives} positive runs, {} violations {violations:?}", violations.len()))
}

/// The binary next to this test executable, built by the same `cargo test`.
fn binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("agrmc{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

fn cli_only() -> Outcome {
    let Some(bin) = binary() else {
        return outcome(false, "agrmc binary not found next to the test executable; build it with `cargo build -p agrmc`");
    };
    let run = |args: &[&str]| Command::new(&bin).args(args).output().expect("run agrmc");
    let mut problems = Vec::new();
    let dir = std::env::temp_dir().join(format!("agrmc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    for &(k, _, _, _, _) in &REFERENCE[..3] {
        let o = run(&["bench", "voting", "--voters", &k.to_string()]);
        let out = String::from_utf8_lossy(&o.stdout).to_string();
        let row: Vec<String> = out.lines().nth(1).unwrap_or("").split_whitespace().map(String::from).collect();
        let want = 23usize.pow(k as u32).to_string();
        let (ag_states, ..) = voter_with_assumption(k).unwrap();
        if o.status.code() != Some(0) || row.get(2) != Some(&want) || row.get(7) != Some(&ag_states.to_string()) {
            problems.push(format!("bench k={k}: {out}"));
        }
    }

    let mut verified = 0;
    let mut specs = vec![("voting2".to_string(), generate_simple_voting(2).unwrap())];
    specs.extend((0..20).map(|s| (format!("random{s}"), random_agr_case(CORPUS_SEED + s).doc)));
    for (name, doc) in &specs {
        let path = dir.join(format!("{name}.stv"));
        std::fs::write(&path, agrmc_core::print_spec(doc)).unwrap();
        let model = compose(doc).unwrap();
        let oracle = brute_force(&model, &global_goal(doc).unwrap());
        for mode in ["mono", "agr"] {
            for engine in ["dfs", "apprx"] {
                let o = run(&["verify", path.to_str().unwrap(), "--mode", mode, "--engine", engine, "--distance", "1"]);
                let code = o.status.code();
                let consistent = match (mode, engine, code) {
                    ("mono", "dfs", Some(c)) => c == if oracle.exists { 0 } else { 1 },
                    (_, _, Some(0)) => oracle.exists,
                    (_, _, Some(1)) => !oracle.exists,
                    (_, _, Some(2)) => true,
                    _ => false,
                };
                if !consistent {
                    problems.push(format!("verify {name} {mode}/{engine}: exit {code:?}, oracle {}", oracle.exists));
                }
                verified += 1;
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        problems.is_empty(),
        format!("3 bench rows and {verified} verify runs through the binary, no web UI; problems: {problems:?}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("monolithic state counts", monolithic_counts),
        ("assume-guarantee sizes", assumption_sizes),
        ("scalability crossover", crossover),
        ("oracle equivalence", oracle_equivalence),
        ("approximation sandwich", sandwich),
        ("path coverage", path_coverage),
        ("positive transfer", positive_transfer),
        ("CLI-only suite", cli_only),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += !o.pass as usize;
        println!(
            "{} [{}] {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
