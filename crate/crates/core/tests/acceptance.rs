//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness; exits 1 when any criterion fails.

#[path = "support/specgen.rs"]
mod specgen;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rgspec::checker::{active_layer, check_trace, verify_system, CheckOptions, Flag, Outcome, Strategy, VerifyOptions};
use rgspec::corpus::{self, EntryKind};
use rgspec::diagram::{
    parse_diagram, refine_to_problem, to_dot, validate_diagram, Diagram, DiagramError, DiagramKind, Interface, Node,
    NodeKind, Reference,
};
use rgspec::domain::{State, Value};
use rgspec::dsl::{parse, parse_expr, pretty_print};
use rgspec::eval::eval_predicate;
use rgspec::implies::Implication;
use rgspec::model::{check_complementarity, check_layer_monotonicity, Atomicity, Monotonicity, SystemSpec};
use rgspec::runtime::{enumerate_traces, run, ActorStatus, Config, Machine, Scheduler, Trace, TransitionKind};

type CriterionResult = Result<String, String>;
type Criterion = (&'static str, fn() -> CriterionResult);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const CAP: u128 = 50_000_000;

fn system(name: &str) -> SystemSpec {
    let e = corpus::entry(name)
        .or_else(|| corpus::negative_corpus().iter().find(|e| e.name == name))
        .unwrap_or_else(|| panic!("no corpus entry {name}"));
    let t = e.system().unwrap_or_else(|err| panic!("{name}: {err:?}"));
    assert!(t.diagnostics.is_empty(), "{name}: {:?}", t.diagnostics);
    t.spec
}

fn slot(sys: &SystemSpec, v: &str) -> usize {
    sys.decl.slot(v).unwrap_or_else(|| panic!("no variable {v}"))
}

fn int(s: &State, i: usize) -> i64 {
    s.get(i).as_int().expect("integer slot")
}

fn filter(sys: &SystemSpec, src: &str) -> Vec<State> {
    let f = parse_expr(src, &sys.decl).expect("filter parses");
    sys.initial_states(Some(&f)).expect("filter evaluates")
}

fn exhaustive(sys: &SystemSpec, initial: &[State], depth: usize) -> Result<rgspec::checker::VerifyReport, String> {
    verify_system(sys, &Strategy::Exhaustive { depth }, initial, VerifyOptions::default()).map_err(|e| e.to_string())
}

fn euclid(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn all_terminated(t: &Trace) -> bool {
    t.status.iter().all(|s| *s == ActorStatus::Terminated)
}

/// 1. Min element over every nonempty subset, plus the empty set rejected.
fn min_element() -> CriterionResult {
    let sys = system("min");
    let (s, r) = (slot(&sys, "S"), slot(&sys, "r"));
    let initial = sys.initial_states(None).map_err(|e| e.to_string())?;
    let rep = exhaustive(&sys, &initial, 64)?;
    ensure!(rep.outcome == Outcome::Pass, "verify_system: {}", rep.outcome);
    ensure!(rep.skipped_pre_failed == 1, "expected only the empty set skipped, got {}", rep.skipped_pre_failed);
    let mut checked = 0;
    for init in &initial {
        let set = init.get(s).as_set().unwrap();
        if set.is_empty() {
            ensure!(
                !eval_predicate(&sys.processes[0].pre, &sys.decl, init, init).unwrap(),
                "pre accepts the empty set"
            );
            continue;
        }
        let oracle = (0..=6).find(|e| set.contains(*e)).unwrap();
        for t in enumerate_traces(&sys, init, 64, 10).map_err(|e| e.to_string())? {
            ensure!(all_terminated(&t), "S={set}: did not terminate");
            ensure!(int(t.final_state(), r) == oracle, "S={set}: r={} but min is {oracle}", int(t.final_state(), r));
        }
        checked += 1;
    }
    ensure!(checked == 127, "checked {checked} subsets");
    Ok(format!("{checked} nonempty subsets match the oracle; empty set rejected by the precondition"))
}

/// 2. GCD: exhaustive for a+b <= 8, seeded random and round robin on [1..12]^2.
fn gcd_two_processes() -> CriterionResult {
    let sys = system("gcd");
    let (a, b) = (slot(&sys, "a"), slot(&sys, "b"));
    let small = filter(&sys, "a + b <= 8");
    let rep = exhaustive(&sys, &small, 64)?;
    ensure!(rep.outcome == Outcome::Pass, "exhaustive depth 64: {}", rep.outcome);

    let inv = parse_expr("gcd(a, b) = gcd(old(a), old(b))", &sys.decl).unwrap();
    let mut transitions = 0usize;
    let mut check_trace_gcd = |t: &Trace, g: i64| -> Result<(), String> {
        for tr in &t.transitions {
            transitions += 1;
            ensure!(eval_predicate(&inv, &sys.decl, &tr.before, &tr.after).unwrap(), "gcd invariant broken");
        }
        if all_terminated(t) {
            let f = t.final_state();
            ensure!(int(f, a) == g && int(f, b) == g, "ended at ({}, {}), expected {g}", int(f, a), int(f, b));
        }
        let rep = check_trace(t, &sys, CheckOptions::default()).map_err(|e| e.to_string())?;
        ensure!(rep.passed(), "checker flags {:?}", rep.flags);
        Ok(())
    };
    // Explicit breadth-first search over reachable configurations: busy-wait
    // loops make the trace count double per step, the configuration count does not.
    let m = Machine::new(&sys);
    let mut configurations = 0usize;
    for init in &small {
        let g = euclid(int(init, a), int(init, b));
        let mut seen: HashSet<Config> = HashSet::new();
        let mut frontier = vec![m.initial(init.clone())];
        let mut terminal = 0;
        for _ in 0..=64 {
            let mut next = Vec::new();
            for c in frontier {
                if !seen.insert(c.clone()) {
                    continue;
                }
                if m.all_terminated(&c) {
                    terminal += 1;
                    ensure!(int(&c.state, a) == g && int(&c.state, b) == g, "terminal {}", c.state.display(&sys.decl));
                }
                for actor in m.enabled(&c).map_err(|(_, e)| e.to_string())? {
                    for o in m.step(&c, actor).map_err(|e| e.to_string())? {
                        ensure!(
                            eval_predicate(&inv, &sys.decl, &c.state, &o.config.state).unwrap(),
                            "gcd invariant broken"
                        );
                        next.push(o.config);
                    }
                }
            }
            frontier = next;
        }
        ensure!(terminal > 0, "no terminal configuration from {}", init.display(&sys.decl));
        configurations += seen.len();
    }

    let grid = filter(&sys, "a <= 12 && b <= 12");
    ensure!(grid.len() == 144, "grid has {} states", grid.len());
    for strategy in
        [Strategy::Random { runs: 100, seed: 1, weight: 0.5, step_cap: 1000 }, Strategy::RoundRobin { step_cap: 1000 }]
    {
        let rep = verify_system(&sys, &strategy, &grid, VerifyOptions::default()).map_err(|e| e.to_string())?;
        ensure!(rep.outcome == Outcome::Pass, "{strategy:?}: {}", rep.outcome);
    }
    for init in &grid {
        let g = euclid(int(init, a), int(init, b));
        let rr = run(&sys, &Scheduler::RoundRobin, init, 1000).map_err(|e| e.to_string())?;
        ensure!(all_terminated(&rr), "round robin from {} did not terminate", init.display(&sys.decl));
        check_trace_gcd(&rr, g)?;
        for seed in 1..=100 {
            let t =
                run(&sys, &Scheduler::Random { seed, injector_weight: 0.5 }, init, 1000).map_err(|e| e.to_string())?;
            ensure!(all_terminated(&t), "seed {seed} from {} did not terminate", init.display(&sys.decl));
            check_trace_gcd(&t, g)?;
        }
    }
    Ok(format!(
        "{configurations} reachable configurations, 14544 scheduled runs, {transitions} transitions keep the gcd"
    ))
}

/// 3. Counter with the lost-update injector, n in 0..8 and budgets 0..3.
fn counter_with_injector() -> CriterionResult {
    let base = system("counter");
    let (n, np, count) = (slot(&base, "n"), slot(&base, "n_p"), slot(&base, "count"));
    let gi = base.injectors[0].guarantee.clone();
    let mut traces = 0usize;
    for k in 0..=3u32 {
        let sys = base.clone().with_budget(k);
        let initial = filter(&sys, "n <= 8");
        ensure!(initial.len() == 9, "{} initial states", initial.len());
        let rep = exhaustive(&sys, &initial, 200)?;
        ensure!(rep.outcome == Outcome::Pass, "budget {k}: {}", rep.outcome);
        for init in &initial {
            for t in enumerate_traces(&sys, init, 200, 1_000_000).map_err(|e| e.to_string())? {
                traces += 1;
                ensure!(all_terminated(&t), "budget {k}: trace did not terminate");
                let f = t.final_state();
                ensure!(int(f, count) == int(init, n) && int(f, np) == 0, "budget {k}: ended {}", f.display(&sys.decl));
                let last_step = t.transitions.iter().rposition(|x| x.kind == TransitionKind::ProcessStep);
                let mut in_lifetime = 0;
                for (i, tr) in t.transitions.iter().enumerate() {
                    if tr.kind == TransitionKind::Injection {
                        ensure!(eval_predicate(&gi, &sys.decl, &tr.before, &tr.after).unwrap(), "injection breaks G_I");
                        if last_step.is_some_and(|l| i < l) {
                            in_lifetime += 1;
                        }
                    }
                }
                let layer = active_layer(&t, &sys, "C").map_err(|e| e.to_string())?;
                let expected = if in_lifetime == 0 { 0 } else { 1 };
                ensure!(layer == Some(expected), "budget {k}: {in_lifetime} injections but active layer {layer:?}");
                let rep = check_trace(&t, &sys, CheckOptions::default()).map_err(|e| e.to_string())?;
                ensure!(rep.passed(), "budget {k}: checker flags {:?}", rep.flags);
            }
        }
    }
    Ok(format!("{traces} traces over 36 (n, budget) pairs end with count = n and n' = 0"))
}

/// 4. The literal recovery livelocks under block atomicity.
fn literal_recovery_livelocks() -> CriterionResult {
    let mut sys = system("counter_literal").with_budget(1);
    sys.atomicity = Atomicity::Block;
    let initial = sys.initial_states(None).map_err(|e| e.to_string())?;
    let rep = exhaustive(&sys, &initial, 64)?;
    ensure!(rep.flags.contains(Flag::Livelock), "no livelock; flags {:?}", rep.flags);
    let cx = rep.counterexamples().into_iter().find(|c| c.flag == Flag::Livelock).ok_or("no livelock witness")?;
    ensure!(cx.trace.injections() >= 1, "livelock witness has no injection");
    Ok(format!("LIVELOCK witnessed from {}", cx.trace.initial.display(&sys.decl)))
}

/// 5. Environment guarantees imply every layer-0 rely; the unframed injector does not.
fn complementarity() -> CriterionResult {
    let mut pairs = 0;
    for name in ["min", "gcd", "counter", "cruise"] {
        let sys = system(name);
        for v in check_complementarity(&sys, CAP).map_err(|e| format!("{name}: {e}"))? {
            ensure!(v.result.holds() || v.layer > 0, "{name}/{}/{}: fails", v.process, v.layer_name);
            pairs += usize::from(v.layer == 0);
        }
    }
    let sys = system("counter_unframed");
    let bad = check_complementarity(&sys, CAP).map_err(|e| e.to_string())?;
    let w = bad.iter().find_map(|v| match &v.result {
        Implication::Fails { before, after } => Some((before.clone(), after.clone())),
        _ => None,
    });
    let (before, after) = w.ok_or("negative spec passes")?;
    let c = slot(&sys, "count");
    ensure!(before.get(c) != after.get(c), "witness does not change count");
    Ok(format!("{pairs} layer-0 pairs hold; negative witness changes count"))
}

/// 6. Relies weaken from layer to layer; the swapped spec does not.
fn layer_monotonicity() -> CriterionResult {
    for name in ["counter", "cruise"] {
        let sys = system(name);
        for p in &sys.processes {
            let m = check_layer_monotonicity(p, &sys.decl, CAP).map_err(|e| e.to_string())?;
            ensure!(m == Monotonicity::Holds, "{name}/{}: {m:?}", p.id);
        }
    }
    let sys = system("cruise_swapped");
    match check_layer_monotonicity(&sys.processes[0], &sys.decl, CAP).map_err(|e| e.to_string())? {
        Monotonicity::Fails { before, after, .. } => {
            let s = slot(&sys, "sensor");
            let error = Value::Token(1);
            ensure!(before.get(s) == error || after.get(s) == error, "witness has no sensor error");
            Ok("counter and cruise hold; swapped layers fail with a sensor-error witness".into())
        }
        Monotonicity::Holds => Err("swapped layers reported monotone".into()),
    }
}

/// 7. Cruise control with and without one sensor fault.
fn cruise_control() -> CriterionResult {
    let base = system("cruise");
    let (delta, engine) = (slot(&base, "delta"), slot(&base, "engine"));
    let off = Value::Token(1);
    let clean = base.clone().with_budget(0);
    let initial = clean.initial_states(None).map_err(|e| e.to_string())?;
    for init in &initial {
        let t = run(&clean, &Scheduler::RoundRobin, init, 1000).map_err(|e| e.to_string())?;
        ensure!(all_terminated(&t), "no-fault run from {} did not terminate", init.display(&clean.decl));
        ensure!(int(t.final_state(), delta) == 0, "no-fault run ends with delta != 0");
        ensure!(active_layer(&t, &clean, "CrCt").map_err(|e| e.to_string())? == Some(0), "no-fault run not in layer 0");
    }
    let faulty = base.with_budget(1);
    let rep = exhaustive(&faulty, &initial, 200)?;
    ensure!(rep.outcome == Outcome::Pass, "exhaustive with one fault: {}", rep.outcome);
    let (mut faulted, mut total) = (0usize, 0usize);
    for init in &initial {
        for t in enumerate_traces(&faulty, init, 200, 1_000_000).map_err(|e| e.to_string())? {
            total += 1;
            ensure!(all_terminated(&t), "trace from {} did not terminate", init.display(&faulty.decl));
            let layer = active_layer(&t, &faulty, "CrCt").map_err(|e| e.to_string())?;
            if t.injections() == 0 {
                ensure!(int(t.final_state(), delta) == 0 && layer == Some(0), "fault-free trace misbehaves");
            } else {
                faulted += 1;
                ensure!(t.final_state().get(engine) == off, "faulted trace ends with engine on");
                ensure!(layer == Some(1), "faulted trace in layer {layer:?}");
            }
        }
    }
    Ok(format!(
        "{} fault-free runs; {faulted} of {total} traces inject the fault and end with engine OFF",
        initial.len()
    ))
}

/// Checks that an error span points at a real position of the source.
fn span_is_valid(src: &str, e: &rgspec::dsl::ParseError) -> bool {
    let (s, end) = (e.span.start, e.span.end);
    if s.offset > src.len() || end.offset > src.len() || s.offset > end.offset || !src.is_char_boundary(s.offset) {
        return false;
    }
    let before = &src[..s.offset];
    let line = before.matches('\n').count() as u32 + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() as u32 + 1;
    s.line == line && s.col == col
}

/// 8. Printing then parsing preserves the tree; parse errors are located.
fn parser_round_trip() -> CriterionResult {
    let mut files = 0;
    let mut sources: Vec<&str> = Vec::new();
    for e in corpus::corpus().iter().chain(corpus::negative_corpus()) {
        if e.kind != EntryKind::System {
            continue;
        }
        let t = parse(e.source, e.file).map_err(|err| format!("{}: {err:?}", e.file))?;
        let printed = pretty_print(&t.spec);
        let again = parse(&printed, e.file).map_err(|err| format!("{} reprinted: {err:?}", e.file))?;
        ensure!(again.spec == t.spec, "{}: tree changed after printing", e.file);
        ensure!(pretty_print(&again.spec) == printed, "{}: printing is not idempotent", e.file);
        sources.push(e.source);
        files += 1;
    }
    for seed in 0..500u64 {
        let src = specgen::random_spec(seed);
        let t = parse(&src, "gen.rg").map_err(|err| format!("seed {seed}: {err:?}"))?;
        let again = parse(&pretty_print(&t.spec), "gen.rg").map_err(|err| format!("seed {seed} reprinted: {err:?}"))?;
        ensure!(again.spec == t.spec, "seed {seed}: tree changed after printing");
    }
    let mut errors = 0;
    for src in sources {
        let cuts: Vec<usize> = src.char_indices().map(|(i, _)| i).step_by(37).collect();
        for &i in &cuts {
            let mutants =
                [format!("{}@{}", &src[..i], &src[i..]), src[..i].to_string(), format!("{};;{}", &src[..i], &src[i..])];
            for m in &mutants {
                if let Err(errs) = parse(m, "mutant.rg") {
                    for e in &errs {
                        ensure!(span_is_valid(m, e), "bad span {:?} for `{}`", e.span, e.message);
                        errors += 1;
                    }
                }
            }
        }
    }
    ensure!(errors > 100, "only {errors} parse errors produced");
    Ok(format!("{files} corpus files and 500 generated specs round-trip; {errors} mutant errors carry valid spans"))
}

/// 9. Identical CLI invocations are byte-identical and match the golden reports.
fn cli_determinism() -> CriterionResult {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let cases: &[(&str, &[&str])] = &[
        ("check_min.json", &["check", "specs/min.rg", "--exhaustive", "--depth", "64", "--format", "json"]),
        (
            "check_gcd.json",
            &["check", "specs/gcd.rg", "--exhaustive", "--pairs", "a+b<=8", "--depth", "64", "--format", "json"],
        ),
        (
            "check_gcd_random.json",
            &["check", "specs/gcd.rg", "--random", "5", "--seed", "7", "--where", "a<=6 && b<=6", "--format", "json"],
        ),
        ("check_counter.json", &["check", "specs/counter.rg", "--depth", "200", "--format", "json"]),
        (
            "check_counter_literal.json",
            &["check", "specs/counter_literal.rg", "--atomicity", "block", "--budget", "1", "--format", "json"],
        ),
        ("check_cruise.json", &["check", "specs/cruise.rg", "--depth", "120", "--format", "json"]),
        ("run_gcd.json", &["run", "specs/gcd.rg", "--where", "a=12 && b=18", "--format", "json"]),
        ("layers_cruise_swapped.json", &["layers", "specs/negative/cruise_swapped.rg", "--format", "json"]),
        ("complement_counter.json", &["complement", "specs/counter.rg", "--format", "json"]),
        ("complement_counter_unframed.json", &["complement", "specs/negative/counter_unframed.rg", "--format", "json"]),
        ("dot_monitor.dot", &["dot", "specs/monitor.pf"]),
    ];
    for (golden, args) in cases {
        let invoke = || {
            Command::new(env!("CARGO_BIN_EXE_rgspec"))
                .args(*args)
                .current_dir(&dir)
                .env_remove("RGSPEC_COLOR")
                .output()
                .map_err(|e| e.to_string())
        };
        let (first, second) = (invoke()?, invoke()?);
        ensure!(first.status.code().is_some_and(|c| c <= 1), "{golden}: exit {:?}", first.status.code());
        ensure!(first.stdout == second.stdout, "{golden}: two runs differ");
        let expected = std::fs::read(dir.join("tests/golden").join(golden)).map_err(|e| format!("{golden}: {e}"))?;
        ensure!(first.stdout == expected, "{golden}: differs from the golden file");
    }
    Ok(format!("{} invocations repeat byte for byte and match their golden files", cases.len()))
}

/// 10. Diagram validation, its negative cases and stable DOT output.
fn static_view() -> CriterionResult {
    let e = corpus::entry("monitor").unwrap();
    let d = parse_diagram(e.source).map_err(|err| err.to_string())?;
    ensure!(validate_diagram(&d).is_empty(), "corpus diagram: {:?}", validate_diagram(&d));

    let mut ctx = Diagram::new("Monitoring", DiagramKind::Context);
    ctx.nodes.push(Node::new("M", "Monitor machine", NodeKind::Machine));
    ctx.nodes.push(Node::new("Patients", "Patients", NodeKind::Domain));
    ctx.nodes.push(Node::new("Staff", "Medical staff", NodeKind::Domain));
    ctx.interfaces.push(Interface::new("M", "Patients", &["vital factors"]));
    ctx.interfaces.push(Interface::new("M", "Staff", &["notify"]));
    ensure!(validate_diagram(&ctx).is_empty(), "clean context diagram has diagnostics");

    let req = Node::new("R", "Monitor patient conditions", NodeKind::Requirement);
    let mut with_req = ctx.clone();
    with_req.nodes.push(req.clone());
    let diags = validate_diagram(&with_req);
    ensure!(diags.len() == 1 && diags[0].subject == "R", "requirement in context: {diags:?}");

    let mut dangling = with_req.clone();
    dangling.kind = DiagramKind::Problem;
    let diags = validate_diagram(&dangling);
    ensure!(
        diags.len() == 1 && diags[0].subject == "R" && diags[0].message.contains("no reference"),
        "dangling requirement: {diags:?}"
    );

    let ghost = Reference::new("R", "Nowhere", &[]);
    let err = refine_to_problem(&ctx, std::slice::from_ref(&req), &[ghost]);
    ensure!(err == Err(DiagramError::UnknownNode("Nowhere".into())), "reference to unknown node: {err:?}");

    let good = refine_to_problem(&ctx, &[req], &[Reference::new("R", "Patients", &["vital factors"])])
        .map_err(|e| e.to_string())?;
    ensure!(validate_diagram(&good).is_empty(), "refined diagram invalid");

    let first = to_dot(&d).map_err(|e| e.to_string())?;
    let mut shuffled = d.clone();
    shuffled.nodes.reverse();
    shuffled.interfaces.reverse();
    shuffled.references.reverse();
    ensure!(to_dot(&d).unwrap() == first, "DOT differs between calls");
    ensure!(to_dot(&shuffled).unwrap() == first, "DOT depends on insertion order");
    let golden =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/dot_monitor.dot"))
            .map_err(|e| e.to_string())?;
    ensure!(golden == first, "DOT differs from the golden file");
    Ok("corpus diagram valid; 3 negative cases diagnosed; DOT stable".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("min element", min_element),
        ("gcd", gcd_two_processes),
        ("counter with injector", counter_with_injector),
        ("literal recovery livelock", literal_recovery_livelocks),
        ("complementarity", complementarity),
        ("layer monotonicity", layer_monotonicity),
        ("cruise control", cruise_control),
        ("parser round trip", parser_round_trip),
        ("determinism", cli_determinism),
        ("static view", static_view),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
