//! Command-line front end. [`main_with_args`] is the whole program; the
//! binary only forwards `std::env::args` and exits with its code.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or is
//! incomplete, 2 for usage, input and parse errors.

use std::fmt::Write as _;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::checker::{
    check_trace, report_to_json, report_to_text, verify_system, verify_to_json, verify_to_text, CheckOptions, Flag,
    Flags, Outcome, Strategy, VerifyOptions, REPORT_SCHEMA_VERSION,
};
use crate::diagram::{parse_diagram, to_dot, validate_diagram};
use crate::domain::State;
use crate::dsl::{parse, parse_expr, ParseError};
use crate::implies::{Implication, DEFAULT_ENUMERATION_CAP};
use crate::model::{check_complementarity, check_layer_monotonicity, Atomicity, Monotonicity, SystemSpec};
use crate::runtime::{enumerate_traces, run, state_to_json, trace_records, Scheduler};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const AFTER_HELP: &str = "\
Exit codes: 0 every check passed; 1 a check failed or was incomplete; 2 usage, input or parse error.
Environment: RGSPEC_COLOR=1 forces colored verdicts, RGSPEC_COLOR=0 disables them.
By default color is used only when standard output is a terminal.";

#[derive(Parser, Debug)]
#[command(
    name = "rgspec",
    version,
    about = "Check layered rely/guarantee specifications with error injectors",
    after_help = AFTER_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub mode: Mode,
}

#[derive(Subcommand, Debug)]
pub enum Mode {
    /// Verify a system over all its initial states under a schedule strategy.
    Check(CheckArgs),
    /// Execute one trace and check it.
    Run(RunArgs),
    /// List every bounded trace from each initial state with its flags.
    Enumerate(EnumerateArgs),
    /// Check that each process's relies weaken from one layer to the next.
    Layers(StaticArgs),
    /// Check that each layer's rely is implied by its environment's guarantees.
    Complement(StaticArgs),
    /// Validate a .pf diagram and export it as Graphviz DOT.
    Dot(DotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Readable text.
    Human,
    /// Versioned JSON; byte-identical for identical invocations.
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AtomicityArg {
    /// Each assignment and guard evaluation is one step.
    Statement,
    /// Each top-level statement (or loop iteration) is one step.
    Block,
}

/// Options shared by the modes that execute a system.
#[derive(Args, Debug)]
pub struct SystemArgs {
    /// Specification file (.rg).
    pub input: PathBuf,
    /// Override every injector budget.
    #[arg(long, value_name = "K")]
    pub budget: Option<u32>,
    /// Override the atomicity declared in the file.
    #[arg(long, value_enum)]
    pub atomicity: Option<AtomicityArg>,
    /// Keep only initial states satisfying this predicate, e.g. "a+b<=8".
    #[arg(long = "where", visible_alias = "pairs", value_name = "PREDICATE")]
    pub filter: Option<String>,
    /// Evaluate every verdict, even where the contract is vacuous.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Report format.
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(short = 'o', long = "output", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Explore every interleaving up to --depth (the default strategy).
    #[arg(long, conflicts_with_all = ["random", "round_robin"])]
    pub exhaustive: bool,
    /// Run N seeded random schedules per initial state; needs --seed.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..), requires = "seed")]
    pub random: Option<u64>,
    /// Run one round-robin schedule per initial state.
    #[arg(long, conflicts_with = "random")]
    pub round_robin: bool,
    /// Seed of the first random run; run k uses seed + k.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Probability that an enabled injector fires at a random step.
    #[arg(long, value_name = "W", default_value_t = 0.5)]
    pub weight: f64,
    /// Step bound for exhaustive exploration.
    #[arg(long, value_name = "N", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Step cap for random and round-robin runs.
    #[arg(long, value_name = "N", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub step_cap: u64,
    /// Most memoized subtrees per initial state before exploration stops as incomplete.
    #[arg(long, value_name = "N", default_value_t = 4_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub node_cap: u64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Use a seeded random schedule instead of round robin.
    #[arg(long, value_name = "SEED", conflicts_with = "exhaustive")]
    pub seed: Option<u64>,
    /// Take the first trace in exhaustive enumeration order, up to --depth steps.
    #[arg(long)]
    pub exhaustive: bool,
    /// Probability that an enabled injector fires at a random step.
    #[arg(long, value_name = "W", default_value_t = 0.5)]
    pub weight: f64,
    /// Step bound for --exhaustive.
    #[arg(long, value_name = "N", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Step cap for round-robin and random runs.
    #[arg(long, value_name = "N", default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub step_cap: u64,
    /// Run from the N-th initial state (0-based) that passes --where.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub index: usize,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Step bound per trace.
    #[arg(long, value_name = "N", default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Most traces listed in total.
    #[arg(long, value_name = "N", default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trace_cap: u64,
}

#[derive(Args, Debug)]
pub struct StaticArgs {
    /// Specification file (.rg).
    pub input: PathBuf,
    /// Most state pairs one implication may enumerate.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_ENUMERATION_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct DotArgs {
    /// Diagram file (.pf).
    pub input: PathBuf,
    /// Write the DOT text to this file instead of standard output.
    #[arg(short = 'o', long = "output", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// Failure that ends the program with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CliResult = Result<(String, i32, Verdict), UsageError>;

/// Overall verdict of a mode, used for coloring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Pass,
    Fail,
    Incomplete,
}

impl Verdict {
    fn code(self) -> i32 {
        match self {
            Verdict::Pass => EXIT_PASS,
            Verdict::Fail | Verdict::Incomplete => EXIT_FAIL,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Incomplete => "INCOMPLETE",
        }
    }
}

/// Runs the program on `args` (including the program name) and returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let to_terminal = std::io::stdout().is_terminal();
    execute(&cli, stdout, stderr, to_terminal)
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write, to_terminal: bool) -> i32 {
    let (output, format) = match &cli.mode {
        Mode::Check(a) => (&a.sys.out.output, a.sys.out.format),
        Mode::Run(a) => (&a.sys.out.output, a.sys.out.format),
        Mode::Enumerate(a) => (&a.sys.out.output, a.sys.out.format),
        Mode::Layers(a) | Mode::Complement(a) => (&a.out.output, a.out.format),
        Mode::Dot(a) => (&a.output, Format::Json),
    };
    let result = match &cli.mode {
        Mode::Check(a) => check(a),
        Mode::Run(a) => run_one(a),
        Mode::Enumerate(a) => enumerate(a),
        Mode::Layers(a) => layers(a),
        Mode::Complement(a) => complement(a),
        Mode::Dot(a) => dot(a),
    };
    let (text, code, verdict) = match result {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            let _ = writeln!(stderr, "rgspec: {}", msg.trim_end());
            return EXIT_USAGE;
        }
    };
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "rgspec: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            if !matches!(cli.mode, Mode::Dot(_)) {
                let _ =
                    writeln!(stdout, "{} (report written to {})", paint(verdict, color_enabled(false)), path.display());
            }
        }
        None => {
            let text = if format == Format::Human {
                colorize_first_line(&text, verdict, color_enabled(to_terminal))
            } else {
                text
            };
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    code
}

fn color_enabled(to_terminal: bool) -> bool {
    match std::env::var("RGSPEC_COLOR") {
        Ok(v) => v == "1",
        Err(_) => to_terminal,
    }
}

fn paint(v: Verdict, color: bool) -> String {
    if !color {
        return v.word().to_string();
    }
    let code = match v {
        Verdict::Pass => "32",
        Verdict::Fail => "31",
        Verdict::Incomplete => "33",
    };
    format!("\x1b[1;{code}m{}\x1b[0m", v.word())
}

fn colorize_first_line(text: &str, v: Verdict, color: bool) -> String {
    let prefix = format!("verdict: {}", v.word());
    match text.strip_prefix(&prefix) {
        Some(rest) if color => format!("verdict: {}{rest}", paint(v, true)),
        _ => text.to_string(),
    }
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))
}

fn parse_errors(path: &Path, errs: &[ParseError]) -> UsageError {
    let mut msg = String::new();
    for e in errs {
        let _ =
            writeln!(msg, "{}:{}:{}: {}: {}", path.display(), e.span.start.line, e.span.start.col, e.kind, e.message);
    }
    UsageError(msg)
}

fn load_system(path: &Path) -> Result<SystemSpec, UsageError> {
    let text = read(path)?;
    let tree = parse(&text, &path.display().to_string()).map_err(|e| parse_errors(path, &e))?;
    if !tree.diagnostics.is_empty() {
        let mut msg = String::new();
        for d in &tree.diagnostics {
            let _ =
                writeln!(msg, "{}:{}:{}: error: {}", path.display(), d.span.start.line, d.span.start.col, d.message);
        }
        return Err(UsageError(msg));
    }
    Ok(tree.spec)
}

/// Loads the spec with overrides applied and the filtered initial states.
fn prepare(a: &SystemArgs) -> Result<(SystemSpec, Vec<State>), UsageError> {
    let mut sys = load_system(&a.input)?;
    if let Some(k) = a.budget {
        sys = sys.with_budget(k);
    }
    if let Some(at) = a.atomicity {
        sys.atomicity = match at {
            AtomicityArg::Statement => Atomicity::Statement,
            AtomicityArg::Block => Atomicity::Block,
        };
    }
    let filter = match &a.filter {
        Some(src) => Some(parse_expr(src, &sys.decl).map_err(|e| UsageError(format!("--where: {}", e.message)))?),
        None => None,
    };
    let init = sys.initial_states(filter.as_ref())?;
    if init.is_empty() {
        return Err(UsageError("no initial state satisfies the init constraint and --where".into()));
    }
    Ok((sys, init))
}

fn render(v: &Json) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn check(a: &CheckArgs) -> CliResult {
    let (sys, init) = prepare(&a.sys)?;
    if !(0.0..=1.0).contains(&a.weight) {
        return Err(UsageError(format!("--weight {} is outside [0, 1]", a.weight)));
    }
    let strategy = if let Some(runs) = a.random {
        let seed = a.seed.ok_or_else(|| UsageError("--random needs --seed".into()))?;
        Strategy::Random { runs: runs as usize, seed, weight: a.weight, step_cap: a.step_cap as usize }
    } else if a.round_robin {
        Strategy::RoundRobin { step_cap: a.step_cap as usize }
    } else {
        Strategy::Exhaustive { depth: a.depth as usize }
    };
    let opts = VerifyOptions { strict: a.sys.strict, node_cap: a.node_cap as usize };
    let r = verify_system(&sys, &strategy, &init, opts)?;
    let verdict = match r.outcome {
        Outcome::Pass => Verdict::Pass,
        Outcome::Fail => Verdict::Fail,
        Outcome::Incomplete => Verdict::Incomplete,
    };
    let text = match a.sys.out.format {
        Format::Human => verify_to_text(&r, &sys),
        Format::Json => render(&verify_to_json(&r, &sys)),
    };
    Ok((text, verdict.code(), verdict))
}

fn run_one(a: &RunArgs) -> CliResult {
    let (sys, init) = prepare(&a.sys)?;
    let initial = init
        .get(a.index)
        .ok_or_else(|| UsageError(format!("--index {} but only {} initial states", a.index, init.len())))?;
    let (sched, cap) = if a.exhaustive {
        (Scheduler::Exhaustive { depth: a.depth as usize }, a.depth as usize)
    } else if let Some(seed) = a.seed {
        (Scheduler::Random { seed, injector_weight: a.weight }, a.step_cap as usize)
    } else {
        (Scheduler::RoundRobin, a.step_cap as usize)
    };
    let trace = run(&sys, &sched, initial, cap)?;
    let report = check_trace(&trace, &sys, CheckOptions { strict: a.sys.strict })?;
    let verdict = if report.passed() { Verdict::Pass } else { Verdict::Fail };
    let text = match a.sys.out.format {
        Format::Human => format!("verdict: {}\n{}", verdict.word(), report_to_text(&report, &trace, &sys)),
        Format::Json => render(&json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "run",
            "verdict": verdict.word(),
            "trace": trace_records(&trace, &sys),
            "report": report_to_json(&report, &sys),
        })),
    };
    Ok((text, verdict.code(), verdict))
}

fn enumerate(a: &EnumerateArgs) -> CliResult {
    let (sys, init) = prepare(&a.sys)?;
    let opts = CheckOptions { strict: a.sys.strict };
    let mut remaining = a.trace_cap as usize;
    let mut rows = Vec::new();
    let mut counts: Vec<(Flag, u64)> = Vec::new();
    let mut any = Flags::default();
    let mut total = 0u64;
    for (si, s) in init.iter().enumerate() {
        let traces = enumerate_traces(&sys, s, a.depth as usize, remaining)
            .map_err(|e| UsageError(format!("{e} (use --trace-cap or --depth)")))?;
        remaining -= traces.len();
        for (ti, t) in traces.iter().enumerate() {
            let r = check_trace(t, &sys, opts)?;
            total += 1;
            any = any.union(r.flags);
            for f in r.flags.iter() {
                match counts.iter_mut().find(|(g, _)| *g == f) {
                    Some((_, n)) => *n += 1,
                    None => counts.push((f, 1)),
                }
            }
            rows.push((si, ti, t.transitions.len(), t.choices(), r.flags));
        }
    }
    counts.sort_by_key(|(f, _)| Flag::ALL.iter().position(|g| g == f));
    let verdict = if any.any_failing() { Verdict::Fail } else { Verdict::Pass };
    let text = match a.sys.out.format {
        Format::Human => {
            let mut out = String::new();
            let _ = writeln!(out, "verdict: {}", verdict.word());
            let _ = writeln!(out, "depth: {}", a.depth);
            let _ = writeln!(out, "initial states: {}", init.len());
            let _ = writeln!(out, "traces: {total}");
            for (f, n) in &counts {
                let _ = writeln!(out, "  {f}: {n}");
            }
            for (si, ti, steps, choices, flags) in &rows {
                let path: Vec<String> =
                    choices.iter().map(|(act, o)| format!("{}/{o}", sys.actor_name(*act))).collect();
                let _ =
                    writeln!(out, "{} #{ti}: {steps} steps [{}] {flags}", init[*si].display(&sys.decl), path.join(" "));
            }
            out
        }
        Format::Json => {
            let traces: Vec<Json> = rows
                .iter()
                .map(|(si, _, steps, choices, flags)| {
                    json!({
                        "initial": state_to_json(&sys.decl, &init[*si]),
                        "steps": steps,
                        "choices": choices.iter().map(|(act, o)| json!([sys.actor_name(*act), o])).collect::<Vec<_>>(),
                        "flags": flags.iter().map(|f| f.name()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            render(&json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "kind": "enumerate",
                "verdict": verdict.word(),
                "depth": a.depth,
                "initial_states": init.len(),
                "traces": total,
                "flag_counts": counts.iter().map(|(f, n)| (f.name().to_string(), json!(n))).collect::<serde_json::Map<_, _>>(),
                "list": traces,
            }))
        }
    };
    Ok((text, verdict.code(), verdict))
}

fn witness_json(sys: &SystemSpec, before: &State, after: &State) -> Json {
    json!({ "before": state_to_json(&sys.decl, before), "after": state_to_json(&sys.decl, after) })
}

fn layers(a: &StaticArgs) -> CliResult {
    let sys = load_system(&a.input)?;
    let mut rows = Vec::new();
    for p in &sys.processes {
        rows.push((p, check_layer_monotonicity(p, &sys.decl, u128::from(a.cap))?));
    }
    let verdict = if rows.iter().all(|(_, m)| *m == Monotonicity::Holds) { Verdict::Pass } else { Verdict::Fail };
    let text = match a.out.format {
        Format::Human => {
            let mut out = format!("verdict: {}\n", verdict.word());
            for (p, m) in &rows {
                let names: Vec<&str> = p.layers.iter().map(|l| l.name.as_str()).collect();
                match m {
                    Monotonicity::Holds => {
                        let _ = writeln!(out, "{}: {} HOLDS", p.id, names.join(" => "));
                    }
                    Monotonicity::Fails { stronger, weaker, before, after } => {
                        let _ = writeln!(
                            out,
                            "{}: rely of {} does not imply rely of {}: FAILS\n  before {}\n  after  {}",
                            p.id,
                            names[*stronger],
                            names[*weaker],
                            before.display(&sys.decl),
                            after.display(&sys.decl)
                        );
                    }
                }
            }
            out
        }
        Format::Json => {
            let items: Vec<Json> = rows
                .iter()
                .map(|(p, m)| match m {
                    Monotonicity::Holds => json!({ "process": p.id, "result": "HOLDS" }),
                    Monotonicity::Fails { stronger, weaker, before, after } => json!({
                        "process": p.id,
                        "result": "FAILS",
                        "stronger": stronger,
                        "weaker": weaker,
                        "witness": witness_json(&sys, before, after),
                    }),
                })
                .collect();
            render(&json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "kind": "layers",
                "verdict": verdict.word(),
                "processes": items,
            }))
        }
    };
    Ok((text, verdict.code(), verdict))
}

fn complement(a: &StaticArgs) -> CliResult {
    let sys = load_system(&a.input)?;
    let rows = check_complementarity(&sys, u128::from(a.cap))?;
    let verdict = if rows.iter().all(|r| r.result.holds()) { Verdict::Pass } else { Verdict::Fail };
    let text = match a.out.format {
        Format::Human => {
            let mut out = format!("verdict: {}\n", verdict.word());
            for r in &rows {
                match &r.result {
                    Implication::Holds { checked } => {
                        let _ = writeln!(
                            out,
                            "{} layer {} ({}): HOLDS, {checked} assignments",
                            r.process, r.layer, r.layer_name
                        );
                    }
                    Implication::Fails { before, after } => {
                        let _ = writeln!(
                            out,
                            "{} layer {} ({}): FAILS\n  before {}\n  after  {}",
                            r.process,
                            r.layer,
                            r.layer_name,
                            before.display(&sys.decl),
                            after.display(&sys.decl)
                        );
                    }
                }
            }
            out
        }
        Format::Json => {
            let items: Vec<Json> = rows
                .iter()
                .map(|r| {
                    let mut o = json!({ "process": r.process, "layer": r.layer, "name": r.layer_name });
                    let extra = match &r.result {
                        Implication::Holds { checked } => json!({ "result": "HOLDS", "checked": checked }),
                        Implication::Fails { before, after } => {
                            json!({ "result": "FAILS", "witness": witness_json(&sys, before, after) })
                        }
                    };
                    if let (Json::Object(o), Json::Object(e)) = (&mut o, extra) {
                        o.extend(e);
                    }
                    o
                })
                .collect();
            render(&json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "kind": "complement",
                "verdict": verdict.word(),
                "layers": items,
            }))
        }
    };
    Ok((text, verdict.code(), verdict))
}

fn dot(a: &DotArgs) -> CliResult {
    let text = read(&a.input)?;
    let d = parse_diagram(&text).map_err(|e| parse_errors(&a.input, &[e]))?;
    let problems = validate_diagram(&d);
    if !problems.is_empty() {
        let mut msg = String::new();
        for p in &problems {
            let _ = writeln!(
                msg,
                "{}:{}:{}: {}: {}",
                a.input.display(),
                p.span.start.line,
                p.span.start.col,
                p.subject,
                p.message
            );
        }
        return Err(UsageError(msg));
    }
    Ok((to_dot(&d)?, EXIT_PASS, Verdict::Pass))
}
