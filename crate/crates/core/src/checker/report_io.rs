//! Structured (JSON) and human-readable forms of reports.
//!
//! Object keys keep the order in which they are written here; the JSON form
//! carries a schema version and never includes timings, so identical checks
//! produce byte-identical output.

use std::fmt::Write as _;

use serde_json::{json, Value as Json};

use crate::model::SystemSpec;
use crate::runtime::{state_to_json, trace_records, Trace};

use super::{Flags, Report, Strategy, VerifyReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn big(n: u128) -> Json {
    match u64::try_from(n) {
        Ok(v) => json!(v),
        Err(_) => json!(n.to_string()),
    }
}

fn flags_json(f: Flags) -> Json {
    Json::Array(f.iter().map(|f| json!(f.name())).collect())
}

fn layer_json(sys: &SystemSpec, p: usize, layer: Option<usize>) -> Json {
    match layer {
        Some(l) => json!({ "index": l, "name": sys.processes[p].layers[l].name }),
        None => Json::Null,
    }
}

fn report_body(report: &Report, sys: &SystemSpec) -> Json {
    let processes: Vec<Json> = report
        .processes
        .iter()
        .enumerate()
        .map(|(p, v)| {
            json!({
                "process": v.process,
                "pre": v.pre.to_string(),
                "active_layer": layer_json(sys, p, v.active_layer),
                "rely_broken_at": v.broken_at.map(|(l, i)| json!({ "layer": l, "transition": i })),
                "guarantee": v.guarantee.to_string(),
                "post": v.post.to_string(),
                "status": v.status.to_string(),
            })
        })
        .collect();
    let transitions: Vec<Json> = report
        .transitions
        .iter()
        .map(|t| {
            let relies: Vec<Json> = t
                .relies
                .iter()
                .map(|r| {
                    json!({
                        "process": sys.processes[r.process].id,
                        "layer": r.layer,
                        "verdict": r.verdict.to_string(),
                    })
                })
                .collect();
            json!({
                "index": t.index,
                "actor": sys.actor_name(t.actor),
                "guarantee": t.guarantee.to_string(),
                "relies": relies,
                "violated": t.violated.map(|s| s.to_string()),
            })
        })
        .collect();
    json!({
        "flags": flags_json(report.flags),
        "processes": processes,
        "transitions": transitions,
    })
}

/// JSON form of a single trace report.
pub fn report_to_json(report: &Report, sys: &SystemSpec) -> Json {
    let mut out = json!({ "schema_version": REPORT_SCHEMA_VERSION, "kind": "trace_report" });
    if let (Json::Object(o), Json::Object(b)) = (&mut out, report_body(report, sys)) {
        o.extend(b);
    }
    out
}

fn strategy_json(s: &Strategy) -> Json {
    match s {
        Strategy::Exhaustive { depth } => json!({ "kind": "exhaustive", "depth": depth }),
        Strategy::Random { runs, seed, weight, step_cap } => {
            json!({ "kind": "random", "runs": runs, "seed": seed, "weight": weight, "step_cap": step_cap })
        }
        Strategy::RoundRobin { step_cap } => json!({ "kind": "round_robin", "step_cap": step_cap }),
    }
}

/// JSON form of a verification report. Each failing flag gets a
/// counterexample with the full trace and its report; every witness is also
/// summarized.
pub fn verify_to_json(r: &VerifyReport, sys: &SystemSpec) -> Json {
    let counts: serde_json::Map<String, Json> =
        r.flag_counts.iter().map(|(f, n)| (f.name().to_string(), big(*n))).collect();
    let counterexamples: Vec<Json> = r
        .counterexamples()
        .into_iter()
        .map(|c| {
            json!({
                "flag": c.flag.name(),
                "trace": trace_records(&c.trace, sys),
                "report": report_body(&c.report, sys),
            })
        })
        .collect();
    let witnesses: Vec<Json> = r
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "flag": w.flag.name(),
                "initial": state_to_json(&sys.decl, &w.trace.initial),
                "steps": w.trace.transitions.len(),
            })
        })
        .collect();
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "verify",
        "verdict": r.outcome.to_string(),
        "strategy": strategy_json(&r.strategy),
        "strict": r.strict,
        "initial_states": r.initial_states,
        "skipped_pre_failed": r.skipped_pre_failed,
        "traces": big(r.traces),
        "configurations": r.configurations,
        "flags": flags_json(r.flags),
        "flag_counts": counts,
        "counterexamples": counterexamples,
        "witnesses": witnesses,
    })
}

fn strategy_text(s: &Strategy) -> String {
    match s {
        Strategy::Exhaustive { depth } => format!("exhaustive, depth {depth}"),
        Strategy::Random { runs, seed, weight, step_cap } => {
            format!("random, {runs} runs from seed {seed}, injector weight {weight}, step cap {step_cap}")
        }
        Strategy::RoundRobin { step_cap } => format!("round robin, step cap {step_cap}"),
    }
}

/// Human-readable trace listing with per-transition verdicts.
pub fn trace_to_text(trace: &Trace, report: Option<&Report>, sys: &SystemSpec) -> String {
    let decl = &sys.decl;
    let mut out = String::new();
    let _ = writeln!(out, "initial {}", trace.initial.display(decl));
    for (i, t) in trace.transitions.iter().enumerate() {
        let changed: Vec<String> = t
            .before
            .diff(&t.after)
            .into_iter()
            .map(|s| {
                format!("{}: {} -> {}", decl.var(s).name, decl.show(s, &t.before.get(s)), decl.show(s, &t.after.get(s)))
            })
            .collect();
        let changed = if changed.is_empty() { "no change".to_string() } else { changed.join(", ") };
        let _ = write!(out, "#{i:<4} {:<12} {:<13} {changed}", sys.actor_name(t.actor), t.kind.to_string());
        if let Some(v) = report.and_then(|r| r.transitions.get(i)) {
            let _ = write!(out, "  [guarantee {}", v.guarantee);
            for r in &v.relies {
                let _ = write!(out, ", rely of {} {}", sys.processes[r.process].id, r.verdict);
            }
            out.push(']');
            if let Some(s) = v.violated {
                let _ = write!(out, " violated at {s}");
            }
        }
        out.push('\n');
    }
    if let Some(f) = &trace.fault {
        let _ = writeln!(out, "fault in {}: {}", sys.actor_name(f.actor), f.error);
    }
    out
}

fn process_lines(report: &Report, sys: &SystemSpec, out: &mut String) {
    for (p, v) in report.processes.iter().enumerate() {
        let layer = match v.active_layer {
            Some(l) => format!("{} ({l})", sys.processes[p].layers[l].name),
            None => "none, every rely broken".to_string(),
        };
        let _ = writeln!(
            out,
            "  {}: pre {}, active layer {layer}, guarantee {}, post {}, status {}",
            v.process, v.pre, v.guarantee, v.post, v.status
        );
    }
}

/// Human-readable single trace report.
pub fn report_to_text(report: &Report, trace: &Trace, sys: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "flags: {}", report.flags);
    process_lines(report, sys, &mut out);
    out.push_str(&trace_to_text(trace, Some(report), sys));
    out
}

/// Human-readable verification report.
pub fn verify_to_text(r: &VerifyReport, sys: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", r.outcome);
    let _ = writeln!(out, "strategy: {}{}", strategy_text(&r.strategy), if r.strict { ", strict" } else { "" });
    let _ = writeln!(
        out,
        "initial states: {} checked, {} skipped because a precondition is false",
        r.initial_states, r.skipped_pre_failed
    );
    let _ = writeln!(out, "traces: {}", r.traces);
    if matches!(r.strategy, Strategy::Exhaustive { .. }) {
        let _ = writeln!(out, "configurations: {}", r.configurations);
    }
    let _ = writeln!(out, "flags: {}", r.flags);
    for (f, n) in &r.flag_counts {
        let _ = writeln!(out, "  {f}: {n}");
    }
    for c in r.counterexamples() {
        let _ = writeln!(out, "counterexample ({}):", c.flag);
        process_lines(&c.report, sys, &mut out);
        out.push_str(&trace_to_text(&c.trace, Some(&c.report), sys));
    }
    out
}
