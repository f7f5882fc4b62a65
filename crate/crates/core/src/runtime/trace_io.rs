//! Line-delimited JSON serialization of traces.

use serde_json::{json, Map, Value as Json};

use crate::domain::{Decl, State, Value};
use crate::model::SystemSpec;

use super::Trace;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// JSON form of a value: ints and booleans as themselves, sets as sorted
/// arrays, enum tokens as their names.
pub fn value_to_json(decl: &Decl, slot: usize, v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Bool(b) => json!(b),
        Value::Set(s) => Json::Array(s.iter().map(|e| json!(e)).collect()),
        Value::Token(_) => json!(decl.show(slot, v)),
    }
}

pub fn state_to_json(decl: &Decl, s: &State) -> Json {
    let mut m = Map::new();
    for (slot, v) in decl.vars().enumerate() {
        m.insert(v.name.clone(), value_to_json(decl, slot, &s.get(slot)));
    }
    Json::Object(m)
}

/// Serializes a trace: one header record, one record per transition, one end record.
pub fn trace_to_jsonl(trace: &Trace, sys: &SystemSpec) -> String {
    let mut out = String::new();
    for l in trace_records(trace, sys) {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

/// The records of [`trace_to_jsonl`], one JSON object each.
pub fn trace_records(trace: &Trace, sys: &SystemSpec) -> Vec<Json> {
    let decl = &sys.decl;
    let mut lines = Vec::with_capacity(trace.transitions.len() + 2);
    lines.push(json!({
        "record": "header",
        "schema_version": TRACE_SCHEMA_VERSION,
        "processes": sys.processes.iter().map(|p| p.id.clone()).collect::<Vec<_>>(),
        "injectors": sys.injectors.iter().map(|i| i.id.clone()).collect::<Vec<_>>(),
        "initial": state_to_json(decl, &trace.initial),
    }));
    for (index, t) in trace.transitions.iter().enumerate() {
        let changed: Vec<Json> = t
            .before
            .diff(&t.after)
            .into_iter()
            .map(|slot| {
                json!({
                    "var": decl.var(slot).name,
                    "before": value_to_json(decl, slot, &t.before.get(slot)),
                    "after": value_to_json(decl, slot, &t.after.get(slot)),
                })
            })
            .collect();
        lines.push(json!({
            "record": "step",
            "index": index,
            "actor": sys.actor_name(t.actor),
            "kind": t.kind.to_string(),
            "changed": changed,
            "span": t.span.to_string(),
            "control": t.pcs,
        }));
    }
    let mut status = Map::new();
    for (p, s) in sys.processes.iter().zip(&trace.status) {
        status.insert(p.id.clone(), json!(s.to_string()));
    }
    let fault = trace.fault.as_ref().map(|f| {
        json!({
            "actor": sys.actor_name(f.actor),
            "message": f.error.to_string(),
        })
    });
    lines.push(json!({
        "record": "end",
        "steps": trace.transitions.len(),
        "status": status,
        "fault": fault,
    }));
    lines
}
