//! Seed-driven generator of small, syntactically valid `.rg` sources.
//!
//! Sources mix ASCII and Unicode operator spellings, optional clauses and
//! every statement form, so they exercise the lexer, parser and printer.

// Each test target uses a different subset of this module.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    Set,
    Enum(usize),
}

struct Var {
    name: String,
    ty: Ty,
}

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<Var>,
    enums: Vec<Vec<String>>,
    bound: Vec<String>,
}

impl Gen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).expect("nonempty")
    }

    fn flip(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    fn op(&mut self, ascii: &'static str, uni: &'static str) -> &'static str {
        if self.rng.gen_bool(0.25) {
            uni
        } else {
            ascii
        }
    }

    fn var_of(&mut self, ty: Ty) -> Option<String> {
        let names: Vec<String> = self.vars.iter().filter(|v| v.ty == ty).map(|v| v.name.clone()).collect();
        if names.is_empty() {
            None
        } else {
            Some(self.pick(&names).clone())
        }
    }

    fn read(&mut self, name: String, two_state: bool) -> String {
        if two_state && self.rng.gen_bool(0.3) {
            format!("old({name})")
        } else {
            name
        }
    }

    fn int(&mut self, depth: u32, two: bool) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.35);
        if leaf {
            if !self.bound.is_empty() && self.rng.gen_bool(0.3) {
                let b = self.bound.clone();
                return self.pick(&b).clone();
            }
            if let Some(v) = self.var_of(Ty::Int).filter(|_| self.rng.gen_bool(0.6)) {
                return self.read(v, two);
            }
            return self.rng.gen_range(0..10).to_string();
        }
        match self.rng.gen_range(0..7) {
            0 => format!("{} + {}", self.int(depth - 1, two), self.int(depth - 1, two)),
            1 => format!("{} - ({})", self.int(depth - 1, two), self.int(depth - 1, two)),
            2 => format!("-{}", self.int(0, two)),
            3 => format!("abs({})", self.int(depth - 1, two)),
            4 => format!("min({})", self.set(two)),
            5 => format!("gcd({}, {})", self.int(depth - 1, two), self.int(depth - 1, two)),
            _ => format!("card({})", self.set(two)),
        }
    }

    fn set(&mut self, two: bool) -> String {
        if let Some(v) = self.var_of(Ty::Set).filter(|_| self.rng.gen_bool(0.7)) {
            return self.read(v, two);
        }
        match self.rng.gen_range(0..3) {
            0 => self.op("{}", "∅").to_string(),
            1 => format!("{{{}}}", self.rng.gen_range(0..5)),
            _ => format!("{{{}, {}}}", self.rng.gen_range(0..3), self.rng.gen_range(3..6)),
        }
    }

    fn boolean(&mut self, depth: u32, two: bool) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.25);
        if leaf {
            return match self.rng.gen_range(0..4) {
                0 => self.pick(&["true", "false"]).to_string(),
                1 => match self.var_of(Ty::Bool) {
                    Some(v) => self.read(v, two),
                    None => "true".into(),
                },
                2 => {
                    let enums: Vec<(String, usize)> = self
                        .vars
                        .iter()
                        .filter_map(|v| match v.ty {
                            Ty::Enum(i) => Some((v.name.clone(), i)),
                            _ => None,
                        })
                        .collect();
                    match enums.choose(&mut self.rng).cloned() {
                        Some((v, i)) => {
                            let tok = self.pick(&self.enums[i].clone()).clone();
                            let v = self.read(v, two);
                            format!("{v} = {tok}")
                        }
                        None => "false".into(),
                    }
                }
                _ => {
                    let op = *self.pick(&["=", "<", ">", "<=", ">=", "!="]);
                    let op = match op {
                        "<=" => self.op("<=", "≤"),
                        ">=" => self.op(">=", "≥"),
                        "!=" => self.op("!=", "≠"),
                        o => o,
                    };
                    format!("{} {op} {}", self.int(1, two), self.int(1, two))
                }
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..7) {
            0 => format!("{} {} {}", self.boolean(d, two), self.op("&&", "∧"), self.boolean(d, two)),
            1 => format!("({} {} {})", self.boolean(d, two), self.op("||", "∨"), self.boolean(d, two)),
            2 => format!("{}({})", self.op("!", "¬"), self.boolean(d, two)),
            3 => format!("({} {} {})", self.boolean(d, two), self.op("=>", "⇒"), self.boolean(d, two)),
            4 => format!("{} {} {}", self.int(1, two), self.op("in", "∈"), self.set(two)),
            5 => {
                let name = format!("e{}", self.bound.len());
                let set = self.set(two);
                self.bound.push(name.clone());
                let body = self.boolean(d, two);
                self.bound.pop();
                let q = if self.flip() { self.op("forall", "∀") } else { self.op("exists", "∃") };
                format!("({q} {name} {} {set} . {body})", self.op("in", "∈"))
            }
            _ => format!("({})", self.boolean(d, two)),
        }
    }

    fn value_for(&mut self, ty: Ty) -> String {
        match ty {
            Ty::Int => self.int(2, false),
            Ty::Bool => self.boolean(1, false),
            Ty::Set => self.set(false),
            Ty::Enum(i) => self.pick(&self.enums[i].clone()).clone(),
        }
    }

    fn stmts(&mut self, depth: u32, indent: usize) -> String {
        let n = self.rng.gen_range(0..=3);
        let pad = "  ".repeat(indent);
        let mut out = String::new();
        for _ in 0..n {
            let s = match self.rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
                0 => "skip".to_string(),
                1 | 2 => {
                    let i = self.rng.gen_range(0..self.vars.len());
                    let (name, ty) = (self.vars[i].name.clone(), self.vars[i].ty);
                    if self.rng.gen_bool(0.15) {
                        format!("{name} := *")
                    } else {
                        format!("{name} := {}", self.value_for(ty))
                    }
                }
                3 => {
                    let c = self.boolean(1, false);
                    let t = self.stmts(depth - 1, indent + 1);
                    if self.flip() {
                        let e = self.stmts(depth - 1, indent + 1);
                        format!("if {c} then {{\n{t}{pad}}} else {{\n{e}{pad}}}")
                    } else {
                        format!("if {c} then {{\n{t}{pad}}}")
                    }
                }
                4 => {
                    let c = self.boolean(1, false);
                    format!("while {c} {{\n{}{pad}}}", self.stmts(depth - 1, indent + 1))
                }
                _ => format!("atomic {{\n{}{pad}}}", self.stmts(depth - 1, indent + 1)),
            };
            out.push_str(&pad);
            out.push_str(&s);
            out.push_str(if self.flip() { ";\n" } else { "\n" });
        }
        out
    }

    fn spec(&mut self) -> String {
        let nvars = self.rng.gen_range(1..=4);
        let mut out = String::from("state {\n");
        for i in 0..nvars {
            let name = format!("v{i}");
            let (ty, dom) = match self.rng.gen_range(0..4) {
                0 => {
                    let lo: i64 = self.rng.gen_range(-3..=2);
                    let hi = lo + self.rng.gen_range(0..=6);
                    (Ty::Int, format!("int[{lo}..{hi}]"))
                }
                1 => (Ty::Bool, "bool".to_string()),
                2 => (Ty::Set, format!("natset({})", self.rng.gen_range(0..=5))),
                _ => {
                    let k = self.enums.len();
                    let variants: Vec<String> = (0..self.rng.gen_range(1..=3)).map(|j| format!("K{k}_{j}")).collect();
                    let dom = format!("enum{{{}}}", variants.join(", "));
                    self.enums.push(variants);
                    (Ty::Enum(k), dom)
                }
            };
            let alias = if self.rng.gen_bool(0.15) { format!(" as \"{name}'\"") } else { String::new() };
            out.push_str(&format!("  {name}: {dom}{alias};\n"));
            self.vars.push(Var { name, ty });
        }
        out.push_str("}\n");
        if self.rng.gen_bool(0.8) {
            out.push_str(&format!("init {};\n", self.boolean(2, false)));
        }
        if self.rng.gen_bool(0.3) {
            out.push_str(&format!("atomicity {};\n", self.pick(&["statement", "block"])));
        }
        for p in 0..self.rng.gen_range(1..=2) {
            out.push_str(&format!("process P{p} {{\n  pre {};\n", self.boolean(2, false)));
            for l in 0..self.rng.gen_range(1..=3) {
                out.push_str(&format!("  layer L{l} {{\n"));
                out.push_str(&format!("    rely {};\n", self.boolean(2, true)));
                out.push_str(&format!("    guarantee {};\n", self.boolean(2, true)));
                if self.rng.gen_bool(0.7) {
                    out.push_str(&format!("    post {};\n", self.boolean(2, false)));
                }
                out.push_str("  }\n");
            }
            out.push_str(&format!("  body {{\n{}  }}\n}}\n", self.stmts(2, 2)));
        }
        for i in 0..self.rng.gen_range(0..=1) {
            let mut kinds = vec!["lost", "dup", "fake"];
            kinds.shuffle(&mut self.rng);
            kinds.truncate(self.rng.gen_range(1..=3));
            out.push_str(&format!("injector I{i} {{\n  kinds {};\n", kinds.join(" | ")));
            out.push_str(&format!("  enabling {};\n", self.boolean(1, false)));
            out.push_str(&format!("  guarantee {};\n", self.boolean(2, true)));
            out.push_str(&format!("  budget {};\n", self.rng.gen_range(0..4)));
            out.push_str(&format!("  body {{\n{}  }}\n}}\n", self.stmts(1, 2)));
        }
        out
    }
}

/// A random small spec; equal seeds give equal text.
pub fn random_spec(seed: u64) -> String {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), vars: Vec::new(), enums: Vec::new(), bound: Vec::new() };
    g.spec()
}

/// Declaration used by [`random_predicate`].
pub const PREDICATE_STATE: &str = "state { v0: int[-2..3]; v1: bool; v2: natset(3); v3: enum{K0_0, K0_1}; }";

/// A random predicate over [`PREDICATE_STATE`]. With `two_state` it may read
/// before-state values through `old(...)`.
pub fn random_predicate(seed: u64, two_state: bool) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vars: vec![
            Var { name: "v0".into(), ty: Ty::Int },
            Var { name: "v1".into(), ty: Ty::Bool },
            Var { name: "v2".into(), ty: Ty::Set },
            Var { name: "v3".into(), ty: Ty::Enum(0) },
        ],
        enums: vec![vec!["K0_0".into(), "K0_1".into()]],
        bound: Vec::new(),
    };
    g.boolean(3, two_state)
}
