//! Exhaustive bounded exploration with memoized subtrees.
//!
//! The explored traces are exactly those of `enumerate_traces`. Subtrees are
//! shared by (configuration, monitor, remaining depth), so trace counts grow
//! without the work growing with them. Livelocks are found as fair cycles of
//! the explored configuration graph.

use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use crate::domain::State;
use crate::model::ActorId;
use crate::runtime::{Config, Machine};

use super::monitor::{End, Monitor};
use super::{Flag, Flags};

pub(crate) type Choice = (ActorId, usize);

/// A persistent list of choices: the rest of a witness path.
#[derive(Debug)]
struct PathNode {
    choice: Choice,
    next: Path,
}

type Path = Option<Rc<PathNode>>;

fn cons(choice: Choice, next: &Path) -> Path {
    Some(Rc::new(PathNode { choice, next: next.clone() }))
}

fn to_vec(mut p: &Path) -> Vec<Choice> {
    let mut out = Vec::new();
    while let Some(n) = p {
        out.push(n.choice);
        p = &n.next;
    }
    out
}

pub(crate) const NFLAGS: usize = Flag::ALL.len();

/// Trace counts and first witnesses of one subtree.
#[derive(Clone, Debug, Default)]
struct Summary {
    traces: u128,
    counts: [u128; NFLAGS],
    witness: [Option<Path>; NFLAGS],
}

impl Summary {
    fn add_trace(&mut self, flags: Flags, path: Path) {
        self.traces = self.traces.saturating_add(1);
        for f in flags.iter() {
            let i = f as usize;
            self.counts[i] = self.counts[i].saturating_add(1);
            if self.witness[i].is_none() {
                self.witness[i] = Some(path.clone());
            }
        }
    }

    fn absorb(&mut self, child: &Summary, choice: Choice) {
        self.traces = self.traces.saturating_add(child.traces);
        for i in 0..NFLAGS {
            self.counts[i] = self.counts[i].saturating_add(child.counts[i]);
            if self.witness[i].is_none() {
                if let Some(p) = &child.witness[i] {
                    self.witness[i] = Some(cons(choice, p));
                }
            }
        }
    }
}

/// The node cap was reached.
#[derive(Debug)]
pub(crate) struct CapHit;

pub(crate) struct Exploration {
    pub traces: u128,
    pub counts: [u128; NFLAGS],
    /// First witness per flag, as a choice sequence from the initial state.
    pub witness: [Option<Vec<Choice>>; NFLAGS],
    /// A fair cycle: a choice sequence that fills the depth bound by repeating it.
    pub livelock: Option<Vec<Choice>>,
    /// Distinct configurations reached.
    pub configurations: usize,
}

type Key = (Config, Monitor, usize);

struct Explorer<'m, 'a> {
    m: &'m Machine<'a>,
    strict: bool,
    depth: usize,
    cap: usize,
    memo: HashMap<Key, Rc<Summary>>,
    graph: DiGraph<(), Choice>,
    index: HashMap<Config, NodeIndex>,
    configs: Vec<Config>,
    monitors: Vec<Monitor>,
    expanded: HashSet<NodeIndex>,
}

impl Explorer<'_, '_> {
    fn node(&mut self, c: &Config, mon: &Monitor) -> NodeIndex {
        if let Some(&n) = self.index.get(c) {
            return n;
        }
        let n = self.graph.add_node(());
        self.index.insert(c.clone(), n);
        self.configs.push(c.clone());
        self.monitors.push(mon.clone());
        n
    }

    fn explore(&mut self, c: Config, mon: Monitor, steps: usize) -> Result<Rc<Summary>, CapHit> {
        let key = (c, mon, self.depth - steps);
        if let Some(s) = self.memo.get(&key) {
            return Ok(s.clone());
        }
        if self.memo.len() >= self.cap {
            return Err(CapHit);
        }
        let (c, mon, _) = &key;
        let np = self.m.sys.processes.len();
        let mut sum = Summary::default();
        let done = self.m.all_terminated(c);
        if done {
            sum.add_trace(mon.flags(End::Done, np, self.strict), None);
        }
        let here = self.node(c, mon);
        if steps >= self.depth {
            if !done {
                sum.add_trace(mon.flags(End::Bound, np, self.strict), None);
            }
        } else {
            match self.m.enabled(c) {
                Err((a, _)) => sum.add_trace(mon.flags(End::Fault(a), np, self.strict), cons((a, 0), &None)),
                Ok(enabled) => {
                    let record = self.expanded.insert(here);
                    for actor in enabled {
                        match self.m.step(c, actor) {
                            Ok(outs) => {
                                for (k, o) in outs.into_iter().enumerate() {
                                    let mut next = mon.clone();
                                    next.observe(self.m, c, &o.config, actor, self.strict);
                                    if record {
                                        let to = self.node(&o.config, &next);
                                        self.graph.add_edge(here, to, (actor, k));
                                    }
                                    let child = self.explore(o.config, next, steps + 1)?;
                                    sum.absorb(&child, (actor, k));
                                }
                            }
                            Err(_) => {
                                sum.add_trace(mon.flags(End::Fault(actor), np, self.strict), cons((actor, 0), &None))
                            }
                        }
                    }
                }
            }
        }
        let sum = Rc::new(sum);
        self.memo.insert(key, sum.clone());
        Ok(sum)
    }

    /// Shortest path of choices from `from` to any node satisfying `goal`, within `allowed`.
    fn bfs(
        &self,
        from: NodeIndex,
        goal: impl Fn(NodeIndex) -> bool,
        allowed: &HashSet<NodeIndex>,
    ) -> Option<Vec<Choice>> {
        let mut prev: HashMap<NodeIndex, (NodeIndex, Choice)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = HashSet::from([from]);
        while let Some(n) = queue.pop_front() {
            if goal(n) {
                let mut path = Vec::new();
                let mut cur = n;
                while cur != from {
                    let (p, ch) = prev[&cur];
                    path.push(ch);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for e in self.graph.edges(n) {
                let t = e.target();
                if allowed.contains(&t) && seen.insert(t) {
                    prev.insert(t, (n, *e.weight()));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// A fair cycle reachable from the root that fits in the depth bound.
    fn livelock(&self, root: NodeIndex) -> Option<Vec<Choice>> {
        let np = self.m.sys.processes.len();
        let everything: HashSet<NodeIndex> = self.graph.node_indices().collect();
        let mut best: Option<Vec<Choice>> = None;
        for scc in tarjan_scc(&self.graph) {
            let members: HashSet<NodeIndex> = scc.iter().copied().collect();
            let v = scc[0];
            let internal: Vec<(NodeIndex, NodeIndex, Choice)> = scc
                .iter()
                .flat_map(|&n| self.graph.edges(n).map(move |e| (n, e.target(), *e.weight())))
                .filter(|(_, t, _)| members.contains(t))
                .collect();
            if internal.is_empty() {
                continue;
            }
            let c = &self.configs[v.index()];
            let running: Vec<usize> = (0..np).filter(|&p| !self.m.is_terminated(c, p)).collect();
            let mon = &self.monitors[v.index()];
            if running.is_empty() || running.iter().all(|&p| mon.vacuous(p)) {
                continue;
            }
            let mut walk = Vec::new();
            let mut fair = true;
            for &p in &running {
                let Some(&(u, w, ch)) = internal.iter().find(|e| e.2 .0 .0 == p) else {
                    fair = false;
                    break;
                };
                walk.extend(self.bfs(v, |n| n == u, &members)?);
                walk.push(ch);
                walk.extend(self.bfs(w, |n| n == v, &members)?);
            }
            if !fair {
                continue;
            }
            let Some(prefix) = self.bfs(root, |n| n == v, &everything) else {
                continue;
            };
            if prefix.len() + walk.len() > self.depth {
                continue;
            }
            let mut choices = prefix;
            while choices.len() < self.depth {
                let room = self.depth - choices.len();
                choices.extend(walk.iter().take(room).copied());
            }
            if best.as_ref().map_or(true, |b| choices < *b) {
                best = Some(choices);
            }
        }
        best
    }
}

/// Explores every trace of at most `depth` units from `initial`.
pub(crate) fn explore(
    m: &Machine<'_>,
    initial: &State,
    depth: usize,
    cap: usize,
    strict: bool,
) -> Result<Exploration, CapHit> {
    let mut ex = Explorer {
        m,
        strict,
        depth,
        cap,
        memo: HashMap::new(),
        graph: DiGraph::new(),
        index: HashMap::new(),
        configs: Vec::new(),
        monitors: Vec::new(),
        expanded: HashSet::new(),
    };
    let c = m.initial(initial.clone());
    let mon = Monitor::new(m, &c, strict);
    let summary = ex.explore(c.clone(), mon, 0)?;
    let root = ex.index[&c];
    let livelock = ex.livelock(root);
    Ok(Exploration {
        traces: summary.traces,
        counts: summary.counts,
        witness: std::array::from_fn(|i| summary.witness[i].as_ref().map(to_vec)),
        livelock,
        configurations: ex.configs.len(),
    })
}
