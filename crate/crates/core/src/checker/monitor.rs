//! Incremental form of the trace check, carried along exploration paths.
//! Its flags at the end of a path equal those of `check_trace` on the same
//! trace, livelock aside.

use crate::model::ActorId;
use crate::runtime::{Config, Machine};

use super::{holds, Flag, Flags, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct ProcMon {
    pre_ok: bool,
    /// Layers whose rely has held so far.
    alive: u64,
    /// Layers whose guarantee has held on every counted own step.
    gok: u64,
    /// Layer that broke last, once no layer is alive.
    broken: Option<u8>,
    /// Post verdict, fixed when the process terminates.
    post: Option<Verdict>,
}

impl ProcMon {
    fn owed(&self) -> usize {
        if self.alive != 0 {
            self.alive.trailing_zeros() as usize
        } else {
            self.broken.map_or(0, usize::from)
        }
    }
}

/// How a path ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum End {
    Done,
    Bound,
    Fault(ActorId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Monitor {
    procs: Vec<ProcMon>,
    injectors_ok: bool,
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Monitor {
    pub(crate) fn new(m: &Machine<'_>, c: &Config, strict: bool) -> Monitor {
        let sys = m.sys;
        let procs = sys
            .processes
            .iter()
            .map(|p| {
                let all = mask(p.layers.len());
                ProcMon {
                    pre_ok: holds(&p.pre, sys, &c.state, &c.state),
                    alive: all,
                    gok: all,
                    broken: None,
                    post: None,
                }
            })
            .collect();
        let mut mon = Monitor { procs, injectors_ok: true };
        for p in 0..sys.processes.len() {
            if m.is_terminated(c, p) {
                mon.settle_post(m, p, c, strict);
            }
        }
        mon
    }

    /// Whether process `p` owes nothing in this path.
    pub(crate) fn vacuous(&self, p: usize) -> bool {
        !self.procs[p].pre_ok || self.procs[p].alive == 0
    }

    fn settle_post(&mut self, m: &Machine<'_>, p: usize, c: &Config, strict: bool) {
        let pm = &self.procs[p];
        let v = if !strict && (!pm.pre_ok || pm.alive == 0) {
            Verdict::Vacuous
        } else {
            Verdict::of(holds(&m.sys.processes[p].post(pm.owed()), m.sys, &c.state, &c.state))
        };
        self.procs[p].post = Some(v);
    }

    /// Records the transition `before -> after` made by `actor`.
    pub(crate) fn observe(&mut self, m: &Machine<'_>, before: &Config, after: &Config, actor: ActorId, strict: bool) {
        let sys = m.sys;
        let np = sys.processes.len();
        let (b, a) = (&before.state, &after.state);
        if actor.0 >= np && !holds(&sys.injectors[actor.0 - np].guarantee, sys, b, a) {
            self.injectors_ok = false;
        }
        for q in 0..np {
            let pm = &mut self.procs[q];
            let layers = &sys.processes[q].layers;
            if q == actor.0 {
                for (l, layer) in layers.iter().enumerate() {
                    let bit = 1u64 << l;
                    let counted = strict || pm.alive & bit != 0;
                    if counted && pm.gok & bit != 0 && !holds(&layer.guarantee, sys, b, a) {
                        pm.gok &= !bit;
                    }
                }
            } else if m.code_len(q) > before.pcs[q] && pm.alive != 0 {
                let was = pm.alive;
                for (l, layer) in layers.iter().enumerate() {
                    let bit = 1u64 << l;
                    if was & bit != 0 && !holds(&layer.rely, sys, b, a) {
                        pm.alive &= !bit;
                    }
                }
                if pm.alive == 0 {
                    pm.broken = Some((63 - was.leading_zeros()) as u8);
                }
            }
        }
        for q in 0..np {
            if m.is_terminated(after, q) && self.procs[q].post.is_none() {
                self.settle_post(m, q, after, strict);
            }
        }
    }

    /// Flags of a path that ended as `end`.
    pub(crate) fn flags(&self, end: End, np: usize, strict: bool) -> Flags {
        let mut f = Flags::default();
        for pm in &self.procs {
            if !pm.pre_ok {
                f.insert(Flag::PreFailed);
            }
            if pm.alive == 0 {
                f.insert(Flag::RelyBroken);
            }
            if pm.gok & (1u64 << pm.owed()) == 0 && (strict || pm.pre_ok) {
                f.insert(Flag::GuaranteeBroken);
            }
            if pm.post == Some(Verdict::Fails) {
                f.insert(Flag::PostFailed);
            }
        }
        if !self.injectors_ok {
            f.insert(Flag::GuaranteeBroken);
        }
        match end {
            End::Done => {}
            End::Bound => f.insert(Flag::StepBoundHit),
            End::Fault(a) => {
                if a.0 >= np || strict || !self.vacuous(a.0) {
                    f.insert(Flag::Faulted);
                }
            }
        }
        f.settle()
    }
}
