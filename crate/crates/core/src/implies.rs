//! Brute-force implication checking over finite carriers.
//!
//! `p => q` is decided by enumerating every assignment to the variables the
//! two predicates mention. Variables that neither predicate reads cannot
//! affect the verdict and are held at the minimum of their carrier. The
//! enumeration is two-phase: assignments to `p`'s variables first, then, only
//! where `p` holds, the variables that only `q` reads.

use thiserror::Error;

use crate::domain::{Decl, State, Value};
use crate::eval::{Env, EvalError};
use crate::expr::{Epoch, Expr};
use crate::typecheck::{check_predicate, CheckContext, TypeError};

/// Default bound on the number of state pairs one implication may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Implication {
    Holds {
        /// Assignments actually evaluated.
        checked: u64,
    },
    Fails {
        before: State,
        after: State,
    },
}

impl Implication {
    pub fn holds(&self) -> bool {
        matches!(self, Implication::Holds { .. })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ImpliesError {
    #[error("enumeration of {size} assignments exceeds the cap of {cap}; shrink the variable domains")]
    CapExceeded { size: u128, cap: u128 },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A variable reading: slot plus epoch. In single-epoch checks both epochs share one value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Reading {
    slot: usize,
    epoch: Epoch,
}

fn readings(e: &Expr, decl: &Decl, two_epoch: bool) -> Vec<Reading> {
    let mut out: Vec<Reading> = e
        .free_vars()
        .into_iter()
        .filter_map(|(n, ep)| {
            decl.slot(&n).map(|slot| Reading { slot, epoch: if two_epoch { ep } else { Epoch::After } })
        })
        .collect();
    out.sort_by_key(|r| (r.slot, r.epoch));
    out.dedup();
    out
}

fn space(decl: &Decl, rs: &[Reading]) -> u128 {
    rs.iter().fold(1u128, |acc, r| acc.saturating_mul(decl.var(r.slot).domain.size()))
}

/// Number of assignments `implies_on_domain(p, q, decl, _)` may visit in the worst case.
pub fn enumeration_size(p: &Expr, q: &Expr, decl: &Decl) -> u128 {
    let two = p.mentions_before() || q.mentions_before();
    let pr = readings(p, decl, two);
    let qr: Vec<_> = readings(q, decl, two).into_iter().filter(|r| !pr.contains(r)).collect();
    space(decl, &pr).saturating_mul(space(decl, &qr))
}

/// Calls `f` on every assignment of `rs`, writing into `before`/`after`.
/// Stops early when `f` returns `Ok(false)`.
fn for_each_assignment<E>(
    decl: &Decl,
    rs: &[Reading],
    two_epoch: bool,
    before: &mut State,
    after: &mut State,
    f: &mut impl FnMut(&State, &State) -> Result<bool, E>,
) -> Result<bool, E> {
    let carriers: Vec<Vec<Value>> = rs.iter().map(|r| decl.var(r.slot).domain.values().collect()).collect();
    if carriers.iter().any(Vec::is_empty) {
        return Ok(true);
    }
    let mut idx = vec![0usize; rs.len()];
    loop {
        for (k, r) in rs.iter().enumerate() {
            let v = carriers[k][idx[k]];
            match (two_epoch, r.epoch) {
                (false, _) => {
                    before.set(r.slot, v);
                    after.set(r.slot, v);
                }
                (true, Epoch::Before) => before.set(r.slot, v),
                (true, Epoch::After) => after.set(r.slot, v),
            }
        }
        if !f(before, after)? {
            return Ok(false);
        }
        let mut k = rs.len();
        loop {
            if k == 0 {
                return Ok(true);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < carriers[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Decides `forall pairs. p => q` over the finite carriers of `decl`.
///
/// Both predicates may read either epoch. If neither mentions `old(...)` the
/// check runs over single states (pairs `(s, s)`), otherwise over state pairs.
pub fn implies_on_domain(p: &Expr, q: &Expr, decl: &Decl, cap: u128) -> Result<Implication, ImpliesError> {
    check_predicate(p, decl, CheckContext::TWO)?;
    check_predicate(q, decl, CheckContext::TWO)?;
    let two = p.mentions_before() || q.mentions_before();
    let pr = readings(p, decl, two);
    let base = State(decl.vars().map(|v| v.domain.first().unwrap_or(Value::Int(0))).collect());
    // A constant-false antecedent or constant-true consequent needs no enumeration.
    if pr.is_empty() && !Env::single(decl, &base).eval_bool(p)? {
        return Ok(Implication::Holds { checked: 1 });
    }
    if readings(q, decl, two).is_empty() && Env::single(decl, &base).eval_bool(q)? {
        return Ok(Implication::Holds { checked: 1 });
    }
    let size = enumeration_size(p, q, decl);
    if size > cap {
        return Err(ImpliesError::CapExceeded { size, cap });
    }
    let qr: Vec<_> = readings(q, decl, two).into_iter().filter(|r| !pr.contains(r)).collect();

    let (mut before, mut after) = (base.clone(), base);
    let mut checked = 0u64;
    let mut witness = None;
    let mut outer = |b: &State, a: &State| -> Result<bool, EvalError> {
        checked += 1;
        if !Env::pair(decl, b, a).eval_bool(p)? {
            return Ok(true);
        }
        let (mut b2, mut a2) = (b.clone(), a.clone());
        let mut inner = |b: &State, a: &State| -> Result<bool, EvalError> {
            checked += 1;
            if Env::pair(decl, b, a).eval_bool(q)? {
                Ok(true)
            } else {
                witness = Some((b.clone(), a.clone()));
                Ok(false)
            }
        };
        for_each_assignment(decl, &qr, two, &mut b2, &mut a2, &mut inner)
    };
    for_each_assignment(decl, &pr, two, &mut before, &mut after, &mut outer)?;
    Ok(match witness {
        Some((before, after)) => Implication::Fails { before, after },
        None => Implication::Holds { checked },
    })
}
