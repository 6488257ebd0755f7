//! Truth, conflict and consistency of tuples, read off the chased m-table.
//!
//! A tuple `t` is true iff some m-tuple `σ` contains it (`t ⊑ σ`). It is
//! conflicting iff, in addition, some dependency `X → A` with `XA ⊆ sch(t)`
//! has `|σ(A)| > 1`; otherwise it is consistent. All m-tuples containing a
//! tuple agree on this verdict, so the first one found decides.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::chase::ChaseResult;
use crate::error::{Error, Result};
use crate::model::{schema_of, AttrId, MTuple, Tuple};

/// Default cap on enumerated tuples.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Partition of all tuples built from active domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleStatus {
    /// Not derivable from the table.
    False,
    /// True and free of conflicts.
    TrueConsistent,
    /// True but involved in a dependency violation.
    TrueConflicting,
}

impl TupleStatus {
    /// True for both true statuses.
    pub fn is_true(self) -> bool {
        !matches!(self, TupleStatus::False)
    }

    /// Upper-case label used by the command line.
    pub fn label(self) -> &'static str {
        match self {
            TupleStatus::False => "FALSE",
            TupleStatus::TrueConsistent => "TRUE_CONSISTENT",
            TupleStatus::TrueConflicting => "TRUE_CONFLICTING",
        }
    }
}

/// Classifies `t` against the chase.
pub fn classify(chase: &ChaseResult, t: &Tuple) -> TupleStatus {
    let schema = t.schema();
    for i in chase.candidates(t) {
        let sigma = &chase.m_tuples()[i];
        if sigma.contains_tuple(t) {
            return if chase.consistent_in(sigma, &schema) {
                TupleStatus::TrueConsistent
            } else {
                TupleStatus::TrueConflicting
            };
        }
    }
    if t.is_empty() && !chase.m_tuples().is_empty() {
        return TupleStatus::TrueConsistent;
    }
    TupleStatus::False
}

fn push_capped(out: &mut BTreeSet<Tuple>, ts: Vec<Tuple>, cap: usize) -> Result<()> {
    out.extend(ts);
    if out.len() > cap {
        return Err(Error::EnumerationTooLarge { cap });
    }
    Ok(())
}

/// Minimal conflicting tuples: every `xa` over `XA` such that some m-tuple
/// has `|σ(A)| > 1` for a dependency `X → A` it is defined on. Every
/// conflicting tuple has a sub-tuple in this set.
pub fn confl_min(chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        let s = sigma.schema();
        for fd in chase.fds_within(&s) {
            if sigma.get(fd.rhs).is_some_and(|c| c.len() > 1) {
                let attrs = schema_of(fd.lhs.iter().copied().chain([fd.rhs]));
                push_capped(&mut out, sigma.enumerate_capped(&attrs, cap)?, cap)?;
            }
        }
    }
    // Keep only the ⊑-minimal members.
    let all: Vec<Tuple> = out.iter().cloned().collect();
    out.retain(|t| !all.iter().any(|o| o != t && o.is_sub_tuple_of(t)));
    Ok(out)
}

/// All consistent tuples over exactly the schema `x`.
pub fn cons_tuples_over(chase: &ChaseResult, x: &[AttrId], cap: usize) -> Result<BTreeSet<Tuple>> {
    let x = schema_of(x.iter().copied());
    let mut out = BTreeSet::new();
    if x.is_empty() {
        out.insert(Tuple::empty());
        return Ok(out);
    }
    for sigma in chase.m_tuples() {
        if sigma.defines_all(&x) && chase.consistent_in(sigma, &x) {
            push_capped(&mut out, sigma.enumerate_capped(&x, cap)?, cap)?;
        }
    }
    Ok(out)
}

/// All true tuples over exactly the schema `x`.
pub fn true_tuples_over(chase: &ChaseResult, x: &[AttrId], cap: usize) -> Result<BTreeSet<Tuple>> {
    let x = schema_of(x.iter().copied());
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        if sigma.defines_all(&x) {
            push_capped(&mut out, sigma.enumerate_capped(&x, cap)?, cap)?;
        }
    }
    Ok(out)
}

/// Maximal consistent sub-schemas of `sigma`: subsets `S ⊆ sch(σ)` such that
/// no dependency inside `S` has a multi-valued right-hand component, and no
/// strict superset within `sch(σ)` has this property.
pub fn maximal_consistent_schemas(chase: &ChaseResult, sigma: &MTuple) -> Result<Vec<Vec<AttrId>>> {
    let s = sigma.schema();
    if s.len() > 20 {
        return Err(Error::EnumerationTooLarge { cap: 1 << 20 });
    }
    let n = s.len();
    let mut masks: Vec<u32> = (0..(1u32 << n)).collect();
    masks.sort_by_key(|m| core::cmp::Reverse(m.count_ones()));
    let mut kept: Vec<u32> = Vec::new();
    for m in masks {
        if kept.iter().any(|k| k & m == m) {
            continue;
        }
        let attrs: Vec<AttrId> = (0..n).filter(|i| m & (1 << i) != 0).map(|i| s[i]).collect();
        if chase.consistent_in(sigma, &attrs) {
            kept.push(m);
        }
    }
    Ok(kept
        .into_iter()
        .filter(|m| *m != 0)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| s[i]).collect())
        .collect())
}

/// Maximal consistent tuples: every consistent tuple is a sub-tuple of one
/// of these. Exponential in the schema size; desk scale only.
pub fn cons_maximal_tuples(chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        for s in maximal_consistent_schemas(chase, sigma)? {
            push_capped(&mut out, sigma.enumerate_capped(&s, cap)?, cap)?;
        }
    }
    let all: Vec<Tuple> = out.iter().cloned().collect();
    out.retain(|t| !all.iter().any(|o| o != t && t.is_sub_tuple_of(o)));
    Ok(out)
}

/// Materializes `Cons(𝒯)` (nonempty tuples). Desk scale only.
pub fn cons_all(chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
    let mut out = BTreeSet::new();
    for t in cons_maximal_tuples(chase, cap)? {
        push_capped(&mut out, t.sub_tuples(), cap)?;
    }
    Ok(out)
}

/// Materializes `True(𝒯)` (nonempty tuples). Desk scale only.
pub fn true_all(chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        for t in sigma.enumerate_capped(&sigma.schema(), cap)? {
            push_capped(&mut out, t.sub_tuples(), cap)?;
        }
    }
    Ok(out)
}

/// Materializes `Confl(𝒯) = True(𝒯) \ Cons(𝒯)`. Desk scale only.
pub fn confl_all(chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
    let cons = cons_all(chase, cap)?;
    Ok(true_all(chase, cap)?.into_iter().filter(|t| !cons.contains(t)).collect())
}
