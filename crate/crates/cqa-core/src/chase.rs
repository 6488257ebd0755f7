//! The m-chase: a generic fixpoint algorithm for any normalized acyclic
//! dependency set, and a sort-and-group algorithm specialized to star
//! schemas. Both produce the same canonical m-table.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::time::Duration;

use crate::error::{Error, Result};
use crate::model::{
    build_star_table, check_fds, schema_of, validate_warehouse, AttrId, Fd, MTuple, StarLayout, Tuple, Universe,
    Warehouse,
};
use crate::value::{Value, ValueSet};

/// Everything a chase needs to know about the table it runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct TableContext {
    /// Attribute universe.
    pub universe: Universe,
    /// Normalized, acyclic dependencies.
    pub fds: Vec<Fd>,
    /// Star layout when the table is a star-table.
    pub star: Option<StarLayout>,
    /// Whether `𝕂 → Mₗ` dependencies hold (star tables only).
    pub measure_fds: bool,
}

impl TableContext {
    /// Context for an arbitrary table with the given dependencies.
    pub fn generic(universe: Universe, fds: Vec<Fd>) -> Result<Self> {
        check_fds(&universe, &fds)?;
        Ok(TableContext { universe, fds, star: None, measure_fds: true })
    }

    /// Context of a warehouse's star-table.
    pub fn of_warehouse(w: &Warehouse) -> Self {
        let s = w.schema();
        TableContext {
            universe: s.universe().clone(),
            fds: s.fds(),
            star: Some(s.layout().clone()),
            measure_fds: s.measure_fds(),
        }
    }
}

/// Size statistics of a chase result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseStats {
    /// `|m_Chase(T)|`.
    pub m_tuple_count: usize,
    /// Largest component cardinality `δ`.
    pub delta: usize,
    /// Number of source rows `W`.
    pub warehouse_size: usize,
    /// Wall-clock time, filled in by callers that can measure it.
    pub elapsed: Option<Duration>,
}

/// The chased m-table with lookup indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaseResult {
    ctx: TableContext,
    m_tuples: Vec<MTuple>,
    fact_anchored: Vec<usize>,
    dim_orphans: Vec<Vec<usize>>,
    index_by_k: BTreeMap<Tuple, Vec<usize>>,
    index_by_ki: Vec<BTreeMap<Value, Vec<usize>>>,
    adom: Vec<ValueSet>,
    stats: ChaseStats,
}

impl ChaseResult {
    fn assemble(ctx: TableContext, mut m_tuples: Vec<MTuple>, warehouse_size: usize) -> Self {
        m_tuples.sort();
        m_tuples.dedup();
        let mut fact_anchored = Vec::new();
        let mut index_by_k: BTreeMap<Tuple, Vec<usize>> = BTreeMap::new();
        let ndims = ctx.star.as_ref().map_or(0, |s| s.keys.len());
        let mut dim_orphans = alloc::vec![Vec::new(); ndims];
        let mut index_by_ki: Vec<BTreeMap<Value, Vec<usize>>> = alloc::vec![BTreeMap::new(); ndims];
        let mut adom: Vec<BTreeSet<Value>> = alloc::vec![BTreeSet::new(); ctx.universe.len()];
        for (i, sigma) in m_tuples.iter().enumerate() {
            for (a, s) in sigma.iter() {
                adom[a.index()].extend(s.iter().cloned());
            }
            if let Some(star) = &ctx.star {
                for (d, k) in star.keys.iter().enumerate() {
                    if let Some(v) = sigma.get(*k).and_then(ValueSet::as_singleton) {
                        index_by_ki[d].entry(v.clone()).or_default().push(i);
                    }
                }
                if sigma.defines_all(&star.keys) {
                    // Fact rows always carry a measure and dimension rows
                    // never do; with a single dimension the keys alone
                    // cannot tell them apart.
                    if star.measures.iter().any(|m| sigma.defines(*m)) {
                        fact_anchored.push(i);
                    }
                    for k in sigma.enumerate(&star.keys).unwrap_or_default() {
                        index_by_k.entry(k).or_default().push(i);
                    }
                } else if let Some(d) = star.keys.iter().position(|k| sigma.defines(*k)) {
                    dim_orphans[d].push(i);
                }
            }
        }
        let stats = ChaseStats {
            m_tuple_count: m_tuples.len(),
            delta: m_tuples.iter().map(MTuple::max_component).max().unwrap_or(0),
            warehouse_size,
            elapsed: None,
        };
        ChaseResult {
            ctx,
            m_tuples,
            fact_anchored,
            dim_orphans,
            index_by_k,
            index_by_ki,
            adom: adom.into_iter().map(ValueSet::from_values).collect(),
            stats,
        }
    }

    /// The m-tuples in canonical (sorted) order.
    pub fn m_tuples(&self) -> &[MTuple] {
        &self.m_tuples
    }

    /// Indexes of m-tuples that stem from fact rows: defined over all of
    /// `𝕂` and over at least one measure.
    pub fn fact_anchored(&self) -> &[usize] {
        &self.fact_anchored
    }

    /// Indexes of dimension-only m-tuples, per dimension.
    pub fn dim_orphans(&self) -> &[Vec<usize>] {
        &self.dim_orphans
    }

    /// m-tuples whose `𝕂`-value is `k`.
    pub fn by_k(&self, k: &Tuple) -> &[usize] {
        self.index_by_k.get(k).map_or(&[], Vec::as_slice)
    }

    /// m-tuples whose `Kᵢ`-value is `v`.
    pub fn by_ki(&self, dim: usize, v: &Value) -> &[usize] {
        self.index_by_ki.get(dim).and_then(|m| m.get(v)).map_or(&[], Vec::as_slice)
    }

    /// The `𝕂`-value index.
    pub fn index_by_k(&self) -> &BTreeMap<Tuple, Vec<usize>> {
        &self.index_by_k
    }

    /// The table context (universe, dependencies, layout).
    pub fn context(&self) -> &TableContext {
        &self.ctx
    }

    /// The universe.
    pub fn universe(&self) -> &Universe {
        &self.ctx.universe
    }

    /// The dependency set.
    pub fn fds(&self) -> &[Fd] {
        &self.ctx.fds
    }

    /// The star layout, if the table is a star-table.
    pub fn star(&self) -> Option<&StarLayout> {
        self.ctx.star.as_ref()
    }

    /// Active domain of `a` (union of its components).
    pub fn adom(&self, a: AttrId) -> &ValueSet {
        &self.adom[a.index()]
    }

    /// Statistics.
    pub fn stats(&self) -> &ChaseStats {
        &self.stats
    }

    /// Records the elapsed time of the run that produced this result.
    pub fn set_elapsed(&mut self, d: Duration) {
        self.stats.elapsed = Some(d);
    }

    /// Dependencies `Y → B` that apply inside schema `s` (`YB ⊆ s`).
    pub fn fds_within<'a>(&'a self, s: &'a [AttrId]) -> impl Iterator<Item = &'a Fd> + 'a {
        self.ctx.fds.iter().filter(move |fd| fd.within(s))
    }

    /// True iff every dependency applying inside `s` has a singleton
    /// right-hand component in `sigma`; by homogeneity this means every tuple
    /// of `tuples(σ(s))` is consistent.
    pub fn consistent_in(&self, sigma: &MTuple, s: &[AttrId]) -> bool {
        self.fds_within(s).all(|fd| sigma.get(fd.rhs).is_some_and(|c| c.len() == 1))
    }

    /// m-tuples that may contain a tuple binding the given attributes:
    /// uses the key indexes when a key is bound, otherwise every m-tuple.
    pub fn candidates(&self, t: &Tuple) -> Vec<usize> {
        if let Some(star) = &self.ctx.star {
            if t.defines_all(&star.keys) {
                if let Ok(k) = t.restrict(&star.keys) {
                    return self.by_k(&k).to_vec();
                }
            }
            for (d, key) in star.keys.iter().enumerate() {
                if let Some(v) = t.get(*key) {
                    return self.by_ki(d, v).to_vec();
                }
            }
        }
        (0..self.m_tuples.len()).collect()
    }
}

/// Intermediate tables of the star algorithm: grouped dimensions and the
/// grouped fact table before the dimension join.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StarChaseTrace {
    /// `Dᵢ*`: one m-tuple per key value of each dimension.
    pub dim_groups: Vec<Vec<MTuple>>,
    /// `F₀*`: the grouped fact table.
    pub fact_groups: Vec<MTuple>,
}

/// Applies the m-chase rule to `(s, t)` for `fd`. Returns `None` when the
/// rule does not apply, else the replacement m-tuples (one when one of them
/// absorbs the other).
fn apply_rule(s: &MTuple, t: &MTuple, fd: &Fd) -> Option<(MTuple, Option<MTuple>)> {
    let (sa, ta) = (s.get(fd.rhs), t.get(fd.rhs));
    if sa.is_none() && ta.is_none() {
        return None;
    }
    for x in &fd.lhs {
        match (s.get(*x), t.get(*x)) {
            (Some(a), Some(b)) if a.meets(b) => {}
            _ => return None,
        }
    }
    let mut s1 = s.clone();
    let mut t1 = t.clone();
    if let Some(v) = ta {
        s1.union_component(fd.rhs, v);
    }
    if let Some(v) = sa {
        t1.union_component(fd.rhs, v);
    }
    if s1.is_subsumed_by(&t1) {
        Some((t1, None))
    } else if t1.is_subsumed_by(&s1) {
        Some((s1, None))
    } else {
        Some((s1, Some(t1)))
    }
}

/// Removes duplicates and every m-tuple strictly subsumed by another one.
/// Subsumed m-tuples carry no tuple that the larger one lacks, so truth,
/// conflict and consistency are unaffected.
fn reduce(mut ms: Vec<MTuple>) -> Vec<MTuple> {
    ms.sort();
    ms.dedup();
    // Larger schemas first so that absorbers tend to be seen early.
    let mut order: Vec<usize> = (0..ms.len()).collect();
    order.sort_by_key(|i| core::cmp::Reverse(ms[*i].schema().len()));
    let mut keep = alloc::vec![true; ms.len()];
    for &i in &order {
        for &j in &order {
            if i != j && keep[j] && ms[i].is_subsumed_by(&ms[j]) {
                keep[i] = false;
                break;
            }
        }
    }
    ms.into_iter().zip(keep).filter_map(|(m, k)| k.then_some(m)).collect()
}

/// The generic m-chase on an arbitrary table: repeatedly, for two m-tuples
/// `σ, σ′` and `X → A` such that both are defined over `X`, at least one over
/// `A`, and `tuples(σ(X)) ∩ tuples(σ′(X)) ≠ ∅`, merge their `A`-components
/// (keeping only one when it absorbs the other), until nothing changes.
pub fn m_chase_generic(rows: &[Tuple], ctx: &TableContext) -> Result<ChaseResult> {
    check_fds(&ctx.universe, &ctx.fds)?;
    let start: Vec<MTuple> = rows.iter().map(MTuple::from_tuple).collect();
    let ms = generic_fixpoint(start, &ctx.fds);
    Ok(ChaseResult::assemble(ctx.clone(), reduce(ms), rows.len()))
}

fn generic_fixpoint(start: Vec<MTuple>, fds: &[Fd]) -> Vec<MTuple> {
    let mut ms: Vec<MTuple> = start;
    ms.sort();
    ms.dedup();
    loop {
        let mut changed = false;
        let mut slots: Vec<Option<MTuple>> = ms.into_iter().map(Some).collect();
        let n = slots.len();
        for i in 0..n {
            for j in (i + 1)..n {
                for fd in fds {
                    let (Some(s), Some(t)) = (&slots[i], &slots[j]) else { break };
                    let Some((a, b)) = apply_rule(s, t, fd) else { continue };
                    let same = match &b {
                        Some(b) => &a == s && b == t,
                        None => false,
                    };
                    if same {
                        continue;
                    }
                    changed = true;
                    slots[i] = Some(a);
                    slots[j] = b;
                }
            }
        }
        ms = slots.into_iter().flatten().collect();
        ms.sort();
        ms.dedup();
        if !changed {
            return ms;
        }
    }
}

/// The star-specialized m-chase: group each dimension by key, group the fact
/// table by `𝕂`-value (or by `𝕂`-value and measure tuple when `𝕂 → Mₗ` is
/// not enforced), join the dimension components into each fact group and
/// append the dimension groups that no fact row references.
pub fn m_chase_star(w: &Warehouse) -> Result<ChaseResult> {
    star_chase(w, false).map(|(r, _)| r)
}

/// [`m_chase_star`] that also returns the grouped intermediates.
pub fn m_chase_star_traced(w: &Warehouse) -> Result<(ChaseResult, StarChaseTrace)> {
    star_chase(w, true).map(|(r, t)| (r, t.unwrap_or_default()))
}

fn star_chase(w: &Warehouse, traced: bool) -> Result<(ChaseResult, Option<StarChaseTrace>)> {
    if let Err(v) = validate_warehouse(w) {
        return Err(Error::InvalidWarehouse(alloc::format!("{}", v[0])));
    }
    let schema = w.schema();
    let layout = schema.layout();
    // Dᵢ*: one entry per key value with grouped non-key components.
    let mut dims: Vec<BTreeMap<Value, (MTuple, bool)>> = Vec::with_capacity(layout.keys.len());
    for (i, rows) in w.dim_tables().iter().enumerate() {
        let key = layout.keys[i];
        let mut groups: BTreeMap<Value, (MTuple, bool)> = BTreeMap::new();
        for t in rows {
            let Some(k) = t.get(key) else { continue };
            let entry = groups.entry(k.clone()).or_insert_with(|| (MTuple::empty(), false));
            for (a, v) in t.iter() {
                entry.0.union_component(a, &ValueSet::singleton(v.clone()));
            }
        }
        dims.push(groups);
    }
    // F₀*: fact rows grouped by 𝕂-value.
    let mut fact_groups: Vec<MTuple> = Vec::new();
    let mut by_k: BTreeMap<Vec<&Value>, Vec<&Tuple>> = BTreeMap::new();
    for t in w.fact_table() {
        let k: Vec<&Value> = layout.keys.iter().filter_map(|a| t.get(*a)).collect();
        by_k.entry(k).or_default().push(t);
    }
    for (_, rows) in by_k {
        if schema.measure_fds() {
            let mut sigma = MTuple::empty();
            for t in &rows {
                for (a, v) in t.iter() {
                    sigma.union_component(a, &ValueSet::singleton(v.clone()));
                }
            }
            fact_groups.push(sigma);
        } else {
            // One m-tuple per distinct row; rows whose measures are a strict
            // part of another row with the same key carry nothing new.
            let distinct: BTreeSet<&Tuple> = rows.into_iter().collect();
            let distinct: Vec<&Tuple> = distinct.into_iter().collect();
            for (i, t) in distinct.iter().enumerate() {
                let absorbed = distinct.iter().enumerate().any(|(j, o)| j != i && t.is_sub_tuple_of(o));
                if !absorbed {
                    fact_groups.push(MTuple::from_tuple(t));
                }
            }
        }
    }
    let trace = traced.then(|| StarChaseTrace {
        dim_groups: dims.iter().map(|g| g.values().map(|(m, _)| m.clone()).collect()).collect(),
        fact_groups: fact_groups.clone(),
    });
    // F*: join dimension components, marking the dimension entries used.
    let mut out = Vec::with_capacity(fact_groups.len());
    for mut sigma in fact_groups {
        for (i, key) in layout.keys.iter().enumerate() {
            let Some(k) = sigma.get(*key).and_then(ValueSet::as_singleton).cloned() else { continue };
            if let Some((dm, used)) = dims[i].get_mut(&k) {
                *used = true;
                for (a, s) in dm.iter() {
                    sigma.union_component(a, s);
                }
            }
        }
        out.push(sigma);
    }
    for groups in dims {
        out.extend(groups.into_values().filter(|(_, used)| !used).map(|(m, _)| m));
    }
    let ctx = TableContext::of_warehouse(w);
    Ok((ChaseResult::assemble(ctx, out, w.size()), trace))
}

/// Runs the generic chase on the warehouse's star-table.
pub fn m_chase_generic_warehouse(w: &Warehouse) -> Result<ChaseResult> {
    let table = build_star_table(w)?;
    m_chase_generic(&table.tuples(), &TableContext::of_warehouse(w))
}

/// True iff the star and generic algorithms produce the same m-table.
pub fn chase_equivalence_check(w: &Warehouse) -> bool {
    match (m_chase_star(w), m_chase_generic_warehouse(w)) {
        (Ok(a), Ok(b)) => a.m_tuples() == b.m_tuples(),
        _ => false,
    }
}

/// Expands every m-tuple into its tuples (used to check that a chase result
/// is a fixpoint).
pub fn expand(result: &ChaseResult) -> Vec<Tuple> {
    let mut out = BTreeSet::new();
    for sigma in result.m_tuples() {
        if let Ok(ts) = sigma.enumerate(&sigma.schema()) {
            out.extend(ts);
        }
    }
    out.into_iter().collect()
}

/// Attributes over which `sigma` has more than one value.
pub fn multi_valued(sigma: &MTuple) -> Vec<AttrId> {
    schema_of(sigma.iter().filter(|(_, s)| s.len() > 1).map(|(a, _)| a))
}
