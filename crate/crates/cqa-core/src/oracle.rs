//! Brute-force ground truth: evaluate a query in every repair and combine
//! the per-repair answers (intersection for standard queries, tightest
//! interval for aggregates).
//!
//! Only condition evaluation is shared with the engine; grouping,
//! aggregation and combination are written independently here.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::analytics::{
    cons_answer_groupby, cons_answer_no_groupby, AggOp, Aggregate, AnalyticQuery, GroupedAnswer, IntervalAnswer,
};
use crate::chase::ChaseResult;
use crate::classify::cons_maximal_tuples;
use crate::error::{Error, Result};
use crate::model::{schema_of, AttrId, StarLayout, Tuple};
use crate::query::{
    consistent_answer_bounds_capped, consistent_answer_standard_capped, decompose_independent, eval_condition,
    StandardQuery,
};
use crate::repairs::{Repair, RepairSpace};
use crate::value::Value;

/// Either kind of query.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// Projection-selection query.
    Standard(StandardQuery),
    /// Aggregate query.
    Analytic(AnalyticQuery),
}

/// The answer to a query in one repair.
#[derive(Debug, Clone, PartialEq)]
pub enum RepairAnswer {
    /// Standard query: a set of tuples over `X`.
    Tuples(BTreeSet<Tuple>),
    /// Aggregate without group-by; `None` is NULL.
    Scalar(Option<Value>),
    /// Aggregate with group-by: one value per group.
    Grouped(BTreeMap<Tuple, Value>),
}

/// The consistent answer assembled from per-repair answers.
#[derive(Debug, Clone, PartialEq)]
pub enum CombinedAnswer {
    /// Intersection of the per-repair tuple sets.
    Tuples(BTreeSet<Tuple>),
    /// Interval of per-repair aggregate values.
    Scalar(IntervalAnswer),
    /// Per-group intervals over groups present in every repair.
    Grouped(GroupedAnswer),
}

/// Per-repair answers, their combination, and (optionally) whether the
/// engine agrees.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// `(repair index, answer)` in enumeration order.
    pub per_repair: Vec<(usize, RepairAnswer)>,
    /// The combined answer.
    pub combined: CombinedAnswer,
    /// Whether the engine's answer agrees (exact equality where the engine
    /// claims exactness, containment otherwise); `None` until checked.
    pub agrees_with_engine: Option<bool>,
}

/// All repairs of a chase, with the helpers needed to query them.
#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    chase: &'a ChaseResult,
    repairs: Vec<Repair>,
    tables: Vec<Vec<Tuple>>,
    cap: usize,
}

impl<'a> Oracle<'a> {
    /// Enumerates the repairs of `chase`, failing with
    /// `RepairSpaceTooLarge` beyond `limit`.
    pub fn new(chase: &'a ChaseResult, limit: u128, cap: usize) -> Result<Self> {
        let space = RepairSpace::new(chase)?;
        space.check_limit(limit)?;
        let repairs: Vec<Repair> =
            space.choice_functions().map(|phi| space.build(chase, &phi)).collect::<Result<_>>()?;
        let cons = cons_maximal_tuples(chase, cap)?;
        let tables = repairs.iter().map(|r| r.chased_rows_with(chase, &cons)).collect::<Result<_>>()?;
        Ok(Oracle { chase, repairs, tables, cap })
    }

    /// The enumerated repairs.
    pub fn repairs(&self) -> &[Repair] {
        &self.repairs
    }

    /// Evaluates `q` in every repair and combines the answers.
    pub fn answer(&self, q: &Query) -> Result<OracleReport> {
        match q {
            Query::Standard(sq) => {
                sq.check(self.chase.universe())?;
                let mut per = Vec::with_capacity(self.repairs.len());
                for (i, table) in self.tables.iter().enumerate() {
                    per.push((i, RepairAnswer::Tuples(standard_in(table, sq)?)));
                }
                let combined = combine_tuples(&per);
                Ok(OracleReport { per_repair: per, combined, agrees_with_engine: None })
            }
            Query::Analytic(aq) => {
                aq.check(self.chase.universe())?;
                let mut per = Vec::with_capacity(self.repairs.len());
                for (i, r) in self.repairs.iter().enumerate() {
                    per.push((i, analytic_in(r, aq, self.chase.star())?));
                }
                let combined = if aq.group_by.is_empty() {
                    CombinedAnswer::Scalar(combine_scalar(&per, &aq.aggregate))
                } else {
                    CombinedAnswer::Grouped(combine_grouped(&per))
                };
                Ok(OracleReport { per_repair: per, combined, agrees_with_engine: None })
            }
        }
    }

    /// [`Oracle::answer`] followed by a comparison with the engine.
    pub fn answer_checked(&self, q: &Query) -> Result<OracleReport> {
        let mut report = self.answer(q)?;
        report.agrees_with_engine = Some(engine_agrees(self.chase, q, &report.combined, self.cap)?);
        Ok(report)
    }
}

/// `Ans(Q^[R])`: projections on `X` of the tuples of `True(𝓡)` over
/// `sch(Q)` that satisfy `Γ`. Those tuples are the restrictions to `sch(Q)`
/// of the rows of the chased repair table.
pub fn answer_in_repair_standard(chase: &ChaseResult, r: &Repair, q: &StandardQuery, cap: usize) -> Result<BTreeSet<Tuple>> {
    q.check(chase.universe())?;
    let table = r.chased_rows_with(chase, &cons_maximal_tuples(chase, cap)?)?;
    standard_in(&table, q)
}

fn standard_in(table: &[Tuple], q: &StandardQuery) -> Result<BTreeSet<Tuple>> {
    let sq = q.schema();
    let x = q.x();
    let mut out = BTreeSet::new();
    for t in table.iter().filter(|t| t.defines_all(&sq)).map(|t| t.project(&sq)) {
        let keep = match &q.condition {
            Some(g) => eval_condition(g, &t)?,
            None => true,
        };
        if keep {
            out.insert(t.project(&x));
        }
    }
    Ok(out)
}

/// The aggregate answer in one repair: the fact anchor rows defined over `𝕂`,
/// the group-by attributes, the condition attributes and the measures,
/// that satisfy `Γ`; grouped by `X` and filtered by the having clause.
pub fn answer_in_repair_analytic(chase: &ChaseResult, r: &Repair, aq: &AnalyticQuery) -> Result<RepairAnswer> {
    aq.check(chase.universe())?;
    analytic_in(r, aq, chase.star())
}

/// Aggregates over the fact rows of a repair: rows defined over every key
/// and at least one measure (the measure test matters with a single
/// dimension, whose dimension rows also carry every key).
fn analytic_in(r: &Repair, aq: &AnalyticQuery, star: Option<&StarLayout>) -> Result<RepairAnswer> {
    let mut required: Vec<AttrId> = aq.schema();
    required.extend(star.iter().flat_map(|s| s.keys.iter().copied()));
    let required = schema_of(required);
    let measures = star.map_or(&[][..], |s| &s.measures[..]);
    let x = aq.x();
    let mut groups: BTreeMap<Tuple, Vec<&Tuple>> = BTreeMap::new();
    for row in &r.anchor_rows {
        if !row.defines_all(&required) || (!measures.is_empty() && !measures.iter().any(|m| row.defines(*m))) {
            continue;
        }
        if let Some(g) = &aq.condition {
            if !eval_condition(g, row)? {
                continue;
            }
        }
        groups.entry(row.project(&x)).or_default().push(row);
    }
    if x.is_empty() {
        let rows = groups.remove(&Tuple::empty()).unwrap_or_default();
        return Ok(RepairAnswer::Scalar(fold(&rows, &aq.aggregate)));
    }
    let mut out = BTreeMap::new();
    for (key, rows) in groups {
        let passes = aq.having.iter().all(|h| fold(&rows, &h.aggregate).is_some_and(|v| h.admits(&v)));
        if !passes {
            continue;
        }
        if let Some(v) = fold(&rows, &aq.aggregate) {
            out.insert(key, v);
        }
    }
    Ok(RepairAnswer::Grouped(out))
}

/// SQL-style aggregation over rows; `None` is NULL (no row, op ≠ count).
fn fold(rows: &[&Tuple], agg: &Aggregate) -> Option<Value> {
    let values: Vec<&Value> = match agg.measure {
        Some(m) => rows.iter().filter_map(|r| r.get(m)).collect(),
        None => Vec::new(),
    };
    match agg.op {
        AggOp::Count if agg.distinct => {
            let set: BTreeSet<&Value> = values.into_iter().collect();
            Some(Value::Int(set.len() as i64))
        }
        AggOp::Count => Some(Value::Int(if agg.measure.is_some() { values.len() } else { rows.len() } as i64)),
        AggOp::Min => values.into_iter().min_by(|a, b| order(a, b)).cloned(),
        AggOp::Max => values.into_iter().max_by(|a, b| order(a, b)).cloned(),
        AggOp::Sum => {
            let mut it = values.into_iter();
            let first = it.next()?.clone();
            it.try_fold(first, |acc, v| acc.add(v))
        }
    }
}

fn order(a: &Value, b: &Value) -> Ordering {
    a.compare(b).unwrap_or_else(|| a.cmp(b))
}

fn combine_tuples(per: &[(usize, RepairAnswer)]) -> CombinedAnswer {
    let mut acc: Option<BTreeSet<Tuple>> = None;
    for (_, a) in per {
        if let RepairAnswer::Tuples(s) = a {
            acc = Some(match acc {
                None => s.clone(),
                Some(prev) => prev.intersection(s).cloned().collect(),
            });
        }
    }
    CombinedAnswer::Tuples(acc.unwrap_or_default())
}

fn span<'v>(values: impl Iterator<Item = &'v Value>) -> Option<(Value, Value)> {
    let mut lo: Option<&Value> = None;
    let mut hi: Option<&Value> = None;
    for v in values {
        if lo.map_or(true, |l| order(v, l) == Ordering::Less) {
            lo = Some(v);
        }
        if hi.map_or(true, |h| order(v, h) == Ordering::Greater) {
            hi = Some(v);
        }
    }
    Some((lo?.clone(), hi?.clone()))
}

fn combine_scalar(per: &[(usize, RepairAnswer)], agg: &Aggregate) -> IntervalAnswer {
    let mut values = Vec::with_capacity(per.len());
    for (_, a) in per {
        match a {
            RepairAnswer::Scalar(Some(v)) => values.push(v),
            _ => return IntervalAnswer::Null,
        }
    }
    if agg.op == AggOp::Count && values.iter().any(|v| **v == Value::Int(0)) {
        return IntervalAnswer::CountZero;
    }
    match span(values.into_iter()) {
        Some((glb, lub)) => IntervalAnswer::Interval { glb, lub, exact: true },
        None => IntervalAnswer::Null,
    }
}

fn combine_grouped(per: &[(usize, RepairAnswer)]) -> GroupedAnswer {
    let maps: Vec<&BTreeMap<Tuple, Value>> = per
        .iter()
        .filter_map(|(_, a)| match a {
            RepairAnswer::Grouped(m) => Some(m),
            _ => None,
        })
        .collect();
    let mut out = GroupedAnswer::default();
    let Some(first) = maps.first() else { return out };
    for key in first.keys() {
        let vals: Option<Vec<&Value>> = maps.iter().map(|m| m.get(key)).collect();
        if let Some((glb, lub)) = vals.and_then(|v| span(v.into_iter())) {
            out.rows.insert(key.clone(), IntervalAnswer::Interval { glb, lub, exact: true });
        }
    }
    out
}

/// Convenience wrapper: enumerate the repairs and answer `q`.
pub fn oracle_consistent_answer(chase: &ChaseResult, q: &Query, limit: u128, cap: usize) -> Result<OracleReport> {
    Oracle::new(chase, limit, cap)?.answer_checked(q)
}

/// Compares the engine's answer with the oracle's combined answer: equality
/// where the engine claims exactness, containment where it reports bounds.
/// Standard queries with a non-independent condition check the bounds
/// sandwich instead.
pub fn engine_agrees(chase: &ChaseResult, q: &Query, combined: &CombinedAnswer, cap: usize) -> Result<bool> {
    match (q, combined) {
        (Query::Standard(sq), CombinedAnswer::Tuples(truth)) => {
            let bounds = consistent_answer_bounds_capped(chase, sq, cap)?;
            let sandwich = bounds.lower.is_subset(truth) && truth.is_subset(&bounds.upper);
            let independent = match &sq.condition {
                Some(g) => decompose_independent(g, chase.universe()).is_ok(),
                None => true,
            };
            if !independent {
                return Ok(sandwich);
            }
            Ok(sandwich && consistent_answer_standard_capped(chase, sq, cap)? == *truth)
        }
        (Query::Analytic(aq), CombinedAnswer::Scalar(truth)) => {
            let (engine, _) = cons_answer_no_groupby(chase, aq)?;
            Ok(interval_agrees(&engine, truth))
        }
        (Query::Analytic(aq), CombinedAnswer::Grouped(truth)) => {
            let (engine, _) = cons_answer_groupby(chase, aq)?;
            if engine.rows.len() != truth.rows.len() {
                return Ok(false);
            }
            Ok(engine
                .rows
                .iter()
                .all(|(x, e)| truth.rows.get(x).is_some_and(|t| interval_agrees(e, t))))
        }
        _ => Err(Error::Invariant(String::from("answer kind does not match the query"))),
    }
}

fn interval_agrees(engine: &IntervalAnswer, truth: &IntervalAnswer) -> bool {
    match engine {
        IntervalAnswer::Interval { exact: false, .. } => engine.encloses(truth),
        _ => engine.same_values(truth),
    }
}
