//! Interval-valued consistent answers to aggregate queries.
//!
//! Every answer is computed from one scan of the relevant m-tuples. An
//! m-tuple whose condition attributes lie entirely in `Sat(Γ)` (and whose
//! group-by value is unambiguous) contributes in every repair; one that only
//! meets `Sat(Γ)` contributes in some repairs, which widens one side of the
//! interval.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::chase::ChaseResult;
use crate::error::{Error, Result};
use crate::model::{schema_of, AttrId, MTuple, Role, Tuple, Universe};
use crate::query::{sat_sets_for, CmpOp, Condition, SatSets, StandardQuery};
use crate::value::{Value, ValueSet};

/// Aggregate operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggOp {
    /// `MIN`
    Min,
    /// `MAX`
    Max,
    /// `COUNT`
    Count,
    /// `SUM`
    Sum,
}

impl AggOp {
    /// SQL spelling.
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Min => "MIN",
            AggOp::Max => "MAX",
            AggOp::Count => "COUNT",
            AggOp::Sum => "SUM",
        }
    }

    /// Parses a case-insensitive operator name.
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MIN" => Some(AggOp::Min),
            "MAX" => Some(AggOp::Max),
            "COUNT" => Some(AggOp::Count),
            "SUM" => Some(AggOp::Sum),
            _ => None,
        }
    }

    /// Combines an accumulator with a value (`aggr(acc, v)`); an absent
    /// accumulator absorbs into `v`.
    fn combine(self, acc: Option<Value>, v: &Value) -> Option<Value> {
        Some(match acc {
            None => v.clone(),
            Some(a) => match self {
                AggOp::Min => min_value(&a, v),
                AggOp::Max => max_value(&a, v),
                AggOp::Sum | AggOp::Count => a.add(v).unwrap_or(a),
            },
        })
    }
}

fn cmp_values(a: &Value, b: &Value) -> Ordering {
    a.compare(b).unwrap_or_else(|| a.cmp(b))
}

fn min_value(a: &Value, b: &Value) -> Value {
    if cmp_values(b, a) == Ordering::Less {
        b.clone()
    } else {
        a.clone()
    }
}

fn max_value(a: &Value, b: &Value) -> Value {
    if cmp_values(b, a) == Ordering::Greater {
        b.clone()
    } else {
        a.clone()
    }
}

/// `aggr(M)`, `COUNT(*)` or `COUNT(DISTINCT M)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Aggregate {
    /// Operator.
    pub op: AggOp,
    /// Aggregated measure; `None` only for `COUNT(*)`.
    pub measure: Option<AttrId>,
    /// `COUNT(DISTINCT M)`.
    pub distinct: bool,
}

impl Aggregate {
    /// `op(measure)`.
    pub fn new(op: AggOp, measure: AttrId) -> Self {
        Aggregate { op, measure: Some(measure), distinct: false }
    }

    /// `COUNT(*)`.
    pub fn count_star() -> Self {
        Aggregate { op: AggOp::Count, measure: None, distinct: false }
    }

    /// `COUNT(DISTINCT measure)`.
    pub fn count_distinct(measure: AttrId) -> Self {
        Aggregate { op: AggOp::Count, measure: Some(measure), distinct: true }
    }

    /// Renders the term, e.g. `SUM(M1)`.
    pub fn display(&self, u: &Universe) -> String {
        match (self.measure, self.distinct) {
            (None, _) => format!("{}(*)", self.op.name()),
            (Some(m), true) => format!("{}(DISTINCT {})", self.op.name(), u.name(m)),
            (Some(m), false) => format!("{}({})", self.op.name(), u.name(m)),
        }
    }

    fn check(&self, u: &Universe) -> Result<()> {
        match self.measure {
            None if self.op != AggOp::Count || self.distinct => {
                Err(Error::InvalidQuery(String::from("`*` is only allowed in COUNT(*)")))
            }
            None => Ok(()),
            Some(m) => {
                if m.index() >= u.len() {
                    return Err(Error::UnknownAttribute(format!("#{}", m.0)));
                }
                let info = u.info(m);
                if !matches!(info.role, Role::Measure | Role::Plain) {
                    return Err(Error::InvalidQuery(format!("`{}` is not a measure", info.name)));
                }
                if self.distinct && self.op != AggOp::Count {
                    return Err(Error::InvalidQuery(String::from("DISTINCT is only allowed in COUNT")));
                }
                if self.op == AggOp::Sum && !info.ty.is_numeric() {
                    return Err(Error::TypeError(format!("cannot sum the text measure `{}`", info.name)));
                }
                Ok(())
            }
        }
    }
}

/// One conjunct of a having clause: an aggregate term and the comparison
/// atoms on it. Its satisfying numbers form an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HavingConjunct {
    /// Aggregate term.
    pub aggregate: Aggregate,
    /// Atoms `term θ α`, `θ ∈ {<, <=, >, >=}`.
    pub atoms: Vec<(CmpOp, Value)>,
}

impl HavingConjunct {
    /// True iff `v` satisfies every atom.
    pub fn admits(&self, v: &Value) -> bool {
        self.atoms.iter().all(|(op, bound)| op.eval(v, bound))
    }

    /// True iff every number of `[lo, hi]` satisfies every atom. Since each
    /// atom is a half-line, checking both endpoints suffices.
    pub fn admits_interval(&self, lo: &Value, hi: &Value) -> bool {
        self.admits(lo) && self.admits(hi)
    }
}

/// `select [X], aggr(M) from T [where Γ] [group by X [having Υ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticQuery {
    /// Group-by attributes `X` (empty: no group-by), in select-list order.
    pub group_by: Vec<AttrId>,
    /// The aggregate.
    pub aggregate: Aggregate,
    /// Optional condition `Γ`.
    pub condition: Option<Condition>,
    /// Having conjuncts (group-by queries only).
    pub having: Vec<HavingConjunct>,
}

impl AnalyticQuery {
    /// A query without group-by or having.
    pub fn scalar(aggregate: Aggregate, condition: Option<Condition>) -> Self {
        AnalyticQuery { group_by: Vec::new(), aggregate, condition, having: Vec::new() }
    }

    /// A group-by query without having.
    pub fn grouped(group_by: Vec<AttrId>, aggregate: Aggregate, condition: Option<Condition>) -> Self {
        AnalyticQuery { group_by, aggregate, condition, having: Vec::new() }
    }

    /// `X`, sorted.
    pub fn x(&self) -> Vec<AttrId> {
        schema_of(self.group_by.iter().copied())
    }

    /// Measures referenced by the aggregate and the having clause.
    pub fn measures(&self) -> Vec<AttrId> {
        schema_of(self.aggregate.measure.into_iter().chain(self.having.iter().filter_map(|h| h.aggregate.measure)))
    }

    /// `sch(𝒜𝒬) = X ∪ sch(Γ) ∪ measures`.
    pub fn schema(&self) -> Vec<AttrId> {
        let mut s = self.x();
        if let Some(g) = &self.condition {
            s.extend(g.schema());
        }
        s.extend(self.measures());
        schema_of(s)
    }

    /// Checks the query against the universe.
    pub fn check(&self, u: &Universe) -> Result<()> {
        self.aggregate.check(u)?;
        if let Some(a) = self.group_by.iter().find(|a| a.index() >= u.len()) {
            return Err(Error::UnknownAttribute(format!("#{}", a.0)));
        }
        if let Some(g) = &self.condition {
            g.check(u)?;
        }
        if !self.having.is_empty() && self.group_by.is_empty() {
            return Err(Error::InvalidQuery(String::from("HAVING requires GROUP BY")));
        }
        for h in &self.having {
            h.aggregate.check(u)?;
            if h.aggregate.distinct {
                return Err(Error::UnsupportedHaving(String::from("COUNT(DISTINCT) in HAVING")));
            }
            if let Some(m) = h.aggregate.measure {
                if !u.info(m).ty.is_numeric() {
                    return Err(Error::UnsupportedHaving(format!("`{}` is not numeric", u.name(m))));
                }
            }
            for (op, v) in &h.atoms {
                if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(Error::UnsupportedHaving(format!("operator `{}` in HAVING", op.symbol())));
                }
                if !v.value_type().is_numeric() {
                    return Err(Error::UnsupportedHaving(String::from("non-numeric bound in HAVING")));
                }
            }
        }
        Ok(())
    }

    /// The companion query `select 𝕂, X, M from T where Γ` whose consistent
    /// answer underlies the strongly consistent answer.
    pub fn companion(&self, keys: &[AttrId]) -> StandardQuery {
        let mut proj: Vec<AttrId> = keys.to_vec();
        proj.extend(self.group_by.iter().copied());
        proj.extend(self.aggregate.measure);
        StandardQuery::new(schema_of(proj), self.condition.clone())
    }
}

/// A consistent answer to a query without group-by.
#[derive(Debug, Clone, PartialEq)]
pub enum IntervalAnswer {
    /// Some repair has no qualifying row (aggregates other than count).
    Null,
    /// Some repair has no qualifying row (count): the answer is 0.
    CountZero,
    /// `[glb, lub]`; `exact` is false when the interval may be wider than
    /// the true one.
    Interval {
        /// Greatest lower bound (or a sound under-approximation).
        glb: Value,
        /// Least upper bound (or a sound over-approximation).
        lub: Value,
        /// Whether the bounds are tight.
        exact: bool,
    },
}

impl IntervalAnswer {
    /// Shorthand for an exact interval.
    pub fn exact(glb: impl Into<Value>, lub: impl Into<Value>) -> Self {
        IntervalAnswer::Interval { glb: glb.into(), lub: lub.into(), exact: true }
    }

    /// The bounds, treating `CountZero` as `[0, 0]`.
    pub fn bounds(&self) -> Option<(Value, Value)> {
        match self {
            IntervalAnswer::Null => None,
            IntervalAnswer::CountZero => Some((Value::Int(0), Value::Int(0))),
            IntervalAnswer::Interval { glb, lub, .. } => Some((glb.clone(), lub.clone())),
        }
    }

    /// True iff `v` lies in the interval.
    pub fn contains(&self, v: &Value) -> bool {
        self.bounds().is_some_and(|(lo, hi)| cmp_values(&lo, v) != Ordering::Greater && cmp_values(v, &hi) != Ordering::Greater)
    }

    /// True iff `other`'s bounds lie within `self`'s (both non-null).
    pub fn encloses(&self, other: &IntervalAnswer) -> bool {
        match other.bounds() {
            Some((lo, hi)) => self.contains(&lo) && self.contains(&hi),
            None => matches!(self, IntervalAnswer::Null),
        }
    }

    /// Same bounds and kind, ignoring the `exact` flag.
    pub fn same_values(&self, other: &IntervalAnswer) -> bool {
        match (self, other) {
            (IntervalAnswer::Null, IntervalAnswer::Null) | (IntervalAnswer::CountZero, IntervalAnswer::CountZero) => true,
            (IntervalAnswer::Interval { glb: a, lub: b, .. }, IntervalAnswer::Interval { glb: c, lub: d, .. }) => {
                cmp_values(a, c) == Ordering::Equal && cmp_values(b, d) == Ordering::Equal
            }
            _ => false,
        }
    }
}

/// Consistent answer to a group-by query: one interval per consistent
/// group value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupedAnswer {
    /// `⟨x, [glb, lub]⟩` pairs keyed by `x`.
    pub rows: BTreeMap<Tuple, IntervalAnswer>,
}

/// Result of one aggregate scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanAccumulator {
    /// Some m-tuple contributes in every repair.
    pub changed: bool,
    /// Lower end (absent: no value yet).
    pub min_acc: Option<Value>,
    /// Upper end (absent: no value yet).
    pub max_acc: Option<Value>,
    /// Aggregate of the certain single-valued contributions.
    pub strong_acc: Option<Value>,
    /// Every contributing measure value is nonnegative.
    pub all_nonnegative: bool,
}

/// The m-tuple partition used by every analytic algorithm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SigmaSets {
    /// `Σ`: m-tuples over `𝕂 ∪ sch(𝒜𝒬)` that meet `Sat(Γ)`.
    pub sigma: Vec<usize>,
    /// `Σ⁺`: those contributing in every repair.
    pub sigma_plus: Vec<usize>,
    /// `Σ⁺₁`: those in `Σ⁺` with a single measure value.
    pub sigma_plus_one: Vec<usize>,
}

/// Per-query scan context: `Sat` sets and required schema.
struct Scan<'a> {
    chase: &'a ChaseResult,
    sat: SatSets,
    required: Vec<AttrId>,
    x: Vec<AttrId>,
}

impl<'a> Scan<'a> {
    fn new(chase: &'a ChaseResult, aq: &AnalyticQuery) -> Result<Self> {
        aq.check(chase.universe())?;
        let sat = sat_sets_for(aq.condition.as_ref(), chase)?;
        let keys = chase.star().map(|s| s.keys.clone()).unwrap_or_default();
        let mut required = aq.schema();
        required.extend(keys);
        Ok(Scan { chase, sat, required: schema_of(required), x: aq.x() })
    }

    /// σ qualifies at all: defined over the required schema and meets Sat.
    fn qualifies(&self, sigma: &MTuple) -> bool {
        sigma.defines_all(&self.required) && self.sat.meets(sigma)
    }

    /// Candidate group values of σ: `σ(X)` restricted to `Sat`.
    fn groups(&self, sigma: &MTuple) -> Result<Vec<Tuple>> {
        let comps: Vec<(AttrId, ValueSet)> =
            self.x.iter().map(|a| (*a, self.sat.effective(sigma, *a).unwrap_or_default())).collect();
        let refs: Vec<(AttrId, &ValueSet)> = comps.iter().map(|(a, s)| (*a, s)).collect();
        Ok(crate::model::cross_product(&refs))
    }

    /// σ contributes (to group `x`) in every repair.
    fn certain(&self, sigma: &MTuple) -> bool {
        self.sat.within(sigma) && self.x.iter().all(|a| sigma.get(*a).is_some_and(|c| c.len() == 1))
    }

    /// Values σ may contribute for `measure` within group `x`.
    fn measure_values(&self, sigma: &MTuple, measure: AttrId, x: Option<&Tuple>) -> ValueSet {
        let mut s = self.sat.effective(sigma, measure).unwrap_or_default();
        if let Some(v) = x.and_then(|x| x.get(measure)) {
            s = s.intersection(&ValueSet::singleton(v.clone()));
        }
        s
    }

    fn sigma_sets(&self, members: &[usize], measure: Option<AttrId>, x: Option<&Tuple>) -> SigmaSets {
        let mut out = SigmaSets::default();
        for &i in members {
            let sigma = &self.chase.m_tuples()[i];
            out.sigma.push(i);
            if self.certain(sigma) {
                out.sigma_plus.push(i);
                if measure.map_or(true, |m| self.measure_values(sigma, m, x).len() == 1) {
                    out.sigma_plus_one.push(i);
                }
            }
        }
        out
    }

    /// The aggregate scan over `members` for group `x`.
    fn compute(&self, members: &[usize], agg: &Aggregate, x: Option<&Tuple>) -> ScanAccumulator {
        let count = agg.op == AggOp::Count;
        let zero = count.then_some(Value::Int(0));
        let mut acc = ScanAccumulator {
            changed: false,
            min_acc: zero.clone(),
            max_acc: zero.clone(),
            strong_acc: zero,
            all_nonnegative: true,
        };
        let one = Value::Int(1);
        for &i in members {
            let sigma = &self.chase.m_tuples()[i];
            let values = match agg.measure {
                Some(m) => self.measure_values(sigma, m, x),
                None => ValueSet::singleton(one.clone()),
            };
            let (Some(lo), Some(hi)) = (values.iter().min_by(|a, b| cmp_values(a, b)), values.iter().max_by(|a, b| cmp_values(a, b))) else {
                continue;
            };
            if lo.is_negative() {
                acc.all_nonnegative = false;
            }
            if self.certain(sigma) {
                acc.changed = true;
                if count {
                    acc.min_acc = AggOp::Count.combine(acc.min_acc.take(), &one);
                    acc.max_acc = AggOp::Count.combine(acc.max_acc.take(), &one);
                } else {
                    acc.min_acc = agg.op.combine(acc.min_acc.take(), lo);
                    acc.max_acc = agg.op.combine(acc.max_acc.take(), hi);
                }
                if let Some(m0) = values.as_singleton() {
                    let v = if count { &one } else { m0 };
                    acc.strong_acc = agg.op.combine(acc.strong_acc.take(), v);
                }
            } else {
                match agg.op {
                    AggOp::Min => acc.min_acc = AggOp::Min.combine(acc.min_acc.take(), lo),
                    AggOp::Max => acc.max_acc = AggOp::Max.combine(acc.max_acc.take(), hi),
                    AggOp::Count => acc.max_acc = AggOp::Count.combine(acc.max_acc.take(), &one),
                    AggOp::Sum => {
                        if lo.is_negative() {
                            acc.min_acc = AggOp::Sum.combine(acc.min_acc.take(), lo);
                        }
                        if hi.is_positive() {
                            acc.max_acc = AggOp::Sum.combine(acc.max_acc.take(), hi);
                        }
                    }
                }
            }
        }
        acc
    }

    fn interval(&self, acc: &ScanAccumulator, agg: &Aggregate) -> IntervalAnswer {
        if !acc.changed {
            return if agg.op == AggOp::Count { IntervalAnswer::CountZero } else { IntervalAnswer::Null };
        }
        let exact = agg.op != AggOp::Sum || acc.all_nonnegative;
        match (&acc.min_acc, &acc.max_acc) {
            (Some(lo), Some(hi)) => IntervalAnswer::Interval { glb: lo.clone(), lub: hi.clone(), exact },
            // Unreachable once a certain m-tuple was seen: it fills both ends.
            _ => IntervalAnswer::Null,
        }
    }

    fn distinct(&self, sets: &SigmaSets, measure: AttrId, x: Option<&Tuple>) -> IntervalAnswer {
        if sets.sigma_plus.is_empty() {
            return IntervalAnswer::CountZero;
        }
        let union = |ids: &[usize]| -> (ValueSet, bool) {
            let mut all = ValueSet::new();
            let mut singletons = true;
            for &i in ids {
                let v = self.measure_values(&self.chase.m_tuples()[i], measure, x);
                singletons &= v.len() == 1;
                all.union_with(&v);
            }
            (all, singletons)
        };
        let (all, exact) = union(&sets.sigma);
        let (certain, _) = union(&sets.sigma_plus_one);
        let max = all.len().min(sets.sigma.len());
        let min = certain.len().max(1);
        IntervalAnswer::Interval { glb: Value::Int(min as i64), lub: Value::Int(max as i64), exact }
    }

    /// First grouping pass: fact-anchored m-tuples whose dependencies inside
    /// `X` are single-valued, bucketed by candidate group value.
    fn temp_by_group(&self) -> Result<BTreeMap<Tuple, Vec<usize>>> {
        let mut out: BTreeMap<Tuple, Vec<usize>> = BTreeMap::new();
        for i in self.members() {
            let sigma = &self.chase.m_tuples()[i];
            if !self.chase.fds_within(&self.x).all(|fd| sigma.get(fd.rhs).is_some_and(|c| c.len() == 1)) {
                continue;
            }
            for x in self.groups(sigma)? {
                out.entry(x).or_default().push(i);
            }
        }
        Ok(out)
    }

    fn members(&self) -> Vec<usize> {
        let ids: Vec<usize> = match self.chase.star() {
            Some(_) => self.chase.fact_anchored().to_vec(),
            None => (0..self.chase.m_tuples().len()).collect(),
        };
        ids.into_iter().filter(|i| self.qualifies(&self.chase.m_tuples()[*i])).collect()
    }
}

/// `Σ`, `Σ⁺` and `Σ⁺₁` of a query without group-by.
pub fn sigma_sets(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<SigmaSets> {
    let scan = Scan::new(chase, aq)?;
    Ok(scan.sigma_sets(&scan.members(), aq.aggregate.measure, None))
}

/// The aggregate scan over the given m-tuples (indexes into the chase).
/// Only m-tuples over `𝕂 ∪ sch(𝒜𝒬)` that meet `Sat(Γ)` take part.
pub fn compute_aggregate(chase: &ChaseResult, members: &[usize], aq: &AnalyticQuery) -> Result<ScanAccumulator> {
    let scan = Scan::new(chase, aq)?;
    let ms: Vec<usize> = members.iter().copied().filter(|i| scan.qualifies(&chase.m_tuples()[*i])).collect();
    Ok(scan.compute(&ms, &aq.aggregate, None))
}

/// Consistent answer to a query without group-by, with its strongly
/// consistent answer (`None` for NULL).
pub fn cons_answer_no_groupby(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<(IntervalAnswer, Option<Value>)> {
    if !aq.group_by.is_empty() {
        return Err(Error::InvalidQuery(String::from("query has a GROUP BY clause")));
    }
    let scan = Scan::new(chase, aq)?;
    let members = scan.members();
    if aq.aggregate.distinct {
        let sets = scan.sigma_sets(&members, aq.aggregate.measure, None);
        let strong = strong_distinct(&scan, &sets, aq, None);
        let m = aq.aggregate.measure.ok_or_else(|| Error::Invariant(String::from("distinct without measure")))?;
        return Ok((scan.distinct(&sets, m, None), strong));
    }
    let acc = scan.compute(&members, &aq.aggregate, None);
    let strong = if acc.changed || aq.aggregate.op == AggOp::Count { acc.strong_acc.clone() } else { None };
    Ok((scan.interval(&acc, &aq.aggregate), strong))
}

fn strong_distinct(scan: &Scan<'_>, sets: &SigmaSets, aq: &AnalyticQuery, x: Option<&Tuple>) -> Option<Value> {
    let m = aq.aggregate.measure?;
    let mut vals = BTreeSet::new();
    for &i in &sets.sigma_plus {
        if let Some(v) = scan.measure_values(&scan.chase.m_tuples()[i], m, x).as_singleton() {
            vals.insert(v.clone());
        }
    }
    Some(Value::Int(vals.len() as i64))
}

/// Consistent answer to a group-by query and its strongly consistent
/// answer (pairs whose certain single-valued contributions exist).
pub fn cons_answer_groupby(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<(GroupedAnswer, Vec<(Tuple, Value)>)> {
    if aq.group_by.is_empty() {
        return Err(Error::InvalidQuery(String::from("query has no GROUP BY clause")));
    }
    if !aq.having.is_empty() {
        return Ok((cons_answer_having(chase, aq)?, Vec::new()));
    }
    let scan = Scan::new(chase, aq)?;
    let mut answer = GroupedAnswer::default();
    let mut strong = Vec::new();
    for (x, members) in scan.temp_by_group()? {
        if aq.aggregate.distinct {
            let m = aq.aggregate.measure.ok_or_else(|| Error::Invariant(String::from("distinct without measure")))?;
            let sets = scan.sigma_sets(&members, Some(m), Some(&x));
            if sets.sigma_plus.is_empty() {
                continue;
            }
            if let Some(v) = strong_distinct(&scan, &sets, aq, Some(&x)).filter(|v| *v != Value::Int(0)) {
                strong.push((x.clone(), v));
            }
            answer.rows.insert(x.clone(), scan.distinct(&sets, m, Some(&x)));
            continue;
        }
        let acc = scan.compute(&members, &aq.aggregate, Some(&x));
        if !acc.changed {
            continue;
        }
        if let Some(v) = acc.strong_acc.clone() {
            if aq.aggregate.op != AggOp::Count || v != Value::Int(0) {
                strong.push((x.clone(), v));
            }
        }
        answer.rows.insert(x, scan.interval(&acc, &aq.aggregate));
    }
    Ok((answer, strong))
}

/// Consistent answer to a group-by query with a having clause: a group is
/// kept iff the interval of every having term lies inside the set of
/// numbers its atoms admit.
pub fn cons_answer_having(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<GroupedAnswer> {
    if aq.group_by.is_empty() {
        return Err(Error::InvalidQuery(String::from("HAVING requires GROUP BY")));
    }
    if aq.aggregate.distinct {
        return Err(Error::UnsupportedHaving(String::from("COUNT(DISTINCT) with HAVING")));
    }
    let scan = Scan::new(chase, aq)?;
    for h in &aq.having {
        if h.aggregate.op == AggOp::Sum {
            if let Some(m) = h.aggregate.measure {
                if chase.adom(m).iter().any(Value::is_negative) {
                    return Err(Error::UnsupportedHaving(format!(
                        "SUM over `{}`, which has negative values",
                        chase.universe().name(m)
                    )));
                }
            }
        }
    }
    let mut answer = GroupedAnswer::default();
    for (x, members) in scan.temp_by_group()? {
        let acc = scan.compute(&members, &aq.aggregate, Some(&x));
        if !acc.changed {
            continue;
        }
        let keep = aq.having.iter().all(|h| {
            let term = scan.compute(&members, &h.aggregate, Some(&x));
            match (&term.min_acc, &term.max_acc) {
                (Some(lo), Some(hi)) if term.changed => h.admits_interval(lo, hi),
                _ => false,
            }
        });
        if keep {
            answer.rows.insert(x, scan.interval(&acc, &aq.aggregate));
        }
    }
    Ok(answer)
}

/// Bounds for `COUNT(DISTINCT M)` without group-by.
pub fn count_distinct_bounds(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<IntervalAnswer> {
    if !aq.aggregate.distinct {
        return Err(Error::InvalidQuery(String::from("not a COUNT(DISTINCT) query")));
    }
    Ok(cons_answer_no_groupby(chase, aq)?.0)
}

/// Bounds for `COUNT(DISTINCT M)` per group.
pub fn count_distinct_bounds_grouped(chase: &ChaseResult, aq: &AnalyticQuery) -> Result<GroupedAnswer> {
    if !aq.aggregate.distinct {
        return Err(Error::InvalidQuery(String::from("not a COUNT(DISTINCT) query")));
    }
    Ok(cons_answer_groupby(chase, aq)?.0)
}
