//! Shared fixtures and an independent brute-force repair oracle.
//!
//! The oracle here deliberately avoids the engine's chase, repair and
//! classification code: it reads the raw warehouse, groups dimension rows
//! by key and fact rows by key combination, enumerates every way of picking
//! one value per conflicting cell, and evaluates queries on the resulting
//! plain tables with ordinary SQL semantics.

#![allow(dead_code)]

pub mod gen;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use cqa_core::{
    AggOp, Aggregate, AnalyticQuery, AttrDef, AttrId, CmpOp, Condition, DimensionDef, Fd, IntervalAnswer, MTuple,
    Operand, StandardQuery, StarSchemaDef, TableContext, Tuple, Universe, Value, ValueSet, ValueType, Warehouse,
};

/// Parses a cell: integers become `Int`, everything else `Text`.
pub fn cell(s: &str) -> Value {
    s.parse::<i64>().map(Value::Int).unwrap_or_else(|_| Value::text(s))
}

/// Builds a tuple from `"A=x B=y"`.
pub fn tup(u: &Universe, spec: &str) -> Tuple {
    Tuple::from_pairs(spec.split_whitespace().map(|kv| {
        let (a, v) = kv.split_once('=').expect("attr=value");
        (u.resolve(a).expect("known attribute"), cell(v))
    }))
}

/// Builds an m-tuple from `"A=x|x' B=y"`.
pub fn mtup(u: &Universe, spec: &str) -> MTuple {
    MTuple::from_components(spec.split_whitespace().map(|kv| {
        let (a, vs) = kv.split_once('=').expect("attr=values");
        (u.resolve(a).expect("known attribute"), ValueSet::from_values(vs.split('|').map(cell)))
    }))
}

/// Set of tuples from several specs.
pub fn tups(u: &Universe, specs: &[&str]) -> BTreeSet<Tuple> {
    specs.iter().map(|s| tup(u, s)).collect()
}

fn fig1_schema(measure_type: ValueType, measure_fds: bool) -> StarSchemaDef {
    StarSchemaDef::new(
        vec![
            DimensionDef {
                name: "D1".into(),
                key: AttrDef::new("K1", ValueType::Text),
                non_keys: vec![AttrDef::new("A1_1", ValueType::Text), AttrDef::new("A1_2", ValueType::Text)],
            },
            DimensionDef {
                name: "D2".into(),
                key: AttrDef::new("K2", ValueType::Text),
                non_keys: vec![AttrDef::new("A2_1", ValueType::Text), AttrDef::new("A2_2", ValueType::Text)],
            },
        ],
        vec![AttrDef::new("M1", measure_type)],
        measure_fds,
    )
    .unwrap()
}

fn fig1_with(measure_type: ValueType, m1: &str, m1p: &str, m1pp: &str) -> Warehouse {
    let schema = fig1_schema(measure_type, true);
    let u = schema.universe().clone();
    let d1 = ["K1=k1 A1_1=a1 A1_2=a2", "K1=k1 A1_1=a1' A1_2=a2", "K1=k1' A1_1=a1", "K1=k1'' A1_1=a1' A1_2=a2'"];
    let d2 = ["K2=k2 A2_1=b1 A2_2=b2", "K2=k2' A2_1=b1"];
    let f = [
        format!("K1=k1 K2=k2 M1={m1}"),
        format!("K1=k1 K2=k2' M1={m1p}"),
        format!("K1=k1 K2=k2' M1={m1pp}"),
        format!("K1=k1' K2=k2'' M1={m1}"),
    ];
    Warehouse::new_validated(
        schema,
        vec![d1.iter().map(|s| tup(&u, s)).collect(), d2.iter().map(|s| tup(&u, s)).collect()],
        f.iter().map(|s| tup(&u, s)).collect(),
    )
    .unwrap()
}

/// The running example with symbolic measure values `m1`, `m1'`, `m1''`.
pub fn fig1_text() -> Warehouse {
    fig1_with(ValueType::Text, "m1", "m1'", "m1''")
}

/// The running example with integer measures.
pub fn fig1_numeric(m1: i64, m1p: i64, m1pp: i64) -> Warehouse {
    fig1_with(ValueType::Int, &m1.to_string(), &m1p.to_string(), &m1pp.to_string())
}

/// The numeric aggregate example: two dimensions with one integer non-key
/// each (`A1`, `A2`) and three fact rows; `third` is the measure of the
/// `k1'k2'` fact row (−10 in the original, 10 in the variant).
pub fn example8(third: i64) -> Warehouse {
    let schema = StarSchemaDef::new(
        vec![
            DimensionDef {
                name: "D1".into(),
                key: AttrDef::new("K1", ValueType::Text),
                non_keys: vec![AttrDef::new("A1", ValueType::Int)],
            },
            DimensionDef {
                name: "D2".into(),
                key: AttrDef::new("K2", ValueType::Text),
                non_keys: vec![AttrDef::new("A2", ValueType::Int)],
            },
        ],
        vec![AttrDef::new("M1", ValueType::Int)],
        true,
    )
    .unwrap();
    let u = schema.universe().clone();
    let d1 = tups(&u, &["K1=k1 A1=10", "K1=k1' A1=-15", "K1=k1' A1=20"]);
    let d2 = tups(&u, &["K2=k2 A2=2", "K2=k2' A2=0", "K2=k2' A2=3"]);
    let f = [
        "K1=k1 K2=k2 M1=30".to_string(),
        format!("K1=k1' K2=k2' M1={third}"),
        "K1=k1 K2=k2' M1=100".to_string(),
    ];
    Warehouse::new_validated(
        schema,
        vec![d1.into_iter().collect(), d2.into_iter().collect()],
        f.iter().map(|s| tup(&u, s)).collect(),
    )
    .unwrap()
}

/// The three-attribute table `{ab, bc, ac'}` with `A → C` and `B → C`.
pub fn example2() -> (TableContext, Vec<Tuple>) {
    let u = Universe::plain(&["A", "B", "C"]).unwrap();
    let (a, b, c) = (u.resolve("A").unwrap(), u.resolve("B").unwrap(), u.resolve("C").unwrap());
    let rows = vec![tup(&u, "A=a B=b"), tup(&u, "B=b C=c"), tup(&u, "A=a C=c'")];
    let ctx = TableContext::generic(u, vec![Fd::new([a], c), Fd::new([b], c)]).unwrap();
    (ctx, rows)
}

/// All sub-tuples (nonempty) of every tuple in `rows`.
pub fn closure<'a>(rows: impl IntoIterator<Item = &'a Tuple>) -> BTreeSet<Tuple> {
    let mut out = BTreeSet::new();
    for r in rows {
        let pairs: Vec<(AttrId, Value)> = r.iter().map(|(a, v)| (a, v.clone())).collect();
        for mask in 1u32..(1 << pairs.len()) {
            out.insert(Tuple::from_pairs(
                pairs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| p.clone()),
            ));
        }
    }
    out
}

/// One cell of the warehouse that a repair must settle: the candidate
/// values observed for it (possibly none, possibly one).
#[derive(Debug, Clone)]
struct Slot {
    attr: AttrId,
    candidates: Vec<Value>,
}

/// One entity of the repaired warehouse: fixed bindings plus the slots
/// whose value a repair picks.
#[derive(Debug, Clone)]
struct Entity {
    kind: Kind,
    fixed: Vec<(AttrId, Value)>,
    slots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Fact,
    Dim(usize),
}

/// What one repair picked: non-key values per dimension key, and measure
/// values per key combination (when `𝕂 → Mₗ` holds).
#[derive(Debug, Clone, Default)]
pub struct Picks {
    dims: Vec<BTreeMap<Value, Vec<(AttrId, Value)>>>,
    facts: BTreeMap<Tuple, Vec<(AttrId, Value)>>,
}

impl Picks {
    /// Adds to `t` every value the repair fixes through a key of `t`.
    pub fn complete(&self, t: &Tuple, keys: &[AttrId]) -> Tuple {
        let mut pairs: Vec<(AttrId, Value)> = t.iter().map(|(a, v)| (a, v.clone())).collect();
        for (i, k) in keys.iter().enumerate() {
            if let Some(extra) = t.get(*k).and_then(|v| self.dims[i].get(v)) {
                pairs.extend(extra.iter().cloned());
            }
        }
        if t.defines_all(keys) {
            if let Some(extra) = self.facts.get(&t.project(keys)) {
                pairs.extend(extra.iter().cloned());
            }
        }
        pairs.sort();
        pairs.dedup();
        Tuple::from_pairs(pairs)
    }
}

/// Brute-force enumeration of the repairs of a star warehouse, computed
/// directly from the raw tables.
#[derive(Debug, Clone)]
pub struct BruteForce {
    /// Attribute universe.
    pub universe: Universe,
    /// Dimension keys in order.
    pub keys: Vec<AttrId>,
    /// The warehouse's dependencies.
    pub fds: Vec<Fd>,
    /// Repairs as plain tables (fact rows joined with their dimension rows,
    /// plus one row per dimension key).
    pub repairs: Vec<Vec<Tuple>>,
    /// The picks behind each repair.
    pub picks: Vec<Picks>,
    /// Number of leading rows of each repair that come from fact rows;
    /// aggregates range over these only (with one dimension, the
    /// per-key dimension rows also carry every key attribute).
    pub fact_rows: usize,
}

impl BruteForce {
    /// Enumerates the repairs of `w`, or `None` when there are more than
    /// `limit` of them.
    pub fn new(w: &Warehouse, limit: usize) -> Option<Self> {
        let schema = w.schema();
        let layout = schema.layout();
        let mut slots: Vec<Slot> = Vec::new();
        let slot_of = |attr: AttrId, values: BTreeSet<Value>, slots: &mut Vec<Slot>| {
            slots.push(Slot { attr, candidates: values.into_iter().collect() });
            slots.len() - 1
        };
        // Dimension key -> slot per non-key.
        let mut dim_slots: Vec<BTreeMap<Value, Vec<usize>>> = Vec::new();
        for (i, table) in w.dim_tables().iter().enumerate() {
            let mut by_key: BTreeMap<Value, BTreeMap<AttrId, BTreeSet<Value>>> = BTreeMap::new();
            for row in table {
                let k = row.get(layout.keys[i]).unwrap().clone();
                let entry = by_key.entry(k).or_default();
                for a in &layout.non_keys[i] {
                    let e = entry.entry(*a).or_default();
                    if let Some(v) = row.get(*a) {
                        e.insert(v.clone());
                    }
                }
            }
            let mut m = BTreeMap::new();
            for (k, cols) in by_key {
                let ids = cols.into_iter().map(|(a, vs)| slot_of(a, vs, &mut slots)).collect();
                m.insert(k, ids);
            }
            dim_slots.push(m);
        }
        let mut entities: Vec<Entity> = Vec::new();
        // Facts.
        let mut fact_keys: BTreeSet<Vec<Value>> = BTreeSet::new();
        let key_of = |row: &Tuple| -> Vec<Value> { layout.keys.iter().map(|k| row.get(*k).unwrap().clone()).collect() };
        let dims_for = |kv: &[Value]| -> Vec<usize> {
            kv.iter().enumerate().flat_map(|(i, v)| dim_slots[i].get(v).cloned().unwrap_or_default()).collect()
        };
        if schema.measure_fds() {
            let mut by_k: BTreeMap<Vec<Value>, BTreeMap<AttrId, BTreeSet<Value>>> = BTreeMap::new();
            for row in w.fact_table() {
                let e = by_k.entry(key_of(row)).or_default();
                for m in &layout.measures {
                    let s = e.entry(*m).or_default();
                    if let Some(v) = row.get(*m) {
                        s.insert(v.clone());
                    }
                }
            }
            for (kv, cols) in by_k {
                let mut ss = dims_for(&kv);
                ss.extend(cols.into_iter().map(|(a, vs)| slot_of(a, vs, &mut slots)));
                fact_keys.insert(kv.clone());
                entities.push(Entity { kind: Kind::Fact, fixed: layout.keys.iter().copied().zip(kv).collect(), slots: ss });
            }
        } else {
            let distinct: BTreeSet<Tuple> = w.fact_table().iter().cloned().collect();
            for row in &distinct {
                if distinct.iter().any(|o| o != row && row.is_sub_tuple_of(o)) {
                    continue;
                }
                let kv = key_of(row);
                fact_keys.insert(kv.clone());
                entities.push(Entity {
                    kind: Kind::Fact,
                    fixed: row.iter().map(|(a, v)| (a, v.clone())).collect(),
                    slots: dims_for(&kv),
                });
            }
        }
        let fact_rows = entities.len();
        // One row per dimension key.
        for (i, m) in dim_slots.iter().enumerate() {
            for (k, ss) in m {
                entities.push(Entity { kind: Kind::Dim(i), fixed: vec![(layout.keys[i], k.clone())], slots: ss.clone() });
            }
        }
        let size = slots.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.candidates.len().max(1)))?;
        if size > limit {
            return None;
        }
        let measure_fds = schema.measure_fds();
        let mut repairs = Vec::with_capacity(size);
        let mut all_picks = Vec::with_capacity(size);
        let mut pick = vec![0usize; slots.len()];
        loop {
            let mut rows = Vec::with_capacity(entities.len());
            let mut picks = Picks { dims: vec![BTreeMap::new(); layout.keys.len()], facts: BTreeMap::new() };
            for e in &entities {
                let mut pairs = e.fixed.clone();
                let mut chosen = Vec::new();
                for &s in &e.slots {
                    if let Some(v) = slots[s].candidates.get(pick[s]) {
                        pairs.push((slots[s].attr, v.clone()));
                        chosen.push((slots[s].attr, v.clone()));
                    }
                }
                match e.kind {
                    Kind::Dim(i) => {
                        picks.dims[i].insert(e.fixed[0].1.clone(), chosen);
                    }
                    Kind::Fact if measure_fds => {
                        let k = Tuple::from_pairs(e.fixed.iter().cloned()).project(&layout.keys);
                        chosen.retain(|(a, _)| layout.measures.contains(a));
                        picks.facts.insert(k, chosen);
                    }
                    Kind::Fact => {}
                }
                rows.push(Tuple::from_pairs(pairs));
            }
            repairs.push(rows);
            all_picks.push(picks);
            // Odometer step.
            let mut i = 0;
            loop {
                if i == slots.len() {
                    return Some(BruteForce {
                        universe: schema.universe().clone(),
                        keys: layout.keys.clone(),
                        fds: schema.fds(),
                        repairs,
                        picks: all_picks,
                        fact_rows,
                    });
                }
                pick[i] += 1;
                if pick[i] < slots[i].candidates.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }

    /// `True(T)`: sub-tuples of the rows of any plain repair.
    pub fn true_all(&self) -> BTreeSet<Tuple> {
        let rows: BTreeSet<&Tuple> = self.repairs.iter().flatten().collect();
        closure(rows)
    }

    /// The ⊑-maximal consistent tuples.
    pub fn cons_maximal(&self) -> Vec<Tuple> {
        let cons = self.cons_by_definition();
        cons.iter().filter(|t| !cons.iter().any(|o| o != *t && t.is_sub_tuple_of(o))).cloned().collect()
    }

    /// Maximal tuples of each repair's `True(R)`: its plain rows plus every
    /// consistent tuple completed with the values the repair fixes through
    /// the keys the tuple carries.
    pub fn repair_tables(&self) -> Vec<Vec<Tuple>> {
        let cons = self.cons_maximal();
        self.repairs
            .iter()
            .zip(&self.picks)
            .map(|(rows, p)| rows.iter().cloned().chain(cons.iter().map(|c| p.complete(c, &self.keys))).collect())
            .collect()
    }

    /// `Cons(T)` from its definition: true tuples `t` such that no
    /// dependency `X → A` with `XA ⊆ sch(t)` has two true tuples agreeing on
    /// `X` but not on `A`.
    pub fn cons_by_definition(&self) -> BTreeSet<Tuple> {
        let fds = &self.fds;
        let truth = self.true_all();
        let mut seen: BTreeMap<(usize, Tuple), BTreeSet<Value>> = BTreeMap::new();
        for t in &truth {
            for (i, fd) in fds.iter().enumerate() {
                if let (true, Some(a)) = (t.defines_all(&fd.lhs), t.get(fd.rhs)) {
                    seen.entry((i, t.project(&fd.lhs))).or_default().insert(a.clone());
                }
            }
        }
        truth
            .into_iter()
            .filter(|t| {
                fds.iter().enumerate().all(|(i, fd)| {
                    !(t.defines_all(&fd.lhs) && t.defines(fd.rhs))
                        || seen.get(&(i, t.project(&fd.lhs))).map_or(0, BTreeSet::len) == 1
                })
            })
            .collect()
    }

    /// Consistent answer of a standard query: intersection over repairs of
    /// the answers computed on each repair's true tuples over `sch(Q)`.
    pub fn standard(&self, q: &StandardQuery) -> BTreeSet<Tuple> {
        let sq = q.schema();
        let x = q.x();
        let mut acc: Option<BTreeSet<Tuple>> = None;
        for table in self.repair_tables() {
            let s: BTreeSet<Tuple> = table
                .iter()
                .filter(|t| t.defines_all(&sq))
                .map(|t| t.project(&sq))
                .filter(|t| q.condition.as_ref().map_or(true, |g| holds(g, t)))
                .map(|t| t.project(&x))
                .collect();
            acc = Some(match acc {
                None => s,
                Some(a) => a.intersection(&s).cloned().collect(),
            });
        }
        acc.unwrap_or_default()
    }

    /// Per-repair answers of an analytic query: group key → aggregate value.
    /// Scalar queries use the empty tuple as the only key, present unless
    /// the aggregate is NULL.
    pub fn analytic_per_repair(&self, aq: &AnalyticQuery) -> Vec<BTreeMap<Tuple, Value>> {
        let mut required: BTreeSet<AttrId> = self.keys.iter().copied().collect();
        required.extend(aq.group_by.iter().copied());
        if let Some(g) = &aq.condition {
            required.extend(condition_attrs(g));
        }
        required.extend(aq.aggregate.measure);
        required.extend(aq.having.iter().filter_map(|h| h.aggregate.measure));
        let required: Vec<AttrId> = required.into_iter().collect();
        let mut x = aq.group_by.clone();
        x.sort();
        x.dedup();
        self.repairs
            .iter()
            .map(|r| {
                let mut groups: BTreeMap<Tuple, Vec<&Tuple>> = BTreeMap::new();
                for row in &r[..self.fact_rows] {
                    if row.defines_all(&required) && aq.condition.as_ref().map_or(true, |g| holds(g, row)) {
                        groups.entry(row.project(&x)).or_default().push(row);
                    }
                }
                if x.is_empty() {
                    let rows = groups.remove(&Tuple::empty()).unwrap_or_default();
                    return aggregate(&rows, &aq.aggregate).map(|v| (Tuple::empty(), v)).into_iter().collect();
                }
                groups
                    .into_iter()
                    .filter(|(_, rows)| {
                        aq.having.iter().all(|h| {
                            aggregate(rows, &h.aggregate)
                                .is_some_and(|v| h.atoms.iter().all(|(op, c)| compare_with(op, &v, c)))
                        })
                    })
                    .filter_map(|(k, rows)| aggregate(&rows, &aq.aggregate).map(|v| (k, v)))
                    .collect()
            })
            .collect()
    }

    /// Consistent answer of a scalar analytic query.
    pub fn scalar(&self, aq: &AnalyticQuery) -> IntervalAnswer {
        let per = self.analytic_per_repair(aq);
        let mut vals = Vec::new();
        for m in &per {
            match m.get(&Tuple::empty()) {
                Some(v) => vals.push(v.clone()),
                None => return IntervalAnswer::Null,
            }
        }
        if aq.aggregate.op == AggOp::Count && vals.contains(&Value::Int(0)) {
            return IntervalAnswer::CountZero;
        }
        span(&vals).map_or(IntervalAnswer::Null, |(lo, hi)| IntervalAnswer::Interval { glb: lo, lub: hi, exact: true })
    }

    /// Consistent answer of a grouped analytic query: groups present in
    /// every repair, with the range of their aggregate values.
    pub fn grouped(&self, aq: &AnalyticQuery) -> BTreeMap<Tuple, (Value, Value)> {
        let per = self.analytic_per_repair(aq);
        let mut out = BTreeMap::new();
        let Some(first) = per.first() else { return out };
        for k in first.keys() {
            let vals: Option<Vec<Value>> = per.iter().map(|m| m.get(k).cloned()).collect();
            if let Some((lo, hi)) = vals.as_deref().and_then(span) {
                out.insert(k.clone(), (lo, hi));
            }
        }
        out
    }
}

fn order(a: &Value, b: &Value) -> Ordering {
    a.compare(b).unwrap_or_else(|| a.cmp(b))
}

fn span(vals: &[Value]) -> Option<(Value, Value)> {
    let lo = vals.iter().min_by(|a, b| order(a, b))?.clone();
    let hi = vals.iter().max_by(|a, b| order(a, b))?.clone();
    Some((lo, hi))
}

fn aggregate(rows: &[&Tuple], agg: &Aggregate) -> Option<Value> {
    let vals: Vec<Value> = agg.measure.map_or_else(Vec::new, |m| rows.iter().filter_map(|r| r.get(m).cloned()).collect());
    match agg.op {
        AggOp::Count if agg.distinct => Some(Value::Int(vals.iter().collect::<BTreeSet<_>>().len() as i64)),
        AggOp::Count if agg.measure.is_none() => Some(Value::Int(rows.len() as i64)),
        AggOp::Count => Some(Value::Int(vals.len() as i64)),
        AggOp::Min => vals.iter().min_by(|a, b| order(a, b)).cloned(),
        AggOp::Max => vals.iter().max_by(|a, b| order(a, b)).cloned(),
        AggOp::Sum => {
            let mut it = vals.into_iter();
            let first = it.next()?;
            Some(it.fold(first, |acc, v| acc.add(&v).expect("numeric measure")))
        }
    }
}

fn compare_with(op: &CmpOp, l: &Value, r: &Value) -> bool {
    match l.compare(r) {
        None => *op == CmpOp::Ne,
        Some(o) => match op {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Ge => o != Ordering::Less,
        },
    }
}

/// Evaluates a condition on a tuple that defines all its attributes.
pub fn holds(g: &Condition, t: &Tuple) -> bool {
    match g {
        Condition::Atom(atom) => {
            let l = t.get(atom.left).expect("condition attribute defined");
            let r = match &atom.right {
                Operand::Attr(b) => t.get(*b).expect("condition attribute defined"),
                Operand::Const(v) => v,
            };
            compare_with(&atom.op, l, r)
        }
        Condition::Not(c) => !holds(c, t),
        Condition::And(a, b) => holds(a, t) && holds(b, t),
        Condition::Or(a, b) => holds(a, t) || holds(b, t),
    }
}

fn condition_attrs(g: &Condition) -> BTreeSet<AttrId> {
    match g {
        Condition::Atom(atom) => {
            let mut s = BTreeSet::from([atom.left]);
            if let Operand::Attr(b) = atom.right {
                s.insert(b);
            }
            s
        }
        Condition::Not(c) => condition_attrs(c),
        Condition::And(a, b) | Condition::Or(a, b) => {
            let mut s = condition_attrs(a);
            s.extend(condition_attrs(b));
            s
        }
    }
}
