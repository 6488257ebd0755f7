//! Random queries over a warehouse, drawing constants mostly from the
//! active domains so that conditions select something.

use cqa_core::{
    AggOp, Aggregate, AnalyticQuery, Atom, AttrId, CmpOp, Condition, HavingConjunct, Operand, Role, StandardQuery,
    Value, ValueType, Warehouse,
};
use rand::seq::SliceRandom;
use rand::Rng;

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
const ORDER_OPS: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

fn attrs(w: &Warehouse) -> Vec<AttrId> {
    w.schema().universe().ids().collect()
}

fn constant<R: Rng>(rng: &mut R, w: &Warehouse, a: AttrId) -> Value {
    let adom = &w.active_domains()[a.index()];
    if !adom.is_empty() && rng.gen_bool(0.85) {
        return adom.as_slice().choose(rng).unwrap().clone();
    }
    match w.schema().universe().info(a).ty {
        ValueType::Text => Value::text("zz"),
        _ => Value::Int(rng.gen_range(-2..=5)),
    }
}

fn atom<R: Rng>(rng: &mut R, w: &Warehouse, a: AttrId) -> Condition {
    let op = *OPS.choose(rng).unwrap();
    Condition::cmp(a, op, constant(rng, w, a))
}

/// A condition over the single attribute `a`.
pub fn attr_condition<R: Rng>(rng: &mut R, w: &Warehouse, a: AttrId) -> Condition {
    let mut c = atom(rng, w, a);
    if rng.gen_bool(0.4) {
        let d = atom(rng, w, a);
        c = if rng.gen_bool(0.5) { c.or(d) } else { c.and(d) };
    }
    if rng.gen_bool(0.15) {
        c = c.negate();
    }
    c
}

/// A conjunction of one or two single-attribute conditions.
pub fn independent_condition<R: Rng>(rng: &mut R, w: &Warehouse) -> Condition {
    let mut all = attrs(w);
    all.shuffle(rng);
    let n = rng.gen_range(1..=2.min(all.len()));
    let mut c = attr_condition(rng, w, all[0]);
    for a in &all[1..n] {
        c = c.and(attr_condition(rng, w, *a));
    }
    c
}

/// A condition that ties two attributes together (a disjunction across
/// attributes, or an attribute-to-attribute comparison).
pub fn dependent_condition<R: Rng>(rng: &mut R, w: &Warehouse) -> Condition {
    let mut all = attrs(w);
    all.shuffle(rng);
    let (a, b) = (all[0], all[1]);
    let u = w.schema().universe();
    if u.info(a).ty == u.info(b).ty && rng.gen_bool(0.3) {
        return Condition::Atom(Atom { left: a, op: *OPS.choose(rng).unwrap(), right: Operand::Attr(b) });
    }
    let c = atom(rng, w, a).or(atom(rng, w, b));
    if rng.gen_bool(0.5) {
        c.and(attr_condition(rng, w, all[2 % all.len()]))
    } else {
        c
    }
}

/// A random projection-selection query.
pub fn standard_query<R: Rng>(rng: &mut R, w: &Warehouse) -> StandardQuery {
    let mut all = attrs(w);
    all.shuffle(rng);
    let mut x: Vec<AttrId> = all[..rng.gen_range(1..=3.min(all.len()))].to_vec();
    if rng.gen_bool(0.3) {
        x.extend(w.schema().layout().keys.iter().copied());
    }
    x.sort();
    x.dedup();
    let condition = match rng.gen_range(0..10) {
        0..=1 => None,
        2..=6 => Some(independent_condition(rng, w)),
        _ => Some(dependent_condition(rng, w)),
    };
    StandardQuery::new(x, condition)
}

fn aggregate<R: Rng>(rng: &mut R, w: &Warehouse) -> Aggregate {
    let m = *w.schema().layout().measures.choose(rng).unwrap();
    match rng.gen_range(0..20) {
        0..=1 => Aggregate::count_star(),
        2..=4 => Aggregate::count_distinct(m),
        _ => Aggregate::new(*[AggOp::Min, AggOp::Max, AggOp::Count, AggOp::Sum].choose(rng).unwrap(), m),
    }
}

/// A random aggregate query with an independent (or no) condition,
/// optionally grouped and with a having clause.
pub fn analytic_query<R: Rng>(rng: &mut R, w: &Warehouse) -> AnalyticQuery {
    let u = w.schema().universe();
    let condition = if rng.gen_bool(0.3) { None } else { Some(independent_condition(rng, w)) };
    let agg = aggregate(rng, w);
    if rng.gen_bool(0.5) {
        return AnalyticQuery::scalar(agg, condition);
    }
    let candidates: Vec<AttrId> = attrs(w).into_iter().filter(|a| u.info(*a).role != Role::Measure || rng.gen_bool(0.2)).collect();
    let g = *candidates.choose(rng).unwrap();
    let mut q = AnalyticQuery::grouped(vec![g], agg, condition);
    if !q.aggregate.distinct && rng.gen_bool(0.3) {
        let m = *w.schema().layout().measures.choose(rng).unwrap();
        let op = *[AggOp::Min, AggOp::Max, AggOp::Count, AggOp::Sum].choose(rng).unwrap();
        let agg = if op == AggOp::Count && rng.gen_bool(0.3) { Aggregate::count_star() } else { Aggregate::new(op, m) };
        let n = rng.gen_range(1..=2);
        let atoms = (0..n).map(|_| (*ORDER_OPS.choose(rng).unwrap(), Value::Int(rng.gen_range(-1..=6)))).collect();
        q.having.push(HavingConjunct { aggregate: agg, atoms });
    }
    q
}
