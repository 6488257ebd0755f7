mod common;

use std::collections::BTreeSet;

use common::gen::{attr_condition, independent_condition, standard_query};
use common::{fig1_text, tup, tups, BruteForce};
use cqa_core::synth::{random_warehouse, SynthParams};
use cqa_core::{
    consistent_answer_bounds, consistent_answer_key_projection, consistent_answer_standard, decompose_independent,
    eval_condition, m_chase_star, sat_per_attribute, CmpOp, CombinedAnswer, Condition, Error, Oracle, Query,
    StandardQuery, Tuple, Universe, Value, ValueSet, DEFAULT_ENUMERATION_CAP, DEFAULT_REPAIR_LIMIT,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn attrs(u: &Universe, names: &[&str]) -> Vec<cqa_core::AttrId> {
    names.iter().map(|n| u.resolve(n).unwrap()).collect()
}

fn a1_is(u: &Universe, v: &str) -> Condition {
    Condition::cmp(u.resolve("A1_1").unwrap(), CmpOp::Eq, Value::text(v))
}

fn oracle_tuples(chase: &cqa_core::ChaseResult, q: &StandardQuery) -> BTreeSet<Tuple> {
    let oracle = Oracle::new(chase, DEFAULT_REPAIR_LIMIT, DEFAULT_ENUMERATION_CAP).unwrap();
    match oracle.answer(&Query::Standard(q.clone())).unwrap().combined {
        CombinedAnswer::Tuples(t) => t,
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn selection_on_a_conflicting_attribute() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let q1 = StandardQuery::new(attrs(&u, &["K1", "K2", "M1"]), Some(a1_is(&u, "a1")));
    let expected = tups(&u, &["K1=k1' K2=k2'' M1=m1"]);
    assert_eq!(consistent_answer_standard(&chase, &q1).unwrap(), expected);
    assert_eq!(consistent_answer_key_projection(&chase, &q1).unwrap(), expected);
    let b = consistent_answer_bounds(&chase, &q1).unwrap();
    assert_eq!(b.lower, expected);
    assert_eq!(b.upper, tups(&u, &["K1=k1 K2=k2 M1=m1", "K1=k1' K2=k2'' M1=m1"]));
    assert_eq!(oracle_tuples(&chase, &q1), expected);
}

#[test]
fn disjunction_over_one_attribute() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let g = a1_is(&u, "a1").or(a1_is(&u, "a1'"));
    let q2 = StandardQuery::new(attrs(&u, &["K1", "K2", "A2_1", "M1"]), Some(g));
    let expected = tups(&u, &["K1=k1 K2=k2 A2_1=b1 M1=m1"]);
    assert_eq!(consistent_answer_standard(&chase, &q2).unwrap(), expected);
    assert_eq!(consistent_answer_key_projection(&chase, &q2).unwrap(), expected);
    let b = consistent_answer_bounds(&chase, &q2).unwrap();
    assert!(b.lower.is_empty());
    assert_eq!(b.upper, expected);
    assert_eq!(oracle_tuples(&chase, &q2), expected);
}

#[test]
fn non_independent_condition_gets_bounds_only() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let m1 = u.resolve("M1").unwrap();
    let g = a1_is(&u, "a1")
        .and(Condition::cmp(m1, CmpOp::Eq, Value::text("m1")))
        .or(a1_is(&u, "a1'").and(Condition::cmp(m1, CmpOp::Eq, Value::text("m1''"))));
    let q3 = StandardQuery::new(attrs(&u, &["K1", "K2", "A1_2"]), Some(g));
    assert!(matches!(decompose_independent(q3.condition.as_ref().unwrap(), &u), Err(Error::NotIndependent(_))));
    assert!(matches!(consistent_answer_standard(&chase, &q3), Err(Error::NotIndependent(_))));
    let truth = oracle_tuples(&chase, &q3);
    assert!(truth.is_empty());
    let b = consistent_answer_bounds(&chase, &q3).unwrap();
    assert!(b.lower.is_subset(&truth) && truth.is_subset(&b.upper));
    assert_eq!(b.upper, tups(&u, &["K1=k1 K2=k2 A1_2=a2", "K1=k1 K2=k2' A1_2=a2"]));
}

#[test]
fn consistent_rows_pick_up_the_chosen_dimension_values() {
    // Without K2 in the query, k1's measures m1' and m1'' are consistent
    // and join with whichever A1_1 value a repair picks for k1.
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let g = a1_is(&u, "a1").or(a1_is(&u, "a1'"));
    let q = StandardQuery::new(attrs(&u, &["K1", "M1"]), Some(g));
    let expected = tups(&u, &["K1=k1 M1=m1", "K1=k1 M1=m1'", "K1=k1 M1=m1''", "K1=k1' M1=m1"]);
    assert_eq!(consistent_answer_standard(&chase, &q).unwrap(), expected);
    assert_eq!(oracle_tuples(&chase, &q), expected);
    assert_eq!(BruteForce::new(&w, 16).unwrap().standard(&q), expected);
}

#[test]
fn no_condition_means_consistent_projections() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let q = StandardQuery::new(attrs(&u, &["K1", "A1_1"]), None);
    assert_eq!(consistent_answer_standard(&chase, &q).unwrap(), tups(&u, &["K1=k1' A1_1=a1", "K1=k1'' A1_1=a1'"]));
}

#[test]
fn sat_sets_over_active_domains() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let a = u.resolve("A1_1").unwrap();
    let both = a1_is(&u, "a1").or(a1_is(&u, "a1'"));
    let set = |vs: &[&str]| ValueSet::from_values(vs.iter().map(|v| Value::text(v)));
    assert_eq!(sat_per_attribute(&both, a, &chase), set(&["a1", "a1'"]));
    assert_eq!(sat_per_attribute(&a1_is(&u, "a1").negate(), a, &chase), set(&["a1'"]));
    assert_eq!(sat_per_attribute(&Condition::cmp(a, CmpOp::Gt, Value::text("a1")), a, &chase), set(&["a1'"]));
    assert_eq!(sat_per_attribute(&a1_is(&u, "zz"), a, &chase), set(&[]));
    // Comparing text with a number never holds, except for `<>`.
    assert_eq!(sat_per_attribute(&Condition::cmp(a, CmpOp::Ne, Value::Int(3)), a, &chase), set(&["a1", "a1'"]));
    assert_eq!(sat_per_attribute(&Condition::cmp(a, CmpOp::Lt, Value::Int(3)), a, &chase), set(&[]));
}

#[test]
fn decomposition_distributes_over_disjunction() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let (a, b) = (u.resolve("A1_1").unwrap(), u.resolve("A2_1").unwrap());
    // (A1_1 = a1 and A2_1 = b1) or (A1_1 = a1 and A2_1 = b2) is independent.
    let g = Condition::cmp(a, CmpOp::Eq, Value::text("a1"))
        .and(Condition::cmp(b, CmpOp::Eq, Value::text("b1")))
        .or(Condition::cmp(a, CmpOp::Eq, Value::text("a1")).and(Condition::cmp(b, CmpOp::Eq, Value::text("b2"))));
    let ic = decompose_independent(&g, &u).unwrap();
    assert_eq!(ic.schema(), vec![a, b]);
}

#[test]
fn key_projection_matches_general_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = SynthParams { dims: 3, max_rows: 8, measures: 2, ..SynthParams::default() };
    for _ in 0..300 {
        let w = random_warehouse(&mut rng, &p).unwrap();
        let chase = m_chase_star(&w).unwrap();
        let mut q = standard_query(&mut rng, &w);
        q.projection.extend(w.schema().layout().keys.iter().copied());
        q.condition = if rand::Rng::gen_bool(&mut rng, 0.8) { Some(independent_condition(&mut rng, &w)) } else { None };
        assert_eq!(
            consistent_answer_key_projection(&chase, &q).unwrap(),
            consistent_answer_standard(&chase, &q).unwrap(),
            "{q:?} on {w:?}"
        );
    }
}

#[test]
fn standard_answers_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for measure_fds in [true, false] {
        let p = SynthParams { dims: 2, max_rows: 6, measures: 2, measure_fds, ..SynthParams::default() };
        let mut checked = 0;
        while checked < 150 {
            let w = random_warehouse(&mut rng, &p).unwrap();
            let Some(bf) = BruteForce::new(&w, 128) else { continue };
            checked += 1;
            let chase = m_chase_star(&w).unwrap();
            let oracle = Oracle::new(&chase, DEFAULT_REPAIR_LIMIT, DEFAULT_ENUMERATION_CAP).unwrap();
            for _ in 0..4 {
                let q = standard_query(&mut rng, &w);
                let truth = bf.standard(&q);
                let report = oracle.answer_checked(&Query::Standard(q.clone())).unwrap();
                assert_eq!(report.combined, CombinedAnswer::Tuples(truth.clone()), "oracle: {q:?} on {w:?}");
                assert_eq!(report.agrees_with_engine, Some(true), "engine: {q:?} on {w:?}");
                let b = consistent_answer_bounds(&chase, &q).unwrap();
                assert!(b.lower.is_subset(&truth) && truth.is_subset(&b.upper), "bounds: {q:?} on {w:?}");
                match consistent_answer_standard(&chase, &q) {
                    Ok(ans) => assert_eq!(ans, truth, "exact: {q:?} on {w:?}"),
                    Err(Error::NotIndependent(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// A decomposed condition holds on a tuple iff every per-attribute part
    /// holds on that tuple's value.
    #[test]
    fn decomposition_is_equivalent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = SynthParams { dims: 2, max_rows: 4, ..SynthParams::default() };
        let w = random_warehouse(&mut rng, &p).unwrap();
        let u = w.schema().universe().clone();
        let ids: Vec<_> = u.ids().collect();
        let g = match rand::Rng::gen_range(&mut rng, 0..3) {
            0 => independent_condition(&mut rng, &w),
            1 => attr_condition(&mut rng, &w, ids[0]).or(attr_condition(&mut rng, &w, ids[0])),
            _ => common::gen::dependent_condition(&mut rng, &w),
        };
        let Ok(ic) = decompose_independent(&g, &u) else { return Ok(()) };
        let schema = g.schema();
        // Absorption may drop attributes the condition does not constrain.
        prop_assert!(ic.schema().iter().all(|a| schema.contains(a)));
        // Every combination of domain values (plus one outside value).
        let adoms = w.active_domains();
        let mut rows = vec![Tuple::empty()];
        for a in &schema {
            let mut vals: Vec<Value> = adoms[a.index()].iter().cloned().collect();
            vals.push(Value::Int(-7));
            rows = rows.iter().flat_map(|t| vals.iter().map(move |v| t.with(*a, v.clone()))).collect();
        }
        for t in rows {
            let whole = eval_condition(&g, &t).unwrap();
            let parts = ic.per_attr.iter().all(|(a, c)| eval_condition(c, &t.project(&[*a])).unwrap());
            prop_assert_eq!(whole, parts, "{:?} on {:?}", g, t);
        }
    }
}

#[test]
fn tuple_helper_round_trip() {
    let u = fig1_text().schema().universe().clone();
    assert_eq!(tup(&u, "K1=k1 M1=3").get(u.resolve("M1").unwrap()), Some(&Value::Int(3)));
}
