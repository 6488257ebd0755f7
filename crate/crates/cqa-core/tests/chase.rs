mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::{fig1_text, mtup};
use cqa_core::synth::{random_warehouse, SynthParams};
use cqa_core::{
    chase_equivalence_check, m_chase_generic_warehouse, m_chase_star, m_chase_star_traced, MTuple, Value,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set(ms: &[MTuple]) -> BTreeSet<MTuple> {
    ms.iter().cloned().collect()
}

#[test]
fn running_example_chase_matches_both_algorithms() {
    let start = Instant::now();
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let expected: BTreeSet<MTuple> = [
        "K1=k1 K2=k2 A1_1=a1|a1' A1_2=a2 A2_1=b1 A2_2=b2 M1=m1",
        "K1=k1 K2=k2' A1_1=a1|a1' A1_2=a2 A2_1=b1 M1=m1'|m1''",
        "K1=k1' K2=k2'' A1_1=a1 M1=m1",
        "K1=k1'' A1_1=a1' A1_2=a2'",
    ]
    .iter()
    .map(|s| mtup(&u, s))
    .collect();

    let star = m_chase_star(&w).unwrap();
    let generic = m_chase_generic_warehouse(&w).unwrap();
    assert_eq!(set(star.m_tuples()), expected);
    assert_eq!(set(generic.m_tuples()), expected);
    assert_eq!(star.stats().m_tuple_count, 4);
    assert_eq!(star.stats().delta, 2);
    assert_eq!(star.stats().warehouse_size, 10);
    assert_eq!(star.fact_anchored().len(), 3);
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn running_example_intermediate_tables() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let (_, trace) = m_chase_star_traced(&w).unwrap();
    let d1: BTreeSet<MTuple> =
        ["K1=k1 A1_1=a1|a1' A1_2=a2", "K1=k1' A1_1=a1", "K1=k1'' A1_1=a1' A1_2=a2'"].iter().map(|s| mtup(&u, s)).collect();
    let d2: BTreeSet<MTuple> = ["K2=k2 A2_1=b1 A2_2=b2", "K2=k2' A2_1=b1"].iter().map(|s| mtup(&u, s)).collect();
    let f0: BTreeSet<MTuple> = ["K1=k1 K2=k2 M1=m1", "K1=k1 K2=k2' M1=m1'|m1''", "K1=k1' K2=k2'' M1=m1"]
        .iter()
        .map(|s| mtup(&u, s))
        .collect();
    assert_eq!(trace.dim_groups.len(), 2);
    assert_eq!(set(&trace.dim_groups[0]), d1);
    assert_eq!(set(&trace.dim_groups[1]), d2);
    assert_eq!(set(&trace.fact_groups), f0);
}

#[test]
fn key_indexes_point_at_the_right_m_tuples() {
    let w = fig1_text();
    let u = w.schema().universe().clone();
    let chase = m_chase_star(&w).unwrap();
    let k = common::tup(&u, "K1=k1 K2=k2'");
    let hits = chase.by_k(&k);
    assert_eq!(hits.len(), 1);
    assert_eq!(chase.m_tuples()[hits[0]].get(u.resolve("M1").unwrap()).unwrap().len(), 2);
    assert_eq!(chase.by_ki(0, &Value::text("k1")).len(), 2);
    assert_eq!(chase.dim_orphans()[0].len(), 1);
    assert!(chase.dim_orphans()[1].is_empty());
}

#[test]
fn random_warehouses_both_algorithms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for measure_fds in [true, false] {
        let p = SynthParams { dims: 3, max_rows: 8, measures: 2, measure_fds, ..SynthParams::default() };
        for _ in 0..200 {
            let w = random_warehouse(&mut rng, &p).unwrap();
            assert!(chase_equivalence_check(&w), "algorithms disagree on {w:?}");
        }
    }
}

#[test]
fn chase_output_satisfies_structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = SynthParams { dims: 2, max_rows: 8, measures: 2, ..SynthParams::default() };
    for _ in 0..200 {
        let w = random_warehouse(&mut rng, &p).unwrap();
        let chase = m_chase_star(&w).unwrap();
        let ms = chase.m_tuples();
        // No m-tuple is subsumed by another.
        for (i, a) in ms.iter().enumerate() {
            for (j, b) in ms.iter().enumerate() {
                assert!(i == j || !a.is_subsumed_by(b), "{a:?} ⊑ {b:?}");
            }
        }
        // Keys are single-valued, and each key combination appears once.
        let layout = w.schema().layout();
        for sigma in ms {
            for k in &layout.keys {
                assert!(sigma.get(*k).map_or(true, |s| s.len() == 1));
            }
        }
        let anchored: BTreeSet<_> = chase.fact_anchored().iter().map(|i| ms[*i].project(&layout.keys)).collect();
        assert_eq!(anchored.len(), chase.fact_anchored().len());
        // Every source row is contained in some m-tuple.
        for row in w.dim_tables().iter().flatten().chain(w.fact_table()) {
            assert!(ms.iter().any(|s| s.contains_tuple(row)), "row {row:?} lost");
        }
    }
}
