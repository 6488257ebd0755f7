//! Random valid warehouses for property tests and scaling runs.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::model::{AttrDef, DimensionDef, StarSchemaDef, Tuple, Warehouse};
use crate::value::{Value, ValueType};

/// Shape of a random warehouse. Small pools make key collisions, and hence
/// dependency violations, frequent.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Number of dimensions (at least 1).
    pub dims: usize,
    /// Maximum non-key attributes per dimension (at least 1).
    pub max_non_keys: usize,
    /// Number of measures (at least 1).
    pub measures: usize,
    /// Maximum rows per table.
    pub max_rows: usize,
    /// Distinct key values per dimension.
    pub key_pool: usize,
    /// Distinct non-key and measure values.
    pub value_pool: i64,
    /// Probability that an optional cell is left empty.
    pub missing_rate: f64,
    /// Whether measures may be negative.
    pub negative_measures: bool,
    /// Whether `𝕂 → Mₗ` dependencies hold.
    pub measure_fds: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            dims: 2,
            max_non_keys: 2,
            measures: 1,
            max_rows: 6,
            key_pool: 3,
            value_pool: 3,
            missing_rate: 0.15,
            negative_measures: false,
            measure_fds: true,
        }
    }
}

/// Schema with dimensions `D1..Dn` (key `Ki`, non-keys `Ai_j`, integer
/// valued) and integer measures `M1..Mp`.
pub fn synth_schema(dims: usize, non_keys: &[usize], measures: usize, measure_fds: bool) -> Result<StarSchemaDef> {
    let dimensions = (1..=dims)
        .map(|i| DimensionDef {
            name: format!("D{i}"),
            key: AttrDef::new(&format!("K{i}"), ValueType::Text),
            non_keys: (1..=non_keys[i - 1]).map(|j| AttrDef::new(&format!("A{i}_{j}"), ValueType::Int)).collect(),
        })
        .collect();
    let ms = (1..=measures).map(|l| AttrDef::new(&format!("M{l}"), ValueType::Int)).collect();
    StarSchemaDef::new(dimensions, ms, measure_fds)
}

fn key_value(dim: usize, n: usize) -> Value {
    Value::Text(format!("k{dim}_{n}"))
}

/// Binds a random subset of `attrs`, keeping at least one.
fn some_of<R: Rng>(rng: &mut R, attrs: &[(crate::model::AttrId, Value)], missing: f64) -> Vec<(crate::model::AttrId, Value)> {
    let mut out: Vec<_> = attrs.iter().filter(|_| !rng.gen_bool(missing)).cloned().collect();
    if out.is_empty() {
        out.push(attrs[rng.gen_range(0..attrs.len())].clone());
    }
    out
}

/// A random warehouse satisfying both missing-value restrictions.
pub fn random_warehouse<R: Rng>(rng: &mut R, p: &SynthParams) -> Result<Warehouse> {
    let non_keys: Vec<usize> = (0..p.dims).map(|_| rng.gen_range(1..=p.max_non_keys.max(1))).collect();
    let schema = synth_schema(p.dims.max(1), &non_keys, p.measures.max(1), p.measure_fds)?;
    let layout = schema.layout().clone();
    let lo = if p.negative_measures { -p.value_pool } else { 0 };
    let mut dim_tables = Vec::new();
    for (i, nk) in layout.non_keys.iter().enumerate() {
        let rows = rng.gen_range(1..=p.max_rows.max(1));
        let mut table = Vec::new();
        for _ in 0..rows {
            let k = key_value(i + 1, rng.gen_range(0..p.key_pool.max(1)));
            let vals: Vec<_> = nk.iter().map(|a| (*a, Value::Int(rng.gen_range(0..p.value_pool.max(1))))).collect();
            let mut pairs = some_of(rng, &vals, p.missing_rate);
            pairs.push((layout.keys[i], k));
            table.push(Tuple::from_pairs(pairs));
        }
        dim_tables.push(table);
    }
    let rows = rng.gen_range(1..=p.max_rows.max(1));
    let mut fact = Vec::new();
    for _ in 0..rows {
        let mut pairs: Vec<_> = layout
            .keys
            .iter()
            .enumerate()
            .map(|(i, k)| (*k, key_value(i + 1, rng.gen_range(0..p.key_pool.max(1)))))
            .collect();
        let ms: Vec<_> =
            layout.measures.iter().map(|m| (*m, Value::Int(rng.gen_range(lo..=p.value_pool.max(1))))).collect();
        pairs.extend(some_of(rng, &ms, p.missing_rate));
        fact.push(Tuple::from_pairs(pairs));
    }
    Warehouse::new_validated(schema, dim_tables, fact)
}

/// A large warehouse for scaling runs: three dimensions with two non-keys
/// each, two measures, `fact_rows` fact rows with distinct key
/// combinations. About `violation_rate` of dimension keys and fact rows get
/// a conflicting duplicate, and about `missing_rate` of optional cells are
/// left empty.
pub fn scaling_warehouse<R: Rng>(rng: &mut R, fact_rows: usize, violation_rate: f64, missing_rate: f64) -> Result<Warehouse> {
    let schema = synth_schema(3, &[2, 2, 2], 2, true)?;
    let layout = schema.layout().clone();
    let radix = [(fact_rows / 100).max(1), 10, 10];
    let mut dim_tables = Vec::new();
    for (i, nk) in layout.non_keys.iter().enumerate() {
        let mut table = Vec::with_capacity(radix[i] * 2);
        for n in 0..radix[i] {
            let copies = if rng.gen_bool(violation_rate) { 2 } else { 1 };
            for _ in 0..copies {
                let vals: Vec<_> = nk.iter().map(|a| (*a, Value::Int(rng.gen_range(0..1000)))).collect();
                let mut pairs = some_of(rng, &vals, missing_rate);
                pairs.push((layout.keys[i], key_value(i + 1, n)));
                table.push(Tuple::from_pairs(pairs));
            }
        }
        dim_tables.push(table);
    }
    let mut fact = Vec::with_capacity(fact_rows + fact_rows / 8);
    for r in 0..fact_rows {
        let digits = [r % radix[0], (r / radix[0]) % radix[1], (r / (radix[0] * radix[1])) % radix[2]];
        let copies = if rng.gen_bool(violation_rate) { 2 } else { 1 };
        for _ in 0..copies {
            let mut pairs: Vec<_> = layout.keys.iter().zip(digits).enumerate().map(|(i, (k, d))| (*k, key_value(i + 1, d))).collect();
            let ms: Vec<_> = layout.measures.iter().map(|m| (*m, Value::Int(rng.gen_range(0..10_000)))).collect();
            pairs.extend(some_of(rng, &ms, missing_rate));
            fact.push(Tuple::from_pairs(pairs));
        }
    }
    Warehouse::new_validated(schema, dim_tables, fact)
}
