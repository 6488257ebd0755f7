//! Consistent query answering over star-schema warehouses that contain
//! missing values and functional-dependency violations.
//!
//! The pipeline is:
//!
//! 1. [`model`]: declare a [`StarSchemaDef`], load rows into a
//!    [`Warehouse`] and validate it.
//! 2. [`chase`]: build the chased m-table ([`m_chase_star`]), which encodes
//!    which tuples are true, conflicting or consistent.
//! 3. [`classify`]: read tuple statuses off the chase.
//! 4. [`query`] and [`analytics`]: answer projection-selection and
//!    aggregate queries with certified answers or sound bounds.
//! 5. [`repairs`] and [`oracle`]: enumerate repairs and recompute answers
//!    by brute force, for verification at small scale.
//!
//! The crate is `no_std` and only needs `alloc`.
//!
//! ```
//! use cqa_core::{m_chase_star, AttrDef, DimensionDef, StarSchemaDef, Tuple, Value, ValueType, Warehouse};
//!
//! let schema = StarSchemaDef::new(
//!     vec![DimensionDef {
//!         name: "D1".into(),
//!         key: AttrDef::new("K1", ValueType::Text),
//!         non_keys: vec![AttrDef::new("A1", ValueType::Text)],
//!     }],
//!     vec![AttrDef::new("M1", ValueType::Int)],
//!     true,
//! )?;
//! let u = schema.universe().clone();
//! let dim = vec![
//!     Tuple::from_named(&u, &[("K1", "k".into()), ("A1", "a".into())])?,
//!     Tuple::from_named(&u, &[("K1", "k".into()), ("A1", "b".into())])?,
//! ];
//! let fact = vec![Tuple::from_named(&u, &[("K1", "k".into()), ("M1", Value::Int(3))])?];
//! let w = Warehouse::new_validated(schema, vec![dim], fact)?;
//! let chase = m_chase_star(&w)?;
//! assert_eq!(chase.m_tuples().len(), 1);
//! assert_eq!(chase.stats().delta, 2);
//! # Ok::<(), cqa_core::Error>(())
//! ```

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod analytics;
pub mod chase;
pub mod classify;
pub mod error;
pub mod model;
pub mod oracle;
pub mod query;
pub mod repairs;
pub mod synth;
pub mod value;

pub use analytics::{
    compute_aggregate, cons_answer_groupby, cons_answer_having, cons_answer_no_groupby, count_distinct_bounds,
    count_distinct_bounds_grouped, sigma_sets, AggOp, Aggregate, AnalyticQuery, GroupedAnswer, HavingConjunct,
    IntervalAnswer, ScanAccumulator, SigmaSets,
};
pub use chase::{
    chase_equivalence_check, m_chase_generic, m_chase_generic_warehouse, m_chase_star, m_chase_star_traced,
    ChaseResult, ChaseStats, StarChaseTrace, TableContext,
};
pub use classify::{
    classify, confl_all, confl_min, cons_all, cons_maximal_tuples, cons_tuples_over, true_all, true_tuples_over,
    TupleStatus, DEFAULT_ENUMERATION_CAP,
};
pub use error::{Error, Result};
pub use model::{
    build_star_table, validate_warehouse, AttrDef, AttrId, AttrInfo, DimensionDef, Fd, MTuple, Role, StarLayout,
    StarSchemaDef, StarTable, TableRef, Tuple, Universe, Violation, ViolationKind, Warehouse,
};
pub use oracle::{
    answer_in_repair_analytic, answer_in_repair_standard, engine_agrees, oracle_consistent_answer, CombinedAnswer,
    Oracle, OracleReport, Query, RepairAnswer,
};
pub use query::{
    consistent_answer_bounds, consistent_answer_key_projection, consistent_answer_standard, decompose_independent,
    eval_condition, sat_per_attribute, Atom, BoundedAnswer, CmpOp, Condition, IndependentCondition, Operand, SatSets,
    StandardQuery,
};
pub use repairs::{
    build_repair, enumerate_choice_functions, enumerate_repairs, verify_repair, ChoiceFunction, ChoicePoint, Repair,
    RepairSpace, DEFAULT_REPAIR_LIMIT,
};
pub use value::{Value, ValueSet, ValueType};
