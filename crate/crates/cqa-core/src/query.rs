//! Selection conditions, the independence test, and consistent answers to
//! projection-selection queries.
//!
//! A condition is *independent* when its conjunctive normal form has only
//! single-attribute clauses; it then factors as `Γ(A₁) ∧ … ∧ Γ(A_k)` and its
//! satisfying tuples are the cross product of per-attribute `Sat` sets,
//! computed over active domains. Exact consistent answers are offered for
//! independent conditions; any condition gets a lower and an upper bound.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::chase::ChaseResult;
use crate::classify::{cons_tuples_over, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::model::{schema_of, AttrId, MTuple, Tuple, Universe};
use crate::value::{Value, ValueSet, ValueType};

/// Maximum number of clauses produced by the conversion to conjunctive
/// normal form.
pub const CNF_CLAUSE_CAP: usize = 256;

/// Comparison operator `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    /// `=`
    Eq,
    /// `<>`
    Ne,
    /// `<`
    Lt,
    /// `<=`
    Le,
    /// `>`
    Gt,
    /// `>=`
    Ge,
}

impl CmpOp {
    /// SQL spelling.
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Whether `ord` (left compared to right) satisfies the operator.
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }

    /// Compares two values; incomparable values (text against a number)
    /// satisfy only `<>`.
    pub fn eval(self, left: &Value, right: &Value) -> bool {
        match left.compare(right) {
            Some(ord) => self.holds(ord),
            None => self == CmpOp::Ne,
        }
    }
}

/// Right-hand side of an atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Operand {
    /// Another attribute.
    Attr(AttrId),
    /// A constant.
    Const(Value),
}

/// An atom `A θ c` or `A θ A′`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Atom {
    /// Left attribute.
    pub left: AttrId,
    /// Operator.
    pub op: CmpOp,
    /// Right operand.
    pub right: Operand,
}

impl Atom {
    /// `A θ c`.
    pub fn constant(left: AttrId, op: CmpOp, value: Value) -> Self {
        Atom { left, op, right: Operand::Const(value) }
    }

    /// Attributes mentioned by the atom.
    pub fn attrs(&self) -> Vec<AttrId> {
        match self.right {
            Operand::Attr(b) => schema_of([self.left, b]),
            Operand::Const(_) => alloc::vec![self.left],
        }
    }

    fn eval(&self, t: &Tuple, u: Option<&Universe>) -> Result<bool> {
        let missing = |a: AttrId| {
            Error::AttributeNotDefined(match u {
                Some(u) => String::from(u.name(a)),
                None => format!("#{}", a.0),
            })
        };
        let l = t.get(self.left).ok_or_else(|| missing(self.left))?;
        let r = match &self.right {
            Operand::Attr(b) => t.get(*b).ok_or_else(|| missing(*b))?,
            Operand::Const(c) => c,
        };
        Ok(self.op.eval(l, r))
    }
}

/// A selection condition: atoms combined with `NOT`, `AND`, `OR`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    /// A comparison.
    Atom(Atom),
    /// Negation.
    Not(Box<Condition>),
    /// Conjunction.
    And(Box<Condition>, Box<Condition>),
    /// Disjunction.
    Or(Box<Condition>, Box<Condition>),
}

impl Condition {
    /// `A θ c`.
    pub fn cmp(a: AttrId, op: CmpOp, value: impl Into<Value>) -> Self {
        Condition::Atom(Atom::constant(a, op, value.into()))
    }

    /// `self AND other`.
    pub fn and(self, other: Condition) -> Self {
        Condition::And(Box::new(self), Box::new(other))
    }

    /// `self OR other`.
    pub fn or(self, other: Condition) -> Self {
        Condition::Or(Box::new(self), Box::new(other))
    }

    /// `NOT self`.
    pub fn negate(self) -> Self {
        Condition::Not(Box::new(self))
    }

    /// `sch(Γ)`: the attributes mentioned, sorted.
    pub fn schema(&self) -> Vec<AttrId> {
        let mut out = Vec::new();
        self.collect_attrs(&mut out);
        schema_of(out)
    }

    fn collect_attrs(&self, out: &mut Vec<AttrId>) {
        match self {
            Condition::Atom(a) => out.extend(a.attrs()),
            Condition::Not(c) => c.collect_attrs(out),
            Condition::And(l, r) | Condition::Or(l, r) => {
                l.collect_attrs(out);
                r.collect_attrs(out);
            }
        }
    }

    /// Visits every atom.
    pub fn atoms(&self) -> Vec<&Atom> {
        match self {
            Condition::Atom(a) => alloc::vec![a],
            Condition::Not(c) => c.atoms(),
            Condition::And(l, r) | Condition::Or(l, r) => {
                let mut v = l.atoms();
                v.extend(r.atoms());
                v
            }
        }
    }

    /// Checks the condition against the universe: attributes exist, and
    /// every comparison is between compatible types (numbers with numbers,
    /// text with text).
    pub fn check(&self, u: &Universe) -> Result<()> {
        for atom in self.atoms() {
            for a in atom.attrs() {
                if a.index() >= u.len() {
                    return Err(Error::UnknownAttribute(format!("#{}", a.0)));
                }
            }
            let lt = u.info(atom.left).ty;
            let rt = match &atom.right {
                Operand::Attr(b) => u.info(*b).ty,
                Operand::Const(c) => c.value_type(),
            };
            if !compatible(lt, rt) {
                return Err(Error::TypeError(format!(
                    "cannot compare `{}` ({}) with a {} value",
                    u.name(atom.left),
                    lt.name(),
                    rt.name()
                )));
            }
        }
        Ok(())
    }

    /// Renders the condition in query syntax.
    pub fn display<'a>(&'a self, u: &'a Universe) -> ConditionDisplay<'a> {
        ConditionDisplay { c: self, u }
    }
}

fn compatible(a: ValueType, b: ValueType) -> bool {
    a == b || (a.is_numeric() && b.is_numeric())
}

/// Helper returned by [`Condition::display`]. Parenthesizes only where
/// precedence (`OR` < `AND` < `NOT`) and left associativity require it.
pub struct ConditionDisplay<'a> {
    c: &'a Condition,
    u: &'a Universe,
}

fn prec(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 1,
        Condition::And(..) => 2,
        Condition::Not(_) => 3,
        Condition::Atom(_) => 4,
    }
}

/// Writes a value in query syntax: numbers bare, text single-quoted with
/// embedded quotes doubled.
pub fn write_literal(f: &mut dyn fmt::Write, v: &Value) -> fmt::Result {
    match v {
        Value::Text(s) => {
            f.write_char('\'')?;
            for ch in s.chars() {
                if ch == '\'' {
                    f.write_str("''")?;
                } else {
                    f.write_char(ch)?;
                }
            }
            f.write_char('\'')
        }
        other => write!(f, "{other}"),
    }
}

fn write_condition(f: &mut fmt::Formatter<'_>, c: &Condition, u: &Universe, min_prec: u8) -> fmt::Result {
    let p = prec(c);
    let paren = p < min_prec;
    if paren {
        f.write_str("(")?;
    }
    match c {
        Condition::Atom(a) => {
            write!(f, "{} {} ", u.name(a.left), a.op.symbol())?;
            match &a.right {
                Operand::Attr(b) => f.write_str(u.name(*b))?,
                Operand::Const(v) => write_literal(f, v)?,
            }
        }
        Condition::Not(inner) => {
            f.write_str("NOT ")?;
            write_condition(f, inner, u, 3)?;
        }
        Condition::And(l, r) => {
            write_condition(f, l, u, 2)?;
            f.write_str(" AND ")?;
            write_condition(f, r, u, 3)?;
        }
        Condition::Or(l, r) => {
            write_condition(f, l, u, 1)?;
            f.write_str(" OR ")?;
            write_condition(f, r, u, 2)?;
        }
    }
    if paren {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for ConditionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_condition(f, self.c, self.u, 0)
    }
}

/// Two-valued evaluation of `g` on `t`. Fails with `AttributeNotDefined`
/// when `sch(Γ) ⊄ sch(t)`.
pub fn eval_condition(g: &Condition, t: &Tuple) -> Result<bool> {
    eval_in(g, t, None)
}

fn eval_in(g: &Condition, t: &Tuple, u: Option<&Universe>) -> Result<bool> {
    Ok(match g {
        Condition::Atom(a) => a.eval(t, u)?,
        Condition::Not(c) => !eval_in(c, t, u)?,
        Condition::And(l, r) => eval_in(l, t, u)? && eval_in(r, t, u)?,
        Condition::Or(l, r) => eval_in(l, t, u)? || eval_in(r, t, u)?,
    })
}

/// A possibly negated atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    /// The atom.
    pub atom: Atom,
    /// Whether it is negated.
    pub negated: bool,
}

impl Literal {
    fn to_condition(&self) -> Condition {
        let c = Condition::Atom(self.atom.clone());
        if self.negated {
            c.negate()
        } else {
            c
        }
    }
}

/// Conjunctive normal form: a conjunction of clauses, each a disjunction of
/// literals. Negation is kept on atoms (never folded into the operator) so
/// that comparisons of incomparable values keep their meaning.
///
/// The result is simplified without changing its meaning: literals are
/// deduplicated, clauses containing a literal and its negation are dropped,
/// and clauses that contain another clause are absorbed. This lets, e.g.,
/// `(A = 1 AND B = 2) OR (A = 1 AND B = 3)` decompose per attribute.
pub fn to_cnf(g: &Condition) -> Result<Vec<Vec<Literal>>> {
    let mut clauses = cnf(g, false)?;
    for c in &mut clauses {
        c.sort();
        c.dedup();
    }
    clauses.retain(|c| !c.iter().any(|l| c.iter().any(|m| m.atom == l.atom && m.negated != l.negated)));
    clauses.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    clauses.dedup();
    let mut kept: Vec<Vec<Literal>> = Vec::with_capacity(clauses.len());
    for c in clauses {
        if !kept.iter().any(|k| k.iter().all(|l| c.contains(l))) {
            kept.push(c);
        }
    }
    Ok(kept)
}

fn cnf(g: &Condition, negated: bool) -> Result<Vec<Vec<Literal>>> {
    match (g, negated) {
        (Condition::Atom(a), neg) => Ok(alloc::vec![alloc::vec![Literal { atom: a.clone(), negated: neg }]]),
        (Condition::Not(c), neg) => cnf(c, !neg),
        (Condition::And(l, r), false) | (Condition::Or(l, r), true) => {
            let mut out = cnf(l, negated)?;
            out.extend(cnf(r, negated)?);
            cap_clauses(out.len())?;
            Ok(out)
        }
        (Condition::Or(l, r), false) | (Condition::And(l, r), true) => {
            let (a, b) = (cnf(l, negated)?, cnf(r, negated)?);
            cap_clauses(a.len().saturating_mul(b.len()))?;
            let mut out = Vec::with_capacity(a.len() * b.len());
            for x in &a {
                for y in &b {
                    let mut clause = x.clone();
                    for lit in y {
                        if !clause.contains(lit) {
                            clause.push(lit.clone());
                        }
                    }
                    out.push(clause);
                }
            }
            Ok(out)
        }
    }
}

fn cap_clauses(n: usize) -> Result<()> {
    if n > CNF_CLAUSE_CAP {
        return Err(Error::NotIndependent(format!(
            "conjunctive normal form exceeds {CNF_CLAUSE_CAP} clauses"
        )));
    }
    Ok(())
}

/// An independent condition: one single-attribute condition per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentCondition {
    /// `Γ(A)` for each `A ∈ sch(Γ)`.
    pub per_attr: BTreeMap<AttrId, Condition>,
}

impl IndependentCondition {
    /// `sch(Γ)`.
    pub fn schema(&self) -> Vec<AttrId> {
        self.per_attr.keys().copied().collect()
    }

    /// Per-attribute `Sat` sets over the active domains of `chase`.
    pub fn sat_sets(&self, chase: &ChaseResult) -> SatSets {
        SatSets {
            per_attr: self.per_attr.iter().map(|(a, c)| (*a, sat_per_attribute(c, *a, chase))).collect(),
        }
    }
}

/// Decomposes `g` into per-attribute conditions, or explains why it cannot:
/// an atom compares two attributes, or some clause of the conjunctive normal
/// form mentions more than one attribute.
pub fn decompose_independent(g: &Condition, u: &Universe) -> Result<IndependentCondition> {
    for atom in g.atoms() {
        if let Operand::Attr(b) = atom.right {
            if b != atom.left {
                return Err(Error::NotIndependent(format!(
                    "atom `{}` compares two attributes",
                    Condition::Atom(atom.clone()).display(u)
                )));
            }
        }
    }
    let clauses = to_cnf(g)?;
    let mut per_attr: BTreeMap<AttrId, Condition> = BTreeMap::new();
    for clause in clauses {
        let attrs = schema_of(clause.iter().flat_map(|l| l.atom.attrs()));
        let disjunction = clause
            .iter()
            .map(Literal::to_condition)
            .reduce(Condition::or)
            .ok_or_else(|| Error::Invariant(String::from("empty clause")))?;
        if attrs.len() != 1 {
            return Err(Error::NotIndependent(format!(
                "clause `{}` mentions more than one attribute",
                disjunction.display(u)
            )));
        }
        let entry = per_attr.remove(&attrs[0]);
        per_attr.insert(
            attrs[0],
            match entry {
                Some(prev) => prev.and(disjunction),
                None => disjunction,
            },
        );
    }
    Ok(IndependentCondition { per_attr })
}

/// `Sat(c)` for a single-attribute condition: the values of `adom(A)` that
/// satisfy it.
pub fn sat_per_attribute(c: &Condition, a: AttrId, chase: &ChaseResult) -> ValueSet {
    chase
        .adom(a)
        .iter()
        .filter(|v| eval_condition(c, &Tuple::from_pairs([(a, (*v).clone())])).unwrap_or(false))
        .cloned()
        .collect()
}

/// Per-attribute `Sat` sets of an independent condition (empty map: no
/// condition).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SatSets {
    /// `Sat(Γ(A))` per attribute.
    pub per_attr: BTreeMap<AttrId, ValueSet>,
}

impl SatSets {
    /// `sch(Γ)`.
    pub fn schema(&self) -> Vec<AttrId> {
        self.per_attr.keys().copied().collect()
    }

    /// `tuples(σ(sch Γ)) ∩ Sat(Γ) ≠ ∅` (false if σ lacks an attribute).
    pub fn meets(&self, sigma: &MTuple) -> bool {
        self.per_attr.iter().all(|(a, s)| sigma.get(*a).is_some_and(|c| c.meets(s)))
    }

    /// `tuples(σ(sch Γ)) ⊆ Sat(Γ)` (false if σ lacks an attribute).
    pub fn within(&self, sigma: &MTuple) -> bool {
        self.per_attr.iter().all(|(a, s)| sigma.get(*a).is_some_and(|c| c.is_subset(s)))
    }

    /// `σ(A) ⊆ Sat(Γ(A))`; true when `A ∉ sch(Γ)`.
    pub fn within_at(&self, sigma: &MTuple, a: AttrId) -> bool {
        match self.per_attr.get(&a) {
            Some(s) => sigma.get(a).is_some_and(|c| c.is_subset(s)),
            None => true,
        }
    }

    /// `σ(A)`, intersected with `Sat(Γ(A))` when `A ∈ sch(Γ)`.
    pub fn effective(&self, sigma: &MTuple, a: AttrId) -> Option<ValueSet> {
        let c = sigma.get(a)?;
        Some(match self.per_attr.get(&a) {
            Some(s) => c.intersection(s),
            None => c.clone(),
        })
    }
}

/// Resolves an optional condition into `Sat` sets, failing with
/// `NotIndependent` when it does not decompose.
pub fn sat_sets_for(condition: Option<&Condition>, chase: &ChaseResult) -> Result<SatSets> {
    match condition {
        None => Ok(SatSets::default()),
        Some(g) => Ok(decompose_independent(g, chase.universe())?.sat_sets(chase)),
    }
}

/// `select X from T [where Γ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardQuery {
    /// Projection `X` (in select-list order).
    pub projection: Vec<AttrId>,
    /// Optional condition `Γ`.
    pub condition: Option<Condition>,
}

impl StandardQuery {
    /// Builds a query.
    pub fn new(projection: Vec<AttrId>, condition: Option<Condition>) -> Self {
        StandardQuery { projection, condition }
    }

    /// `X`, sorted.
    pub fn x(&self) -> Vec<AttrId> {
        schema_of(self.projection.iter().copied())
    }

    /// `sch(Q) = X ∪ sch(Γ)`.
    pub fn schema(&self) -> Vec<AttrId> {
        let mut s = self.x();
        if let Some(g) = &self.condition {
            s.extend(g.schema());
        }
        schema_of(s)
    }

    /// Checks attribute ids and comparison types.
    pub fn check(&self, u: &Universe) -> Result<()> {
        if self.projection.is_empty() {
            return Err(Error::InvalidQuery(String::from("empty select list")));
        }
        if let Some(a) = self.projection.iter().find(|a| a.index() >= u.len()) {
            return Err(Error::UnknownAttribute(format!("#{}", a.0)));
        }
        if let Some(g) = &self.condition {
            g.check(u)?;
        }
        Ok(())
    }
}

/// Lower and upper bounds of a consistent answer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundedAnswer {
    /// Tuples certainly in the consistent answer.
    pub lower: BTreeSet<Tuple>,
    /// Tuples possibly in the consistent answer.
    pub upper: BTreeSet<Tuple>,
}

/// The exact consistent answer of `q` (independent or absent condition).
pub fn consistent_answer_standard(chase: &ChaseResult, q: &StandardQuery) -> Result<BTreeSet<Tuple>> {
    consistent_answer_standard_capped(chase, q, DEFAULT_ENUMERATION_CAP)
}

/// [`consistent_answer_standard`] with an explicit enumeration cap.
pub fn consistent_answer_standard_capped(
    chase: &ChaseResult,
    q: &StandardQuery,
    cap: usize,
) -> Result<BTreeSet<Tuple>> {
    q.check(chase.universe())?;
    let x = q.x();
    let Some(g) = &q.condition else {
        return cons_tuples_over(chase, &x, cap);
    };
    let sat = decompose_independent(g, chase.universe())?.sat_sets(chase);
    let sq = q.schema();
    let gamma = sat.schema();
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        if !sigma.defines_all(&sq) || !sat.meets(sigma) {
            continue;
        }
        let ok = chase.fds_within(&sq).all(|fd| {
            let b = fd.rhs;
            let comp = sigma.get(b).map_or(0, ValueSet::len);
            (!x.contains(&b) || comp == 1) && (!gamma.contains(&b) || sat.within_at(sigma, b))
        });
        if !ok {
            continue;
        }
        // x ranges over σ(X), restricted to Sat on the condition attributes.
        let comps: Vec<(AttrId, ValueSet)> =
            x.iter().map(|a| (*a, sat.effective(sigma, *a).unwrap_or_default())).collect();
        let refs: Vec<(AttrId, &ValueSet)> = comps.iter().map(|(a, s)| (*a, s)).collect();
        let count = refs.iter().fold(1u128, |n, (_, s)| n.saturating_mul(s.len() as u128));
        if count > cap as u128 {
            return Err(Error::EnumerationTooLarge { cap });
        }
        out.extend(crate::model::cross_product(&refs));
        if out.len() > cap {
            return Err(Error::EnumerationTooLarge { cap });
        }
    }
    Ok(out)
}

/// The simplified characterization for queries whose projection contains
/// every dimension key: some σ over `sch(Q)` with `tuples(σ(X)) = {x}` and
/// `tuples(σ(sch Γ)) ⊆ Sat(Γ)`. Star tables only.
pub fn consistent_answer_key_projection(chase: &ChaseResult, q: &StandardQuery) -> Result<BTreeSet<Tuple>> {
    q.check(chase.universe())?;
    let star = chase
        .star()
        .ok_or_else(|| Error::InvalidQuery(String::from("key projection requires a star table")))?;
    let x = q.x();
    if !star.keys.iter().all(|k| x.contains(k)) {
        return Err(Error::InvalidQuery(String::from("the projection does not contain every key")));
    }
    let sat = sat_sets_for(q.condition.as_ref(), chase)?;
    let sq = q.schema();
    let mut out = BTreeSet::new();
    for sigma in chase.m_tuples() {
        if !sigma.defines_all(&sq) || !sat.within(sigma) {
            continue;
        }
        if sigma.tuple_count(&x)? == 1 {
            out.extend(sigma.enumerate(&x)?);
        }
    }
    Ok(out)
}

/// Bounds for any condition (independence not required), from one scan of
/// the m-table: the lower bound keeps `x` from consistent tuples over
/// `sch(Q)` that satisfy `Γ`; the upper bound keeps consistent `x` that
/// extend to a true tuple over `sch(Q)` satisfying `Γ`.
pub fn consistent_answer_bounds(chase: &ChaseResult, q: &StandardQuery) -> Result<BoundedAnswer> {
    consistent_answer_bounds_capped(chase, q, DEFAULT_ENUMERATION_CAP)
}

/// [`consistent_answer_bounds`] with an explicit enumeration cap.
pub fn consistent_answer_bounds_capped(chase: &ChaseResult, q: &StandardQuery, cap: usize) -> Result<BoundedAnswer> {
    q.check(chase.universe())?;
    let x = q.x();
    let sq = q.schema();
    let mut out = BoundedAnswer::default();
    for sigma in chase.m_tuples() {
        if !sigma.defines_all(&sq) {
            continue;
        }
        let cons_q = chase.consistent_in(sigma, &sq);
        let cons_x = chase.consistent_in(sigma, &x);
        if !cons_x {
            continue;
        }
        for t in sigma.enumerate_capped(&sq, cap)? {
            let holds = match &q.condition {
                Some(g) => eval_condition(g, &t)?,
                None => true,
            };
            if !holds {
                continue;
            }
            let xt = t.restrict(&x)?;
            if cons_q {
                out.lower.insert(xt.clone());
            }
            out.upper.insert(xt);
        }
        if out.upper.len() > cap {
            return Err(Error::EnumerationTooLarge { cap });
        }
    }
    Ok(out)
}
