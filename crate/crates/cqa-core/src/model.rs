//! Tuples, m-tuples, star schemas and warehouses.
//!
//! A [`Tuple`] is a partial map from attributes to values: a missing value is
//! simply an absent binding. An [`MTuple`] maps each attribute of its schema
//! to a nonempty set of values; it stands for the cross product of its
//! components.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::value::{Value, ValueSet, ValueType};

/// Index of an attribute inside a [`Universe`]. Attribute ids of a star
/// schema are assigned dimension by dimension (key first), then measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrId(pub u16);

impl AttrId {
    /// Position in the universe.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Role of an attribute in a star schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Key of dimension `dim`.
    Key {
        /// Dimension index.
        dim: usize,
    },
    /// Non-key attribute of dimension `dim`.
    NonKey {
        /// Dimension index.
        dim: usize,
    },
    /// Measure of the fact table.
    Measure,
    /// Attribute of a table that is not a star schema.
    Plain,
}

/// Name, type and role of one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrInfo {
    /// Attribute name.
    pub name: String,
    /// Declared type.
    pub ty: ValueType,
    /// Star-schema role.
    pub role: Role,
}

/// The ordered set of attributes tables are defined over.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Universe {
    attrs: Vec<AttrInfo>,
}

impl Universe {
    /// Builds a universe, rejecting duplicate names.
    pub fn new(attrs: Vec<AttrInfo>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &attrs {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::DuplicateAttribute(a.name.clone()));
            }
        }
        if attrs.len() > u16::MAX as usize {
            return Err(Error::InvalidWarehouse(String::from("too many attributes")));
        }
        Ok(Universe { attrs })
    }

    /// A universe of untyped (`text`) plain attributes, for tables that are
    /// not star schemas.
    pub fn plain(names: &[&str]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| AttrInfo { name: String::from(*n), ty: ValueType::Text, role: Role::Plain })
                .collect(),
        )
    }

    /// Number of attributes.
    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    /// True iff the universe is empty.
    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    /// Looks up an attribute by name.
    pub fn id(&self, name: &str) -> Option<AttrId> {
        self.attrs.iter().position(|a| a.name == name).map(|i| AttrId(i as u16))
    }

    /// Looks up an attribute by name, failing with `UnknownAttribute`.
    pub fn resolve(&self, name: &str) -> Result<AttrId> {
        self.id(name).ok_or_else(|| Error::UnknownAttribute(String::from(name)))
    }

    /// Attribute metadata.
    pub fn info(&self, id: AttrId) -> &AttrInfo {
        &self.attrs[id.index()]
    }

    /// Attribute name.
    pub fn name(&self, id: AttrId) -> &str {
        &self.attrs[id.index()].name
    }

    /// All attribute ids in order.
    pub fn ids(&self) -> impl Iterator<Item = AttrId> + '_ {
        (0..self.attrs.len()).map(|i| AttrId(i as u16))
    }
}

/// Sorts and deduplicates a list of attributes, producing a schema.
pub fn schema_of(attrs: impl IntoIterator<Item = AttrId>) -> Vec<AttrId> {
    let mut v: Vec<AttrId> = attrs.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

/// A partial map from attributes to values, kept sorted by attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Tuple {
    entries: Vec<(AttrId, Value)>,
}

impl Tuple {
    /// The empty tuple.
    pub fn empty() -> Self {
        Tuple { entries: Vec::new() }
    }

    /// Builds a tuple; later bindings of the same attribute win.
    pub fn from_pairs<I: IntoIterator<Item = (AttrId, Value)>>(pairs: I) -> Self {
        let mut map = BTreeMap::new();
        for (a, v) in pairs {
            map.insert(a, v);
        }
        Tuple { entries: map.into_iter().collect() }
    }

    /// Builds a tuple from attribute names.
    pub fn from_named(u: &Universe, pairs: &[(&str, Value)]) -> Result<Self> {
        let mut out = Vec::with_capacity(pairs.len());
        for (n, v) in pairs {
            out.push((u.resolve(n)?, v.clone()));
        }
        Ok(Self::from_pairs(out))
    }

    /// The schema `sch(t)`, sorted.
    pub fn schema(&self) -> Vec<AttrId> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }

    /// Number of bindings.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True iff no attribute is bound.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value bound to `a`, if any.
    pub fn get(&self, a: AttrId) -> Option<&Value> {
        self.entries.binary_search_by_key(&a, |(x, _)| *x).ok().map(|i| &self.entries[i].1)
    }

    /// True iff `a ∈ sch(t)`.
    pub fn defines(&self, a: AttrId) -> bool {
        self.get(a).is_some()
    }

    /// True iff every attribute of `s` is bound.
    pub fn defines_all(&self, s: &[AttrId]) -> bool {
        s.iter().all(|a| self.defines(*a))
    }

    /// Bindings in attribute order.
    pub fn iter(&self) -> impl Iterator<Item = (AttrId, &Value)> + '_ {
        self.entries.iter().map(|(a, v)| (*a, v))
    }

    /// Returns a copy with `a` bound to `v`.
    pub fn with(&self, a: AttrId, v: Value) -> Tuple {
        let mut entries = self.entries.clone();
        match entries.binary_search_by_key(&a, |(x, _)| *x) {
            Ok(i) => entries[i].1 = v,
            Err(i) => entries.insert(i, (a, v)),
        }
        Tuple { entries }
    }

    /// Returns a copy without a binding for `a`.
    pub fn without(&self, a: AttrId) -> Tuple {
        Tuple { entries: self.entries.iter().filter(|(x, _)| *x != a).cloned().collect() }
    }

    /// Restriction `t.S`; fails if `S ⊄ sch(t)`.
    pub fn restrict(&self, s: &[AttrId]) -> Result<Tuple> {
        let mut entries = Vec::with_capacity(s.len());
        for a in schema_of(s.iter().copied()) {
            match self.get(a) {
                Some(v) => entries.push((a, v.clone())),
                None => return Err(Error::AttributeNotDefined(format!("#{}", a.0))),
            }
        }
        Ok(Tuple { entries })
    }

    /// Restriction to the attributes of `s` that are bound (never fails).
    pub fn project(&self, s: &[AttrId]) -> Tuple {
        Tuple { entries: self.entries.iter().filter(|(a, _)| s.contains(a)).cloned().collect() }
    }

    /// `self ⊑ other` for tuples: every binding of `self` occurs in `other`.
    pub fn is_sub_tuple_of(&self, other: &Tuple) -> bool {
        self.entries.iter().all(|(a, v)| other.get(*a) == Some(v))
    }

    /// All nonempty sub-tuples (restrictions to nonempty subsets of the
    /// schema). Exponential; intended for desk-scale use.
    pub fn sub_tuples(&self) -> Vec<Tuple> {
        let n = self.entries.len();
        let mut out = Vec::new();
        if n >= 31 {
            return out;
        }
        for mask in 1u32..(1u32 << n) {
            let entries =
                (0..n).filter(|i| mask & (1 << i) != 0).map(|i| self.entries[i].clone()).collect();
            out.push(Tuple { entries });
        }
        out
    }

    /// Renders the tuple as `NAME=value,...` using `u` for names.
    pub fn display<'a>(&'a self, u: &'a Universe) -> TupleDisplay<'a> {
        TupleDisplay { t: self, u }
    }
}

/// Helper returned by [`Tuple::display`].
pub struct TupleDisplay<'a> {
    t: &'a Tuple,
    u: &'a Universe,
}

impl fmt::Display for TupleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, v)) in self.t.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}", self.u.name(a), v)?;
        }
        Ok(())
    }
}

/// A multi-valued tuple: each attribute of its schema maps to a nonempty,
/// sorted set of values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct MTuple {
    comps: Vec<(AttrId, ValueSet)>,
}

impl MTuple {
    /// The m-tuple with empty schema.
    pub fn empty() -> Self {
        MTuple { comps: Vec::new() }
    }

    /// Lifts a tuple to the m-tuple with singleton components.
    pub fn from_tuple(t: &Tuple) -> Self {
        MTuple { comps: t.iter().map(|(a, v)| (a, ValueSet::singleton(v.clone()))).collect() }
    }

    /// Builds an m-tuple from components; empty components are dropped and
    /// repeated attributes are merged.
    pub fn from_components<I: IntoIterator<Item = (AttrId, ValueSet)>>(comps: I) -> Self {
        let mut map: BTreeMap<AttrId, ValueSet> = BTreeMap::new();
        for (a, s) in comps {
            map.entry(a).or_default().union_with(&s);
        }
        MTuple { comps: map.into_iter().filter(|(_, s)| !s.is_empty()).collect() }
    }

    /// The schema `sch(σ)`, sorted.
    pub fn schema(&self) -> Vec<AttrId> {
        self.comps.iter().map(|(a, _)| *a).collect()
    }

    /// Component `σ(A)`, `None` when `A ∉ sch(σ)`.
    pub fn get(&self, a: AttrId) -> Option<&ValueSet> {
        self.comps.binary_search_by_key(&a, |(x, _)| *x).ok().map(|i| &self.comps[i].1)
    }

    /// True iff `a ∈ sch(σ)`.
    pub fn defines(&self, a: AttrId) -> bool {
        self.get(a).is_some()
    }

    /// True iff `s ⊆ sch(σ)`.
    pub fn defines_all(&self, s: &[AttrId]) -> bool {
        s.iter().all(|a| self.defines(*a))
    }

    /// Components in attribute order.
    pub fn iter(&self) -> impl Iterator<Item = (AttrId, &ValueSet)> + '_ {
        self.comps.iter().map(|(a, s)| (*a, s))
    }

    /// Largest component cardinality (0 for the empty m-tuple).
    pub fn max_component(&self) -> usize {
        self.comps.iter().map(|(_, s)| s.len()).max().unwrap_or(0)
    }

    /// Unions `values` into component `a`; returns whether σ changed.
    pub fn union_component(&mut self, a: AttrId, values: &ValueSet) -> bool {
        if values.is_empty() {
            return false;
        }
        match self.comps.binary_search_by_key(&a, |(x, _)| *x) {
            Ok(i) => self.comps[i].1.union_with(values),
            Err(i) => {
                self.comps.insert(i, (a, values.clone()));
                true
            }
        }
    }

    /// `self ⊑ other`: `sch(self) ⊆ sch(other)` and every component of
    /// `self` is included in the matching component of `other`.
    pub fn is_subsumed_by(&self, other: &MTuple) -> bool {
        self.comps.iter().all(|(a, s)| other.get(*a).is_some_and(|o| s.is_subset(o)))
    }

    /// `t ⊑ σ` for a tuple `t`.
    pub fn contains_tuple(&self, t: &Tuple) -> bool {
        t.iter().all(|(a, v)| self.get(a).is_some_and(|s| s.contains(v)))
    }

    /// Component-wise union `self ⊔ other`.
    pub fn union(&self, other: &MTuple) -> MTuple {
        let mut out = self.clone();
        for (a, s) in &other.comps {
            out.union_component(*a, s);
        }
        out
    }

    /// The m-tuple restricted to `s ∩ sch(σ)`.
    pub fn project(&self, s: &[AttrId]) -> MTuple {
        MTuple { comps: self.comps.iter().filter(|(a, _)| s.contains(a)).cloned().collect() }
    }

    /// `|tuples(σ(S))|`, saturating. Fails if `S ⊄ sch(σ)`.
    pub fn tuple_count(&self, s: &[AttrId]) -> Result<u128> {
        let mut n: u128 = 1;
        for a in s {
            let c = self.get(*a).ok_or_else(|| Error::AttributeNotDefined(format!("#{}", a.0)))?;
            n = n.saturating_mul(c.len() as u128);
        }
        Ok(n)
    }

    /// `tuples(σ(S))`: the cross product of the components over `S`, in
    /// lexicographic order. `S = ∅` yields the empty tuple.
    pub fn enumerate(&self, s: &[AttrId]) -> Result<Vec<Tuple>> {
        let s = schema_of(s.iter().copied());
        let mut comps = Vec::with_capacity(s.len());
        for a in &s {
            let c = self.get(*a).ok_or_else(|| Error::AttributeNotDefined(format!("#{}", a.0)))?;
            comps.push((*a, c));
        }
        Ok(cross_product(&comps))
    }

    /// `enumerate` with an output cap.
    pub fn enumerate_capped(&self, s: &[AttrId], cap: usize) -> Result<Vec<Tuple>> {
        if self.tuple_count(s)? > cap as u128 {
            return Err(Error::EnumerationTooLarge { cap });
        }
        self.enumerate(s)
    }

    /// Renders the m-tuple as `NAME={v1|v2},...`.
    pub fn display<'a>(&'a self, u: &'a Universe) -> MTupleDisplay<'a> {
        MTupleDisplay { m: self, u }
    }
}

/// Cross product of `(attribute, value set)` components.
pub fn cross_product(comps: &[(AttrId, &ValueSet)]) -> Vec<Tuple> {
    let mut out = alloc::vec![Tuple::empty()];
    for (a, set) in comps {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for t in &out {
            for v in set.iter() {
                let mut entries = t.entries.clone();
                entries.push((*a, v.clone()));
                next.push(Tuple { entries });
            }
        }
        out = next;
    }
    out
}

/// Helper returned by [`MTuple::display`].
pub struct MTupleDisplay<'a> {
    m: &'a MTuple,
    u: &'a Universe,
}

impl fmt::Display for MTupleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, s)) in self.m.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={{", self.u.name(a))?;
            for (j, v) in s.iter().enumerate() {
                if j > 0 {
                    f.write_str("|")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

/// A normalized functional dependency `X → A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fd {
    /// Left-hand side `X`, sorted.
    pub lhs: Vec<AttrId>,
    /// Right-hand side attribute `A`.
    pub rhs: AttrId,
}

impl Fd {
    /// Builds `lhs → rhs` with a sorted left-hand side.
    pub fn new(lhs: impl IntoIterator<Item = AttrId>, rhs: AttrId) -> Self {
        Fd { lhs: schema_of(lhs), rhs }
    }

    /// True iff `XA ⊆ s`.
    pub fn within(&self, s: &[AttrId]) -> bool {
        s.contains(&self.rhs) && self.lhs.iter().all(|a| s.contains(a))
    }
}

/// Checks that a dependency set is normalized (single right-hand side, not
/// trivial, nonempty left-hand side) and acyclic.
pub fn check_fds(universe: &Universe, fds: &[Fd]) -> Result<()> {
    let n = universe.len();
    for fd in fds {
        if fd.lhs.is_empty() {
            return Err(Error::NonStarFds(String::from("empty left-hand side")));
        }
        if fd.lhs.contains(&fd.rhs) {
            return Err(Error::NonStarFds(format!("trivial dependency on {}", universe.name(fd.rhs))));
        }
        if fd.rhs.index() >= n || fd.lhs.iter().any(|a| a.index() >= n) {
            return Err(Error::NonStarFds(String::from("attribute outside the universe")));
        }
    }
    // Kahn's algorithm over the graph lhs-attribute -> rhs.
    let mut indeg = alloc::vec![0usize; n];
    let mut edges: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for fd in fds {
        for a in &fd.lhs {
            edges[a.index()].push(fd.rhs.index());
            indeg[fd.rhs.index()] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = stack.pop() {
        seen += 1;
        for &j in &edges[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                stack.push(j);
            }
        }
    }
    if seen != n {
        return Err(Error::NonStarFds(String::from("dependencies are cyclic")));
    }
    Ok(())
}

/// Name and type of a declared attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrDef {
    /// Attribute name.
    pub name: String,
    /// Declared type.
    pub ty: ValueType,
}

impl AttrDef {
    /// Convenience constructor.
    pub fn new(name: &str, ty: ValueType) -> Self {
        AttrDef { name: String::from(name), ty }
    }
}

/// One dimension: a key and its non-key attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionDef {
    /// Dimension (table) name.
    pub name: String,
    /// Key attribute `Kᵢ`.
    pub key: AttrDef,
    /// Non-key attributes `Aᵢʲ`.
    pub non_keys: Vec<AttrDef>,
}

/// Attribute ids of a star schema, grouped by role.
#[derive(Debug, Clone, PartialEq)]
pub struct StarLayout {
    /// Dimension keys `K₁..Kₙ` (this is `𝕂`, sorted).
    pub keys: Vec<AttrId>,
    /// Non-key attributes per dimension.
    pub non_keys: Vec<Vec<AttrId>>,
    /// Measures `M₁..Mₚ`.
    pub measures: Vec<AttrId>,
}

impl StarLayout {
    /// Index of the dimension whose key is `a`.
    pub fn key_dim(&self, a: AttrId) -> Option<usize> {
        self.keys.iter().position(|k| *k == a)
    }

    /// True iff `a` is a measure.
    pub fn is_measure(&self, a: AttrId) -> bool {
        self.measures.contains(&a)
    }
}

/// A star schema: dimensions, measures and whether `𝕂 → Mₗ` dependencies
/// are part of the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct StarSchemaDef {
    dimensions: Vec<DimensionDef>,
    measures: Vec<AttrDef>,
    measure_fds: bool,
    universe: Universe,
    layout: StarLayout,
}

impl StarSchemaDef {
    /// Builds the schema, assigning attribute ids dimension by dimension
    /// (key first) and then measures. Names must be globally distinct.
    pub fn new(dimensions: Vec<DimensionDef>, measures: Vec<AttrDef>, measure_fds: bool) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidWarehouse(String::from("a star schema needs at least one dimension")));
        }
        let mut attrs = Vec::new();
        let mut keys = Vec::new();
        let mut non_keys = Vec::new();
        for (i, d) in dimensions.iter().enumerate() {
            if d.non_keys.is_empty() {
                return Err(Error::InvalidWarehouse(format!("dimension `{}` has no non-key attribute", d.name)));
            }
            keys.push(AttrId(attrs.len() as u16));
            attrs.push(AttrInfo { name: d.key.name.clone(), ty: d.key.ty, role: Role::Key { dim: i } });
            let mut nk = Vec::new();
            for a in &d.non_keys {
                nk.push(AttrId(attrs.len() as u16));
                attrs.push(AttrInfo { name: a.name.clone(), ty: a.ty, role: Role::NonKey { dim: i } });
            }
            non_keys.push(nk);
        }
        if measures.is_empty() {
            return Err(Error::InvalidWarehouse(String::from("a star schema needs at least one measure")));
        }
        let mut ms = Vec::new();
        for m in &measures {
            ms.push(AttrId(attrs.len() as u16));
            attrs.push(AttrInfo { name: m.name.clone(), ty: m.ty, role: Role::Measure });
        }
        let universe = Universe::new(attrs)?;
        Ok(StarSchemaDef {
            dimensions,
            measures,
            measure_fds,
            universe,
            layout: StarLayout { keys, non_keys, measures: ms },
        })
    }

    /// Declared dimensions.
    pub fn dimensions(&self) -> &[DimensionDef] {
        &self.dimensions
    }

    /// Declared measures.
    pub fn measures(&self) -> &[AttrDef] {
        &self.measures
    }

    /// Whether `𝕂 → Mₗ` dependencies hold.
    pub fn measure_fds(&self) -> bool {
        self.measure_fds
    }

    /// The attribute universe.
    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    /// Attribute ids by role.
    pub fn layout(&self) -> &StarLayout {
        &self.layout
    }

    /// Schema of dimension table `i`: key and non-keys.
    pub fn dim_schema(&self, i: usize) -> Vec<AttrId> {
        let mut s = alloc::vec![self.layout.keys[i]];
        s.extend(self.layout.non_keys[i].iter().copied());
        schema_of(s)
    }

    /// Schema of the fact table: `𝕂` and the measures.
    pub fn fact_schema(&self) -> Vec<AttrId> {
        schema_of(self.layout.keys.iter().chain(self.layout.measures.iter()).copied())
    }

    /// The derived dependency set `{Kᵢ → Aᵢʲ} ∪ {𝕂 → Mₗ}` (the latter only
    /// when `measure_fds`).
    pub fn fds(&self) -> Vec<Fd> {
        let mut out = Vec::new();
        for (i, nk) in self.layout.non_keys.iter().enumerate() {
            for a in nk {
                out.push(Fd::new([self.layout.keys[i]], *a));
            }
        }
        if self.measure_fds {
            for m in &self.layout.measures {
                out.push(Fd::new(self.layout.keys.iter().copied(), *m));
            }
        }
        out
    }

    /// Same schema with a different `measure_fds` flag.
    pub fn with_measure_fds(&self, measure_fds: bool) -> Self {
        let mut s = self.clone();
        s.measure_fds = measure_fds;
        s
    }
}

/// Which warehouse table a row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TableRef {
    /// Dimension table `i`.
    Dim(usize),
    /// The fact table.
    Fact,
}

/// Kind of warehouse violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    /// Dimension row without its key or without any non-key value.
    Restriction1,
    /// Fact row without every key or without any measure.
    Restriction2,
    /// A value does not match the declared type of its attribute.
    TypeMismatch {
        /// Offending attribute name.
        attribute: String,
    },
    /// The row binds an attribute outside its table's schema.
    ForeignAttribute {
        /// Offending attribute name.
        attribute: String,
    },
    /// A float value is not finite.
    NonFinite {
        /// Offending attribute name.
        attribute: String,
    },
}

/// A structured warehouse violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Source table.
    pub table: TableRef,
    /// Row index within the table.
    pub row: usize,
    /// What is wrong.
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let table = match self.table {
            TableRef::Dim(i) => format!("dimension {i}"),
            TableRef::Fact => String::from("fact table"),
        };
        match &self.kind {
            ViolationKind::Restriction1 => {
                write!(f, "{table}, row {}: a dimension row needs its key and at least one non-key value", self.row)
            }
            ViolationKind::Restriction2 => {
                write!(f, "{table}, row {}: a fact row needs every key and at least one measure", self.row)
            }
            ViolationKind::TypeMismatch { attribute } => {
                write!(f, "{table}, row {}: value of `{attribute}` does not match its declared type", self.row)
            }
            ViolationKind::ForeignAttribute { attribute } => {
                write!(f, "{table}, row {}: attribute `{attribute}` does not belong to this table", self.row)
            }
            ViolationKind::NonFinite { attribute } => {
                write!(f, "{table}, row {}: value of `{attribute}` is not finite", self.row)
            }
        }
    }
}

/// A star schema together with its dimension and fact tables. Tables are
/// sets: duplicate rows collapse on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Warehouse {
    schema: StarSchemaDef,
    dim_tables: Vec<Vec<Tuple>>,
    fact_table: Vec<Tuple>,
}

impl Warehouse {
    /// Assembles a warehouse without validating it (see
    /// [`validate_warehouse`]). Rows are sorted and deduplicated.
    pub fn new(schema: StarSchemaDef, dim_tables: Vec<Vec<Tuple>>, fact_table: Vec<Tuple>) -> Result<Self> {
        if dim_tables.len() != schema.dimensions().len() {
            return Err(Error::InvalidWarehouse(format!(
                "expected {} dimension tables, got {}",
                schema.dimensions().len(),
                dim_tables.len()
            )));
        }
        let dedup = |rows: Vec<Tuple>| -> Vec<Tuple> {
            let set: BTreeSet<Tuple> = rows.into_iter().collect();
            set.into_iter().collect()
        };
        Ok(Warehouse {
            schema,
            dim_tables: dim_tables.into_iter().map(dedup).collect(),
            fact_table: dedup(fact_table),
        })
    }

    /// Assembles and validates, failing with `InvalidWarehouse` on the first
    /// violation.
    pub fn new_validated(schema: StarSchemaDef, dim_tables: Vec<Vec<Tuple>>, fact_table: Vec<Tuple>) -> Result<Self> {
        let w = Self::new(schema, dim_tables, fact_table)?;
        match validate_warehouse(&w) {
            Ok(()) => Ok(w),
            Err(v) => Err(Error::InvalidWarehouse(format!("{}", v[0]))),
        }
    }

    /// The schema.
    pub fn schema(&self) -> &StarSchemaDef {
        &self.schema
    }

    /// Dimension table `i`.
    pub fn dim_table(&self, i: usize) -> &[Tuple] {
        &self.dim_tables[i]
    }

    /// All dimension tables.
    pub fn dim_tables(&self) -> &[Vec<Tuple>] {
        &self.dim_tables
    }

    /// The fact table.
    pub fn fact_table(&self) -> &[Tuple] {
        &self.fact_table
    }

    /// `W = Σ|Dᵢ| + |F|`.
    pub fn size(&self) -> usize {
        self.dim_tables.iter().map(Vec::len).sum::<usize>() + self.fact_table.len()
    }

    /// Same tables under a schema with a different `measure_fds` flag.
    pub fn with_measure_fds(&self, measure_fds: bool) -> Warehouse {
        Warehouse {
            schema: self.schema.with_measure_fds(measure_fds),
            dim_tables: self.dim_tables.clone(),
            fact_table: self.fact_table.clone(),
        }
    }

    /// Active domain of every attribute, indexed by attribute id.
    pub fn active_domains(&self) -> Vec<ValueSet> {
        let mut out: Vec<BTreeSet<Value>> = alloc::vec![BTreeSet::new(); self.schema.universe().len()];
        for t in self.dim_tables.iter().flatten().chain(self.fact_table.iter()) {
            for (a, v) in t.iter() {
                out[a.index()].insert(v.clone());
            }
        }
        out.into_iter().map(ValueSet::from_values).collect()
    }
}

fn check_row(schema: &StarSchemaDef, table: TableRef, row: usize, t: &Tuple, allowed: &[AttrId], out: &mut Vec<Violation>) {
    let u = schema.universe();
    for (a, v) in t.iter() {
        let name = String::from(u.name(a));
        if !allowed.contains(&a) {
            out.push(Violation { table, row, kind: ViolationKind::ForeignAttribute { attribute: name } });
            continue;
        }
        if v.value_type() != u.info(a).ty {
            out.push(Violation { table, row, kind: ViolationKind::TypeMismatch { attribute: name } });
        } else if let Value::Float(f) = v {
            if !f.is_finite() {
                out.push(Violation { table, row, kind: ViolationKind::NonFinite { attribute: name } });
            }
        }
    }
}

/// Checks both missing-value restrictions and declared types. Returns all
/// violations found.
pub fn validate_warehouse(w: &Warehouse) -> core::result::Result<(), Vec<Violation>> {
    let schema = w.schema();
    let layout = schema.layout();
    let mut out = Vec::new();
    for (i, rows) in w.dim_tables().iter().enumerate() {
        let allowed = schema.dim_schema(i);
        for (r, t) in rows.iter().enumerate() {
            check_row(schema, TableRef::Dim(i), r, t, &allowed, &mut out);
            let has_key = t.defines(layout.keys[i]);
            let has_non_key = layout.non_keys[i].iter().any(|a| t.defines(*a));
            if !has_key || !has_non_key {
                out.push(Violation { table: TableRef::Dim(i), row: r, kind: ViolationKind::Restriction1 });
            }
        }
    }
    let allowed = schema.fact_schema();
    for (r, t) in w.fact_table().iter().enumerate() {
        check_row(schema, TableRef::Fact, r, t, &allowed, &mut out);
        let has_keys = t.defines_all(&layout.keys);
        let has_measure = layout.measures.iter().any(|a| t.defines(*a));
        if !has_keys || !has_measure {
            out.push(Violation { table: TableRef::Fact, row: r, kind: ViolationKind::Restriction2 });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// The star-table: every warehouse row over the full universe, missing
/// values left unbound. Dimension rows come first, then fact rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StarTable {
    /// Rows with their source table.
    pub rows: Vec<(TableRef, Tuple)>,
}

impl StarTable {
    /// The rows without provenance.
    pub fn tuples(&self) -> Vec<Tuple> {
        self.rows.iter().map(|(_, t)| t.clone()).collect()
    }
}

/// Builds the star-table of a validated warehouse.
pub fn build_star_table(w: &Warehouse) -> Result<StarTable> {
    if let Err(v) = validate_warehouse(w) {
        return Err(Error::InvalidWarehouse(format!("{}", v[0])));
    }
    let mut rows = Vec::with_capacity(w.size());
    for (i, table) in w.dim_tables().iter().enumerate() {
        rows.extend(table.iter().map(|t| (TableRef::Dim(i), t.clone())));
    }
    rows.extend(w.fact_table().iter().map(|t| (TableRef::Fact, t.clone())));
    Ok(StarTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn abc() -> (Universe, AttrId, AttrId, AttrId) {
        let u = Universe::plain(&["A", "B", "C"]).unwrap();
        (u, AttrId(0), AttrId(1), AttrId(2))
    }

    #[test]
    fn restrict_projects_and_rejects_undefined() {
        let (_, a, b, c) = abc();
        let t = Tuple::from_pairs([(a, Value::text("a")), (b, Value::text("b")), (c, Value::text("c"))]);
        let r = t.restrict(&[c, a]).unwrap();
        assert_eq!(r, Tuple::from_pairs([(a, Value::text("a")), (c, Value::text("c"))]));
        assert_eq!(t.restrict(&t.schema()).unwrap(), t);
        assert!(matches!(r.restrict(&[b]), Err(Error::AttributeNotDefined(_))));
    }

    #[test]
    fn subsumption_and_union() {
        let (_, a, b, c) = abc();
        let s = |vals: &[&str]| ValueSet::from_values(vals.iter().map(|v| Value::text(v)));
        let sigma = MTuple::from_components([(a, s(&["a", "a'"])), (b, s(&["b"]))]);
        let small = MTuple::from_components([(a, s(&["a"]))]);
        assert!(small.is_subsumed_by(&sigma));
        assert!(sigma.is_subsumed_by(&sigma));
        let ab = MTuple::from_components([(a, s(&["a"])), (b, s(&["b"]))]);
        assert!(!ab.is_subsumed_by(&small));
        assert_eq!(sigma.union(&small), sigma);
        let other = MTuple::from_components([(a, s(&["a"])), (b, s(&["b", "b'"])), (c, s(&["c"]))]);
        let expected = MTuple::from_components([(a, s(&["a", "a'"])), (b, s(&["b", "b'"])), (c, s(&["c"]))]);
        assert_eq!(sigma.union(&other), expected);
    }

    #[test]
    fn enumerate_cross_product() {
        let (_, a, b, c) = abc();
        let s = |vals: &[&str]| ValueSet::from_values(vals.iter().map(|v| Value::text(v)));
        let sigma = MTuple::from_components([(a, s(&["a"])), (b, s(&["b"])), (c, s(&["c", "c'"]))]);
        let ts = sigma.enumerate(&[a, b, c]).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(sigma.enumerate(&[]).unwrap(), vec![Tuple::empty()]);
        assert!(sigma.enumerate(&[AttrId(7)]).is_err());
    }

    #[test]
    fn fd_checks() {
        let (u, a, b, c) = abc();
        assert!(check_fds(&u, &[Fd::new([a], c), Fd::new([b], c)]).is_ok());
        assert!(check_fds(&u, &[Fd::new([a], b), Fd::new([b], a)]).is_err());
        assert!(check_fds(&u, &[Fd::new([a], a)]).is_err());
    }
}
