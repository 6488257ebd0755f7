//! Repairs: maximal dependency-satisfying tables whose true tuples lie
//! between the consistent and the true tuples of the input.
//!
//! Every repair arises from a choice function that keeps one value per
//! conflicting component: one value of `Aᵢʲ` per key value `kᵢ` and one value
//! of `Mₗ` per `𝕂`-value. The repair then consists of one anchor row per
//! m-tuple (its components resolved by the choices) together with all
//! consistent tuples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chase::{expand, m_chase_generic, ChaseResult, TableContext};
use crate::classify::{cons_all, cons_maximal_tuples, true_all};
use crate::error::{Error, Result};
use crate::model::{AttrId, Role, Tuple};
use crate::value::{Value, ValueSet};

/// Default bound on the number of choice functions.
pub const DEFAULT_REPAIR_LIMIT: u128 = 10_000;

/// A conflicting component shared by all m-tuples with the same
/// determinant: the attribute `A`, the value `x` of the left-hand side that
/// determines it, and the candidate values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChoicePoint {
    /// Attribute whose value is chosen.
    pub attr: AttrId,
    /// Determinant value (a `Kᵢ`-value or a `𝕂`-value in star tables).
    pub determinant: Tuple,
    /// Candidate values.
    pub values: ValueSet,
}

/// One value per choice point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChoiceFunction {
    picks: Vec<(AttrId, Tuple, Value)>,
}

impl ChoiceFunction {
    /// Chosen value for attribute `attr` under determinant `determinant`.
    pub fn get(&self, attr: AttrId, determinant: &Tuple) -> Option<&Value> {
        self.picks.iter().find(|(a, d, _)| *a == attr && d == determinant).map(|(_, _, v)| v)
    }

    /// All picks, in choice-point order.
    pub fn picks(&self) -> &[(AttrId, Tuple, Value)] {
        &self.picks
    }

    /// Number of choice points.
    pub fn len(&self) -> usize {
        self.picks.len()
    }

    /// True iff there is no conflicting component.
    pub fn is_empty(&self) -> bool {
        self.picks.is_empty()
    }
}

/// A repair: one anchor row per m-tuple plus, implicitly, every consistent
/// tuple of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    /// One resolved row per m-tuple.
    pub anchor_rows: BTreeSet<Tuple>,
    /// The choice function that produced the anchors, if any.
    pub choice: Option<ChoiceFunction>,
    with_cons: bool,
}

impl Repair {
    /// Treats an arbitrary table as a repair candidate (for verification):
    /// its rows are taken as they are, without adding consistent tuples.
    pub fn from_rows(rows: impl IntoIterator<Item = Tuple>) -> Self {
        Repair { anchor_rows: rows.into_iter().collect(), choice: None, with_cons: false }
    }

    /// The rows of the repair table: the anchors and, for repairs built from
    /// a choice function, the maximal consistent tuples.
    pub fn rows(&self, chase: &ChaseResult, cap: usize) -> Result<Vec<Tuple>> {
        if self.with_cons {
            Ok(self.rows_with(&cons_maximal_tuples(chase, cap)?))
        } else {
            Ok(self.anchor_rows.iter().cloned().collect())
        }
    }

    /// [`Repair::rows`] with the maximal consistent tuples supplied by the
    /// caller, so that they are computed once for many repairs.
    pub fn rows_with(&self, cons_maximal: &BTreeSet<Tuple>) -> Vec<Tuple> {
        let mut rows: BTreeSet<Tuple> = self.anchor_rows.clone();
        if self.with_cons {
            rows.extend(cons_maximal.iter().cloned());
        }
        rows.into_iter().collect()
    }

    /// The maximal tuples of `True(𝓡)`: the rows of the chased repair
    /// table. The chase propagates the repair's chosen values into
    /// consistent rows sharing a key, so these can be strictly larger than
    /// the rows themselves. Every tuple of `True(𝓡)` is a sub-tuple of one
    /// of them.
    pub fn chased_rows_with(&self, chase: &ChaseResult, cons_maximal: &BTreeSet<Tuple>) -> Result<Vec<Tuple>> {
        let rows = self.rows_with(cons_maximal);
        Ok(expand(&m_chase_generic(&rows, &generic_context(chase))?))
    }

    /// `True(𝓡)`: every nonempty sub-tuple of a tuple of the chased repair
    /// table. Exponential; desk scale only.
    pub fn true_set(&self, chase: &ChaseResult, cap: usize) -> Result<BTreeSet<Tuple>> {
        let rows = self.rows(chase, cap)?;
        let chased = m_chase_generic(&rows, &generic_context(chase))?;
        true_all(&chased, cap)
    }
}

fn generic_context(chase: &ChaseResult) -> TableContext {
    let mut ctx = chase.context().clone();
    ctx.star = None;
    ctx
}

/// The repair space of a chase: its choice points and, for each m-tuple and
/// multi-valued attribute, the point that resolves it.
#[derive(Debug, Clone)]
pub struct RepairSpace {
    points: Vec<ChoicePoint>,
    slots: BTreeMap<(usize, AttrId), usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = i;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl RepairSpace {
    /// Collects the choice points of `chase`.
    pub fn new(chase: &ChaseResult) -> Result<Self> {
        // Nodes are (dependency, determinant value); all nodes resolving the
        // same multi-valued component of one m-tuple are merged.
        let mut node_ids: BTreeMap<(usize, Tuple), usize> = BTreeMap::new();
        let mut node_keys: Vec<(usize, Tuple)> = Vec::new();
        let mut per_slot: Vec<((usize, AttrId), Vec<usize>)> = Vec::new();
        for (si, sigma) in chase.m_tuples().iter().enumerate() {
            let schema = sigma.schema();
            for (a, comp) in sigma.iter() {
                if comp.len() < 2 {
                    continue;
                }
                let mut nodes = Vec::new();
                for (fi, fd) in chase.fds().iter().enumerate() {
                    if fd.rhs != a || !fd.lhs.iter().all(|x| schema.contains(x)) {
                        continue;
                    }
                    let det = sigma.enumerate(&fd.lhs)?;
                    if det.len() != 1 {
                        return Err(Error::Invariant(format!(
                            "determinant of `{}` is multi-valued",
                            chase.universe().name(a)
                        )));
                    }
                    let key = (fi, det.into_iter().next().unwrap_or_default());
                    let id = *node_ids.entry(key.clone()).or_insert_with(|| {
                        node_keys.push(key);
                        node_keys.len() - 1
                    });
                    nodes.push(id);
                }
                if nodes.is_empty() {
                    return Err(Error::Invariant(format!(
                        "multi-valued component `{}` is not determined by any dependency",
                        chase.universe().name(a)
                    )));
                }
                per_slot.push(((si, a), nodes));
            }
        }
        let mut uf = UnionFind((0..node_keys.len()).collect());
        for (_, nodes) in &per_slot {
            for w in nodes.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        // One choice point per class; its determinant is the class's
        // smallest node.
        let mut class_point: BTreeMap<usize, ChoicePoint> = BTreeMap::new();
        let mut slot_class: BTreeMap<(usize, AttrId), usize> = BTreeMap::new();
        for ((si, a), nodes) in &per_slot {
            let root = uf.find(nodes[0]);
            let comp = chase.m_tuples()[*si].get(*a).cloned().unwrap_or_default();
            let det = nodes.iter().map(|n| &node_keys[*n]).min().map(|(_, t)| t.clone()).unwrap_or_default();
            match class_point.get_mut(&root) {
                Some(p) => {
                    if p.values != comp {
                        return Err(Error::Invariant(format!(
                            "m-tuples sharing a determinant disagree on `{}`",
                            chase.universe().name(*a)
                        )));
                    }
                    if det < p.determinant {
                        p.determinant = det;
                    }
                }
                None => {
                    class_point.insert(root, ChoicePoint { attr: *a, determinant: det, values: comp });
                }
            }
            slot_class.insert((*si, *a), root);
        }
        let rank = |a: AttrId| match chase.universe().info(a).role {
            Role::NonKey { dim } | Role::Key { dim } => dim,
            Role::Measure => usize::MAX,
            Role::Plain => 0,
        };
        let mut classes: Vec<(usize, ChoicePoint)> = class_point.into_iter().collect();
        classes.sort_by(|(_, p), (_, q)| {
            (rank(p.attr), &p.determinant, p.attr).cmp(&(rank(q.attr), &q.determinant, q.attr))
        });
        let position: BTreeMap<usize, usize> = classes.iter().enumerate().map(|(i, (root, _))| (*root, i)).collect();
        let slots = slot_class.into_iter().map(|(k, root)| (k, position[&root])).collect();
        Ok(RepairSpace { points: classes.into_iter().map(|(_, p)| p).collect(), slots })
    }

    /// Choice points in enumeration order: dimension attributes by
    /// dimension, then measures; within those by determinant and attribute.
    pub fn points(&self) -> &[ChoicePoint] {
        &self.points
    }

    /// Number of choice functions (saturating).
    pub fn size(&self) -> u128 {
        self.points.iter().fold(1u128, |acc, p| acc.saturating_mul(p.values.len() as u128))
    }

    /// Fails with `RepairSpaceTooLarge` when the space exceeds `limit`.
    pub fn check_limit(&self, limit: u128) -> Result<()> {
        let size = self.size();
        if size > limit {
            return Err(Error::RepairSpaceTooLarge { size, limit });
        }
        Ok(())
    }

    /// All choice functions. The first choice point varies fastest.
    pub fn choice_functions(&self) -> ChoiceIter<'_> {
        ChoiceIter { space: self, counters: alloc::vec![0; self.points.len()], done: false }
    }

    /// Builds the repair for `phi` (Step P3: resolve every m-tuple).
    pub fn build(&self, chase: &ChaseResult, phi: &ChoiceFunction) -> Result<Repair> {
        if phi.picks.len() != self.points.len() {
            return Err(Error::InvalidChoice(format!(
                "expected {} choices, got {}",
                self.points.len(),
                phi.picks.len()
            )));
        }
        for ((a, d, v), p) in phi.picks.iter().zip(&self.points) {
            if *a != p.attr || *d != p.determinant || !p.values.contains(v) {
                return Err(Error::InvalidChoice(String::from("choice does not match its choice point")));
            }
        }
        let mut anchors = BTreeSet::new();
        for (si, sigma) in chase.m_tuples().iter().enumerate() {
            let mut pairs = Vec::new();
            for (a, comp) in sigma.iter() {
                let v = match comp.as_singleton() {
                    Some(v) => v.clone(),
                    None => {
                        let p = self.slots.get(&(si, a)).ok_or_else(|| {
                            Error::Invariant(String::from("multi-valued component without choice point"))
                        })?;
                        phi.picks[*p].2.clone()
                    }
                };
                pairs.push((a, v));
            }
            anchors.insert(Tuple::from_pairs(pairs));
        }
        Ok(Repair { anchor_rows: anchors, choice: Some(phi.clone()), with_cons: true })
    }
}

/// Iterator over the choice functions of a [`RepairSpace`].
pub struct ChoiceIter<'a> {
    space: &'a RepairSpace,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for ChoiceIter<'_> {
    type Item = ChoiceFunction;

    fn next(&mut self) -> Option<ChoiceFunction> {
        if self.done {
            return None;
        }
        let points = &self.space.points;
        let picks = points
            .iter()
            .zip(&self.counters)
            .map(|(p, c)| (p.attr, p.determinant.clone(), p.values.as_slice()[*c].clone()))
            .collect();
        // Advance the odometer, first position fastest.
        let mut i = 0;
        loop {
            if i == points.len() {
                self.done = true;
                break;
            }
            self.counters[i] += 1;
            if self.counters[i] < points[i].values.len() {
                break;
            }
            self.counters[i] = 0;
            i += 1;
        }
        Some(ChoiceFunction { picks })
    }
}

/// All choice functions of `chase`, bounded by `limit`.
pub fn enumerate_choice_functions(chase: &ChaseResult, limit: u128) -> Result<Vec<ChoiceFunction>> {
    let space = RepairSpace::new(chase)?;
    space.check_limit(limit)?;
    Ok(space.choice_functions().collect())
}

/// Builds the repair of `chase` for `phi`.
pub fn build_repair(chase: &ChaseResult, phi: &ChoiceFunction) -> Result<Repair> {
    RepairSpace::new(chase)?.build(chase, phi)
}

/// All repairs of `chase`, bounded by `limit`.
pub fn enumerate_repairs(chase: &ChaseResult, limit: u128) -> Result<Vec<Repair>> {
    let space = RepairSpace::new(chase)?;
    space.check_limit(limit)?;
    space.choice_functions().map(|phi| space.build(chase, &phi)).collect()
}

/// True iff the rows satisfy every dependency (their chase has only
/// singleton components).
pub fn satisfies_fds(rows: &[Tuple], ctx: &TableContext) -> Result<bool> {
    Ok(m_chase_generic(rows, ctx)?.m_tuples().iter().all(|m| m.max_component() <= 1))
}

/// Checks the repair conditions for `r`: its rows satisfy the dependencies,
/// `Cons(𝒯) ⊆ True(𝓡) ⊆ True(𝒯)`, and adding any true tuple it lacks would
/// violate a dependency. Desk scale only.
pub fn verify_repair(chase: &ChaseResult, r: &Repair, cap: usize) -> Result<bool> {
    let ctx = generic_context(chase);
    let rows = r.rows(chase, cap)?;
    if !satisfies_fds(&rows, &ctx)? {
        return Ok(false);
    }
    let true_r = r.true_set(chase, cap)?;
    let true_t = true_all(chase, cap)?;
    let cons = cons_all(chase, cap)?;
    if !cons.is_subset(&true_r) || !true_r.is_subset(&true_t) {
        return Ok(false);
    }
    // Only ⊑-minimal missing tuples need checking: a violation caused by a
    // sub-tuple persists in every super-tuple.
    for t in true_t.difference(&true_r) {
        let minimal = t.schema().into_iter().all(|a| {
            let s = t.without(a);
            s.is_empty() || true_r.contains(&s)
        });
        if !minimal {
            continue;
        }
        let mut extended = rows.clone();
        extended.push(t.clone());
        if satisfies_fds(&extended, &ctx)? {
            return Ok(false);
        }
    }
    Ok(true)
}
