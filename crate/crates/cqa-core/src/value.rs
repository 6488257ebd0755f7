//! Typed constants and the sorted value sets that form m-tuple components.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Declared type of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    /// 64-bit signed integer.
    Int,
    /// 64-bit float (finite values only).
    Float,
    /// UTF-8 text.
    Text,
}

impl ValueType {
    /// Lower-case name used in manifests (`int`, `float`, `text`).
    pub fn name(self) -> &'static str {
        match self {
            ValueType::Int => "int",
            ValueType::Float => "float",
            ValueType::Text => "text",
        }
    }

    /// Parses a manifest type name.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "int" => Some(ValueType::Int),
            "float" => Some(ValueType::Float),
            "text" => Some(ValueType::Text),
            _ => None,
        }
    }

    /// Whether values of this type can be summed.
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueType::Int | ValueType::Float)
    }
}

/// A tagged constant. Values are totally ordered: first by tag
/// (`Int < Float < Text`), then within the tag.
#[derive(Debug, Clone)]
pub enum Value {
    /// Integer constant.
    Int(i64),
    /// Float constant.
    Float(f64),
    /// Text constant.
    Text(String),
}

impl Value {
    /// Builds a text value.
    pub fn text(s: &str) -> Self {
        Value::Text(String::from(s))
    }

    /// The value's tag.
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Float(_) => ValueType::Float,
            Value::Text(_) => ValueType::Text,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Text(_) => 2,
        }
    }

    /// Numeric view of the value, if any.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            Value::Text(_) => None,
        }
    }

    /// Comparison used by selection conditions: same-tag values compare
    /// natively, integers and floats compare numerically, anything else is
    /// incomparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            (Value::Float(a), Value::Float(b)) => a.partial_cmp(b),
            (Value::Int(a), Value::Float(b)) => (*a as f64).partial_cmp(b),
            (Value::Float(a), Value::Int(b)) => a.partial_cmp(&(*b as f64)),
            _ => None,
        }
    }

    /// Numeric addition; integer overflow degrades to float.
    pub fn add(&self, other: &Value) -> Option<Value> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(match a.checked_add(*b) {
                Some(s) => Value::Int(s),
                None => Value::Float(*a as f64 + *b as f64),
            }),
            _ => Some(Value::Float(self.as_f64()? + other.as_f64()?)),
        }
    }

    /// True iff the value is numeric and strictly negative.
    pub fn is_negative(&self) -> bool {
        self.as_f64().is_some_and(|f| f < 0.0)
    }

    /// True iff the value is numeric and strictly positive.
    pub fn is_positive(&self) -> bool {
        self.as_f64().is_some_and(|f| f > 0.0)
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            _ => self.tag().cmp(&other.tag()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::text(v)
    }
}

/// A sorted, duplicate-free set of values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct ValueSet(Vec<Value>);

impl ValueSet {
    /// The empty set.
    pub fn new() -> Self {
        ValueSet(Vec::new())
    }

    /// A one-element set.
    pub fn singleton(v: Value) -> Self {
        ValueSet(alloc::vec![v])
    }

    /// Builds a set from arbitrary values (sorted and deduplicated).
    pub fn from_values<I: IntoIterator<Item = Value>>(values: I) -> Self {
        let mut v: Vec<Value> = values.into_iter().collect();
        v.sort();
        v.dedup();
        ValueSet(v)
    }

    /// Number of values.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True iff the set has no values.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The single element when `len() == 1`.
    pub fn as_singleton(&self) -> Option<&Value> {
        if self.0.len() == 1 {
            self.0.first()
        } else {
            None
        }
    }

    /// Membership test.
    pub fn contains(&self, v: &Value) -> bool {
        self.0.binary_search(v).is_ok()
    }

    /// Inserts a value, keeping order.
    pub fn insert(&mut self, v: Value) -> bool {
        match self.0.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, v);
                true
            }
        }
    }

    /// In-place union; returns whether the set grew.
    pub fn union_with(&mut self, other: &ValueSet) -> bool {
        let before = self.0.len();
        for v in &other.0 {
            self.insert(v.clone());
        }
        self.0.len() != before
    }

    /// Set union.
    pub fn union(&self, other: &ValueSet) -> ValueSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// Set intersection.
    pub fn intersection(&self, other: &ValueSet) -> ValueSet {
        ValueSet(self.0.iter().filter(|v| other.contains(v)).cloned().collect())
    }

    /// True iff the two sets share at least one value.
    pub fn meets(&self, other: &ValueSet) -> bool {
        self.0.iter().any(|v| other.contains(v))
    }

    /// Inclusion test.
    pub fn is_subset(&self, other: &ValueSet) -> bool {
        self.0.iter().all(|v| other.contains(v))
    }

    /// Values in ascending order.
    pub fn iter(&self) -> core::slice::Iter<'_, Value> {
        self.0.iter()
    }

    /// Smallest value.
    pub fn smallest(&self) -> Option<&Value> {
        self.0.first()
    }

    /// Largest value.
    pub fn largest(&self) -> Option<&Value> {
        self.0.last()
    }

    /// Underlying sorted slice.
    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }
}

impl FromIterator<Value> for ValueSet {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        ValueSet::from_values(iter)
    }
}

impl<'a> IntoIterator for &'a ValueSet {
    type Item = &'a Value;
    type IntoIter = core::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_by_tag_then_value() {
        assert!(Value::Int(100) < Value::Float(-1.0));
        assert!(Value::Float(2.5) < Value::text("a"));
        assert!(Value::text("a") < Value::text("b"));
        assert_eq!(Value::Float(0.5), Value::Float(0.5));
    }

    #[test]
    fn condition_comparison_coerces_numbers_only() {
        assert_eq!(Value::Int(2).compare(&Value::Float(2.0)), Some(Ordering::Equal));
        assert_eq!(Value::Int(2).compare(&Value::text("2")), None);
    }

    #[test]
    fn add_overflows_to_float() {
        let v = Value::Int(i64::MAX).add(&Value::Int(1)).unwrap();
        assert_eq!(v.value_type(), ValueType::Float);
        assert_eq!(Value::Int(2).add(&Value::Int(3)), Some(Value::Int(5)));
        assert_eq!(Value::text("a").add(&Value::Int(3)), None);
    }

    #[test]
    fn value_set_operations() {
        let a = ValueSet::from_values([Value::Int(3), Value::Int(1), Value::Int(3)]);
        assert_eq!(a.len(), 2);
        let b = ValueSet::singleton(Value::Int(1));
        assert!(b.is_subset(&a));
        assert!(a.meets(&b));
        assert_eq!(a.intersection(&b), b);
        assert_eq!(a.union(&b), a);
        assert_eq!(a.smallest(), Some(&Value::Int(1)));
        assert_eq!(a.largest(), Some(&Value::Int(3)));
    }
}
