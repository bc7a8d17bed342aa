//! Plain values and finite multisets.

use std::collections::BTreeMap;
use std::fmt;

use crate::ast::Type;

/// A plain value.
///
/// The derived ordering (kind first, then contents) is the canonical total
/// order used to lay out bag elements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    /// Fields sorted by name.
    Record(Vec<(String, Value)>),
    Bag(Bag),
}

/// A finite multiset kept as a sorted map from element to multiplicity.
/// Multiplicities are always at least one.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bag(BTreeMap<Value, usize>);

impl Bag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: Value, count: usize) {
        if count > 0 {
            *self.0.entry(v).or_insert(0) += count;
        }
    }

    /// Number of elements, counting multiplicity.
    pub fn len(&self) -> usize {
        self.0.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.0.contains_key(v)
    }

    pub fn multiplicity(&self, v: &Value) -> usize {
        self.0.get(v).copied().unwrap_or(0)
    }

    /// Distinct elements with their multiplicities, in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (&Value, usize)> {
        self.0.iter().map(|(v, n)| (v, *n))
    }

    /// All elements in canonical order, duplicates repeated.
    pub fn iter(&self) -> impl Iterator<Item = &Value> {
        self.0.iter().flat_map(|(v, n)| std::iter::repeat_n(v, *n))
    }

    pub fn union(&self, other: &Bag) -> Bag {
        let mut out = self.clone();
        for (v, n) in other.entries() {
            out.insert(v.clone(), n);
        }
        out
    }

    /// Keeps every element of `self` that does not occur in `other` at all.
    /// Survivors keep their multiplicity.
    pub fn difference(&self, other: &Bag) -> Bag {
        Bag(self
            .0
            .iter()
            .filter(|(v, _)| !other.contains(v))
            .map(|(v, n)| (v.clone(), *n))
            .collect())
    }
}

impl FromIterator<Value> for Bag {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut bag = Bag::new();
        for v in iter {
            bag.insert(v, 1);
        }
        bag
    }
}

impl Value {
    /// Builds a record value with fields sorted by name.
    pub fn record(mut fields: Vec<(String, Value)>) -> Value {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        Value::Record(fields)
    }

    pub fn bag<I: IntoIterator<Item = Value>>(elems: I) -> Value {
        Value::Bag(elems.into_iter().collect())
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(fs) => fs.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Whether the value inhabits `ty`.
    pub fn has_type(&self, ty: &Type) -> bool {
        match (self, ty) {
            (Value::Int(_), Type::Int) | (Value::Bool(_), Type::Bool) => true,
            (Value::Record(vs), Type::Record(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|((n, v), (m, t))| n == m && v.has_type(t))
            }
            (Value::Bag(b), Type::Bag(t)) => b.entries().all(|(v, _)| v.has_type(t)),
            _ => false,
        }
    }
}

/// Multiset-aware structural equality.
pub fn value_eq(a: &Value, b: &Value) -> bool {
    a == b
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Record(fs) => {
                f.write_str("(")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {v}")?;
                }
                f.write_str(")")
            }
            Value::Bag(b) => {
                f.write_str("{")?;
                for (i, v) in b.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i64]) -> Value {
        Value::bag(xs.iter().map(|&i| Value::Int(i)))
    }

    #[test]
    fn multiset_equality() {
        assert!(value_eq(&ints(&[1, 2]), &ints(&[2, 1])));
        assert!(!value_eq(&ints(&[1, 1]), &ints(&[1])));
        let r = || Value::record(vec![("B".into(), Value::Int(2)), ("A".into(), Value::Int(1))]);
        assert!(value_eq(&r(), &r()));
    }

    #[test]
    fn difference_removes_all_copies() {
        let Value::Bag(a) = ints(&[1, 1, 2, 3]) else {
            unreachable!()
        };
        let Value::Bag(b) = ints(&[1]) else { unreachable!() };
        assert_eq!(Value::Bag(a.difference(&b)), ints(&[2, 3]));
    }

    #[test]
    fn canonical_iteration_order() {
        let Value::Bag(b) = ints(&[3, 1, 2, 1]) else {
            unreachable!()
        };
        let order: Vec<_> = b.iter().cloned().collect();
        assert_eq!(
            order,
            vec![Value::Int(1), Value::Int(1), Value::Int(2), Value::Int(3)]
        );
        assert_eq!(b.len(), 4);
        assert_eq!(ints(&[2, 1]).to_string(), "{1, 2}");
    }
}
