//! Ordered abelian cost groups.
//!
//! Costs live in an ordered abelian group: integers under addition, or
//! fixed-arity integer vectors under componentwise addition with the
//! lexicographic order. The order is translation invariant, so comparing
//! two priorities is unchanged by adding a common offset; that property is
//! what lets the heaps store priorities as differences along tree paths.
//!
//! All arithmetic is checked. Overflow is reported as an error, never
//! wrapped.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which group a machine's costs are drawn from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    /// Integers with addition, identity 0, natural order.
    Int,
    /// Integer vectors of a fixed arity with componentwise addition,
    /// identity zero vector, lexicographic order.
    IntVec { arity: usize },
}

impl GroupSpec {
    /// The neutral element.
    pub fn identity(&self) -> GroupValue {
        match self {
            GroupSpec::Int => GroupValue::Int(0),
            GroupSpec::IntVec { arity } => GroupValue::Vec(vec![0; *arity].into()),
        }
    }

    /// Whether `v` is an element of this group.
    pub fn conforms(&self, v: &GroupValue) -> bool {
        match (self, v) {
            (GroupSpec::Int, GroupValue::Int(_)) => true,
            (GroupSpec::IntVec { arity }, GroupValue::Vec(xs)) => xs.len() == *arity,
            _ => false,
        }
    }

    /// Human-readable shape, used in diagnostics.
    pub fn describe(&self) -> String {
        match self {
            GroupSpec::Int => "int".into(),
            GroupSpec::IntVec { arity } => format!("int_vec[{arity}]"),
        }
    }
}

/// One cost value. Values of different shapes never mix inside a structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupValue {
    Int(i64),
    Vec(Box<[i64]>),
}

impl GroupValue {
    pub fn vec(xs: impl Into<Box<[i64]>>) -> Self {
        GroupValue::Vec(xs.into())
    }

    /// Shape description for diagnostics.
    pub fn shape(&self) -> String {
        match self {
            GroupValue::Int(_) => "int".into(),
            GroupValue::Vec(xs) => format!("int_vec[{}]", xs.len()),
        }
    }

    /// Whether two values belong to the same group.
    pub fn same_shape(&self, other: &GroupValue) -> bool {
        match (self, other) {
            (GroupValue::Int(_), GroupValue::Int(_)) => true,
            (GroupValue::Vec(a), GroupValue::Vec(b)) => a.len() == b.len(),
            _ => false,
        }
    }

    fn mismatch(&self, rhs: &GroupValue) -> Error {
        Error::ArityMismatch { left: self.shape(), right: rhs.shape() }
    }

    /// Group operation: checked (componentwise) addition.
    pub fn op(&self, rhs: &GroupValue) -> Result<GroupValue> {
        match (self, rhs) {
            (GroupValue::Int(a), GroupValue::Int(b)) => {
                a.checked_add(*b).map(GroupValue::Int).ok_or(Error::Overflow)
            }
            (GroupValue::Vec(a), GroupValue::Vec(b)) if a.len() == b.len() => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| x.checked_add(*y).ok_or(Error::Overflow))
                .collect::<Result<Box<[i64]>>>()
                .map(GroupValue::Vec),
            _ => Err(self.mismatch(rhs)),
        }
    }

    /// Group inverse: checked negation.
    pub fn inverse(&self) -> Result<GroupValue> {
        match self {
            GroupValue::Int(a) => a.checked_neg().map(GroupValue::Int).ok_or(Error::Overflow),
            GroupValue::Vec(xs) => xs
                .iter()
                .map(|x| x.checked_neg().ok_or(Error::Overflow))
                .collect::<Result<Box<[i64]>>>()
                .map(GroupValue::Vec),
        }
    }

    /// `self ⊕ rhs⁻¹`, the difference used for priority rebasing.
    pub fn minus(&self, rhs: &GroupValue) -> Result<GroupValue> {
        self.op(&rhs.inverse()?)
    }

    /// Total order: numeric for ints, lexicographic for equal-arity vectors.
    pub fn compare(&self, rhs: &GroupValue) -> Result<Ordering> {
        match (self, rhs) {
            (GroupValue::Int(a), GroupValue::Int(b)) => Ok(a.cmp(b)),
            (GroupValue::Vec(a), GroupValue::Vec(b)) if a.len() == b.len() => Ok(a.cmp(b)),
            _ => Err(self.mismatch(rhs)),
        }
    }

    /// The identity of the group `self` belongs to.
    pub fn identity_like(&self) -> GroupValue {
        match self {
            GroupValue::Int(_) => GroupValue::Int(0),
            GroupValue::Vec(xs) => GroupValue::Vec(vec![0; xs.len()].into()),
        }
    }

    /// Whether this value is its group's identity.
    pub fn is_identity(&self) -> bool {
        match self {
            GroupValue::Int(a) => *a == 0,
            GroupValue::Vec(xs) => xs.iter().all(|x| *x == 0),
        }
    }
}

impl fmt::Display for GroupValue {
    /// Ints render bare (`3`), vectors parenthesized (`(1,2)`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupValue::Int(a) => write!(f, "{a}"),
            GroupValue::Vec(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}
