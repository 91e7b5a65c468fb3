//! Numeric abstractions shared by the cut engines and the cost model.
//!
//! Attack design only ever adds and compares weights, so it runs over any
//! ordered number type: `f32`, `f64`, or exact rationals. The estimator
//! needs a real field and is bound on [`nalgebra::RealField`] instead.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::Add;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Ordered number type usable as an edge weight or attack cost.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Absolute slack under which two weights count as tied.
    fn tie_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }
}

impl Scalar for f64 {
    fn tie_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn tie_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for Ratio<i64> {
    fn tie_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Scalar for Ratio<i128> {
    fn tie_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

/// Compares two scalars, treating differences within the tie tolerance as equal.
pub fn cmp_tol<W: Scalar>(a: W, b: W) -> Ordering {
    let tol = W::tie_tolerance();
    if a + tol < b {
        Ordering::Less
    } else if b + tol < a {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

/// Edge weight that may be infinite. `Infinite` absorbs addition.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight<W> {
    Finite(W),
    Infinite,
}

impl<W: Scalar> Weight<W> {
    pub fn zero() -> Self {
        Weight::Finite(W::zero())
    }

    pub fn one() -> Self {
        Weight::Finite(W::one())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Weight::Finite(_))
    }

    pub fn finite(&self) -> Option<W> {
        match *self {
            Weight::Finite(w) => Some(w),
            Weight::Infinite => None,
        }
    }

    /// Tolerance-aware total order; all infinite weights are equal.
    pub fn cmp_tol(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Weight::Finite(a), Weight::Finite(b)) => cmp_tol(*a, *b),
            (Weight::Finite(_), Weight::Infinite) => Ordering::Less,
            (Weight::Infinite, Weight::Finite(_)) => Ordering::Greater,
            (Weight::Infinite, Weight::Infinite) => Ordering::Equal,
        }
    }

    /// Difference used for residual capacities. `Infinite - x` stays infinite.
    ///
    /// # Panics
    /// On `Finite - Infinite`, which no caller should produce.
    pub(crate) fn saturating_sub(self, other: Self) -> Self {
        match (self, other) {
            (Weight::Infinite, _) => Weight::Infinite,
            (Weight::Finite(a), Weight::Finite(b)) => Weight::Finite(a - b),
            (Weight::Finite(_), Weight::Infinite) => {
                unreachable!("finite capacity minus infinite flow")
            }
        }
    }
}

impl<W: Scalar> Add for Weight<W> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Weight::Finite(a), Weight::Finite(b)) => Weight::Finite(a + b),
            _ => Weight::Infinite,
        }
    }
}

impl<W: Scalar> std::iter::Sum for Weight<W> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

impl<W: Display> Display for Weight<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weight::Finite(w) => write!(f, "{w}"),
            Weight::Infinite => write!(f, "inf"),
        }
    }
}
