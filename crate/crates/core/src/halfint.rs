//! Exact arithmetic in (1/2)ℤ.
//!
//! Index computations below produce values in the half-integers and must be
//! compared exactly, so the value is stored as twice itself in an `i64`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};

/// A half-integer, stored exactly as `twice` = 2·value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt {
    twice: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };

    /// The integer `n` as a half-integer.
    pub fn from_int(n: i64) -> Self {
        HalfInt { twice: 2 * n }
    }

    /// The value `k/2`.
    pub fn halves(k: i64) -> Self {
        HalfInt { twice: k }
    }

    /// Twice the value; exact.
    pub fn twice(self) -> i64 {
        self.twice
    }

    /// True when the value lies in ℤ.
    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    /// The value as an integer, or `None` when it is a strict half-integer.
    pub fn as_integer(self) -> Option<i64> {
        if self.is_integer() {
            Some(self.twice / 2)
        } else {
            None
        }
    }

    /// The value as a float (for diagnostics only).
    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl AddAssign for HalfInt {
    fn add_assign(&mut self, rhs: HalfInt) {
        self.twice += rhs.twice;
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl Sum for HalfInt {
    fn sum<I: Iterator<Item = HalfInt>>(iter: I) -> HalfInt {
        iter.fold(HalfInt::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}
