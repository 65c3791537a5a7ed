use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Half-open interval `[lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(T, T)", into = "(T, T)")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite interval [{lo}, {hi})")));
        }
        if lo >= hi {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    /// Returns `None` for empty or inverted bounds instead of an error.
    pub fn try_new(lo: T, hi: T) -> Option<Self> {
        (lo < hi && lo.is_finite() && hi.is_finite()).then_some(Self { lo, hi })
    }

    #[inline]
    pub(crate) fn new_unchecked(lo: T, hi: T) -> Self {
        debug_assert!(lo < hi);
        Self { lo, hi }
    }

    #[inline]
    pub fn lo(&self) -> T {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> T {
        self.hi
    }

    #[inline]
    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        Self::try_new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn translate(&self, by: T) -> Option<Self> {
        Self::try_new(self.lo + by, self.hi + by)
    }

    /// Number of points `k + alpha` (k integer) with `lo <= k + alpha < hi`.
    ///
    /// The float predicate `lo <= k + alpha` is evaluated literally at the
    /// boundary candidates, so the count agrees with a point-by-point loop.
    pub fn lattice_count(&self, alpha: T) -> u64 {
        let first = first_lattice_index_at_or_above(self.lo, alpha);
        let end = first_lattice_index_at_or_above(self.hi, alpha);
        (end - first).max(0) as u64
    }

    /// Integer indices `k` with `k + alpha` in the interval.
    pub fn lattice_indices(&self, alpha: T) -> std::ops::Range<i64> {
        let first = first_lattice_index_at_or_above(self.lo, alpha);
        let end = first_lattice_index_at_or_above(self.hi, alpha);
        first..end.max(first)
    }
}

/// Smallest integer `k` with `k + alpha >= x`, evaluated in `T`.
pub(crate) fn first_lattice_index_at_or_above<T: Real>(x: T, alpha: T) -> i64 {
    let mut k = (x - alpha).ceil().to_i64().expect("lattice index in i64 range");
    while T::from_int(k - 1) + alpha >= x {
        k -= 1;
    }
    while T::from_int(k) + alpha < x {
        k += 1;
    }
    k
}

impl<T: Real> TryFrom<(T, T)> for Interval<T> {
    type Error = Error;

    fn try_from((lo, hi): (T, T)) -> Result<Self> {
        Self::new(lo, hi)
    }
}

impl<T: Real> From<Interval<T>> for (T, T) {
    fn from(i: Interval<T>) -> Self {
        (i.lo, i.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_inverted() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn lattice_count_half_open() {
        let i = Interval::new(0.0, 3.0).unwrap();
        assert_eq!(i.lattice_count(0.0), 3);
        assert_eq!(i.lattice_count(0.5), 3);
        let j = Interval::new(0.5, 1.5).unwrap();
        assert_eq!(j.lattice_count(0.5), 1);
        assert_eq!(j.lattice_indices(0.5), 0..1);
    }

    #[test]
    fn serializes_as_pair() {
        let i = Interval::new(0.25_f64, 0.5).unwrap();
        assert_eq!(serde_json::to_string(&i).unwrap(), "[0.25,0.5]");
        let back: Interval<f64> = serde_json::from_str("[0.25,0.5]").unwrap();
        assert_eq!(back, i);
        assert!(serde_json::from_str::<Interval<f64>>("[1.0,0.5]").is_err());
    }
}
