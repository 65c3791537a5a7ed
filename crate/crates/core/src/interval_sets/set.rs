use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::RealSet;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Finite union of half-open intervals in canonical form: sorted, pairwise
/// disjoint and non-adjacent. Adjacent pieces merge only on exact endpoint
/// equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(T, T)>", into = "Vec<(T, T)>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct IntervalSet<T> {
    intervals: Vec<Interval<T>>,
}

impl<T: Real> Default for IntervalSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> IntervalSet<T> {
    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn single(interval: Interval<T>) -> Self {
        Self { intervals: vec![interval] }
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval<T>>>(iter: I) -> Self {
        let mut v: Vec<_> = iter.into_iter().collect();
        v.sort_by(|a, b| a.lo().partial_cmp(&b.lo()).expect("finite endpoints"));
        Self::from_sorted(v)
    }

    /// Builds from `(lo, hi)` pairs, dropping empty ones.
    pub fn from_pairs<I: IntoIterator<Item = (T, T)>>(pairs: I) -> Result<Self> {
        let mut v = Vec::new();
        for (lo, hi) in pairs {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite endpoint in [{lo}, {hi})")));
            }
            if let Some(i) = Interval::try_new(lo, hi) {
                v.push(i);
            }
        }
        Ok(Self::from_intervals(v))
    }

    /// Merges an already lo-sorted list.
    pub(crate) fn from_sorted(sorted: Vec<Interval<T>>) -> Self {
        let mut out: Vec<Interval<T>> = Vec::with_capacity(sorted.len());
        for iv in sorted {
            match out.last_mut() {
                Some(last) if iv.lo() <= last.hi() => {
                    if iv.hi() > last.hi() {
                        *last = Interval::new_unchecked(last.lo(), iv.hi());
                    }
                }
                _ => out.push(iv),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> T {
        compensated_sum(self.intervals.iter().map(Interval::length))
    }

    pub fn hull(&self) -> Option<Interval<T>> {
        let first = self.intervals.first()?;
        let last = self.intervals.last()?;
        Some(Interval::new_unchecked(first.lo(), last.hi()))
    }

    pub fn contains(&self, x: T) -> bool {
        let idx = self.intervals.partition_point(|i| i.lo() <= x);
        idx > 0 && x < self.intervals[idx - 1].hi()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j >= other.len()
                || (i < self.len() && self.intervals[i].lo() <= other.intervals[j].lo());
            if take_left {
                merged.push(self.intervals[i]);
                i += 1;
            } else {
                merged.push(other.intervals[j]);
                j += 1;
            }
        }
        Self::from_sorted(merged)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            if let Some(x) = a.intersect(b) {
                out.push(x);
            }
            if a.hi() < b.hi() {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// `window \ self`.
    pub fn complement_within(&self, window: &Interval<T>) -> Self {
        let mut out = Vec::new();
        let mut cursor = window.lo();
        let start = self.intervals.partition_point(|i| i.hi() <= window.lo());
        for iv in &self.intervals[start..] {
            if iv.lo() >= window.hi() {
                break;
            }
            if let Some(gap) = Interval::try_new(cursor, iv.lo().min(window.hi())) {
                out.push(gap);
            }
            cursor = cursor.max(iv.hi());
            if cursor >= window.hi() {
                break;
            }
        }
        if let Some(tail) = Interval::try_new(cursor, window.hi()) {
            out.push(tail);
        }
        Self { intervals: out }
    }

    /// `self ∩ window`, touching only the intervals that overlap it.
    pub fn clip_to(&self, window: &Interval<T>) -> Self {
        let start = self.intervals.partition_point(|i| i.hi() <= window.lo());
        let out = self.intervals[start..]
            .iter()
            .take_while(|i| i.lo() < window.hi())
            .filter_map(|i| i.intersect(window))
            .collect();
        Self { intervals: out }
    }

    pub fn translate(&self, by: T) -> Self {
        Self::from_sorted(self.intervals.iter().filter_map(|i| i.translate(by)).collect())
    }
}

impl<T: Real> RealSet<T> for IntervalSet<T> {
    fn measure(&self) -> T {
        IntervalSet::measure(self)
    }

    fn clip(&self, window: &Interval<T>) -> IntervalSet<T> {
        self.clip_to(window)
    }

    fn contains(&self, x: T) -> bool {
        IntervalSet::contains(self, x)
    }

    fn hull(&self) -> Option<Interval<T>> {
        IntervalSet::hull(self)
    }
}

impl<T: Real> TryFrom<Vec<(T, T)>> for IntervalSet<T> {
    type Error = Error;

    fn try_from(pairs: Vec<(T, T)>) -> Result<Self> {
        let mut v = Vec::with_capacity(pairs.len());
        for (lo, hi) in pairs {
            v.push(Interval::new(lo, hi)?);
        }
        Ok(Self::from_intervals(v))
    }
}

impl<T: Real> From<IntervalSet<T>> for Vec<(T, T)> {
    fn from(s: IntervalSet<T>) -> Self {
        s.intervals.into_iter().map(Into::into).collect()
    }
}

impl<T: Real> FromIterator<Interval<T>> for IntervalSet<T> {
    fn from_iter<I: IntoIterator<Item = Interval<T>>>(iter: I) -> Self {
        Self::from_intervals(iter)
    }
}
