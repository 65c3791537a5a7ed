use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::set::IntervalSet;
use super::RealSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn is_zero<T: Real>(x: &T) -> bool {
    x.is_zero()
}

/// A pattern inside `[0, period)` repeated at `offset + k * period` for
/// `index_lo <= k <= index_hi`. Never expanded except against a bounded window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPeriodic<T>", into = "RawPeriodic<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PeriodicIntervalSet<T> {
    pattern: IntervalSet<T>,
    period: T,
    index_lo: i64,
    index_hi: i64,
    offset: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
struct RawPeriodic<T> {
    pattern: IntervalSet<T>,
    period: T,
    index_lo: i64,
    index_hi: i64,
    #[serde(default, skip_serializing_if = "is_zero")]
    offset: T,
}

impl<T: Real> PeriodicIntervalSet<T> {
    pub fn new(pattern: IntervalSet<T>, period: T, index_lo: i64, index_hi: i64) -> Result<Self> {
        if !(period > T::zero() && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        if index_lo > index_hi {
            return Err(Error::InvalidArgument(format!(
                "index range {index_lo}..={index_hi} is empty"
            )));
        }
        if let Some(h) = pattern.hull() {
            if h.lo() < T::zero() || h.hi() > period {
                return Err(Error::InvalidArgument(format!(
                    "pattern [{}, {}) not inside [0, {period})",
                    h.lo(),
                    h.hi()
                )));
            }
        }
        Ok(Self { pattern, period, index_lo, index_hi, offset: T::zero() })
    }

    /// Same copies shifted by `by`.
    pub fn translated(&self, by: T) -> Self {
        Self { offset: self.offset + by, ..self.clone() }
    }

    pub fn pattern(&self) -> &IntervalSet<T> {
        &self.pattern
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn index_range(&self) -> std::ops::RangeInclusive<i64> {
        self.index_lo..=self.index_hi
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn copy_count(&self) -> u64 {
        (self.index_hi - self.index_lo + 1) as u64
    }

    /// Start of the period cell carrying copy `k`.
    #[inline]
    pub fn copy_base(&self, k: i64) -> T {
        self.offset + T::from_int(k) * self.period
    }

    /// The pattern interval `p` placed in copy `k`.
    #[inline]
    pub fn copy_interval(&self, k: i64, p: &Interval<T>) -> Option<Interval<T>> {
        let base = self.copy_base(k);
        Interval::try_new(base + p.lo(), base + p.hi())
    }

    /// Copy indices that can meet `window`, clamped to the index range.
    fn candidate_copies(&self, window: &Interval<T>) -> Option<(i64, i64)> {
        let pat = self.pattern.hull()?;
        let lo = ((window.lo() - self.offset - pat.hi()) / self.period).floor();
        let hi = ((window.hi() - self.offset - pat.lo()) / self.period).ceil();
        let lo = lo.to_i64().unwrap_or(i64::MIN).saturating_sub(1).max(self.index_lo);
        let hi = hi.to_i64().unwrap_or(i64::MAX).saturating_add(1).min(self.index_hi);
        (lo <= hi).then_some((lo, hi))
    }

    fn clip_copies(&self, window: &Interval<T>, from: i64, to: i64) -> Vec<Interval<T>> {
        let mut out = Vec::new();
        for k in from..=to {
            for p in self.pattern.intervals() {
                if let Some(x) = self.copy_interval(k, p).and_then(|c| c.intersect(window)) {
                    out.push(x);
                }
            }
        }
        out
    }

    /// Brute-force repetition of every copy.
    pub fn materialize(&self) -> IntervalSet<T> {
        let mut v = Vec::new();
        for k in self.index_range() {
            for p in self.pattern.intervals() {
                v.extend(self.copy_interval(k, p));
            }
        }
        IntervalSet::from_intervals(v)
    }
}

impl<T: Real> RealSet<T> for PeriodicIntervalSet<T> {
    fn pieces_within(&self, window: &Interval<T>) -> u64 {
        self.candidate_copies(window)
            .map_or(0, |(lo, hi)| (hi - lo + 1) as u64 * self.pattern.len() as u64)
    }

    fn measure(&self) -> T {
        T::from_u64(self.copy_count()).expect("copy count fits") * self.pattern.measure()
    }

    fn clip(&self, window: &Interval<T>) -> IntervalSet<T> {
        match self.candidate_copies(window) {
            Some((from, to)) => IntervalSet::from_intervals(self.clip_copies(window, from, to)),
            None => IntervalSet::empty(),
        }
    }

    fn contains(&self, x: T) -> bool {
        if !x.is_finite() || self.pattern.is_empty() {
            return false;
        }
        let Some(k0) = ((x - self.offset) / self.period).floor().to_i64() else {
            return false;
        };
        let pat = self.pattern.intervals();
        for k in (k0 - 1)..=(k0 + 1) {
            if k < self.index_lo || k > self.index_hi {
                continue;
            }
            let base = self.copy_base(k);
            let idx = pat.partition_point(|p| base + p.lo() <= x);
            if idx > 0 && x < base + pat[idx - 1].hi() {
                return true;
            }
        }
        false
    }

    fn hull(&self) -> Option<Interval<T>> {
        let pat = self.pattern.hull()?;
        Interval::try_new(
            self.copy_base(self.index_lo) + pat.lo(),
            self.copy_base(self.index_hi) + pat.hi(),
        )
    }

    fn measure_within(&self, window: &Interval<T>) -> T {
        let Some((from, to)) = self.candidate_copies(window) else {
            return T::zero();
        };
        let pat = self.pattern.hull().expect("non-empty pattern");
        // copies strictly inside the window are counted, the rest materialized
        let inner_lo = ((window.lo() - self.offset - pat.lo()) / self.period).ceil();
        let inner_hi = ((window.hi() - self.offset - pat.hi()) / self.period).floor();
        let inner_lo = inner_lo.to_i64().unwrap_or(i64::MIN).saturating_add(1).max(from);
        let inner_hi = inner_hi.to_i64().unwrap_or(i64::MAX).saturating_sub(1).min(to);
        if inner_lo > inner_hi {
            return IntervalSet::from_intervals(self.clip_copies(window, from, to)).measure();
        }
        let inner = T::from_i64(inner_hi - inner_lo + 1).expect("count fits") * self.pattern.measure();
        let mut edge = self.clip_copies(window, from, inner_lo - 1);
        edge.extend(self.clip_copies(window, inner_hi + 1, to));
        inner + IntervalSet::from_intervals(edge).measure()
    }

    fn lattice_count_within(&self, alpha: T, window: &Interval<T>) -> u64 {
        let Some((from, to)) = self.candidate_copies(window) else {
            return 0;
        };
        let pieces = (to - from + 1) as f64 * self.pattern.len() as f64;
        let points = window.length().as_f64() + 1.0;
        if points < pieces {
            window.lattice_indices(alpha).filter(|&k| self.contains(T::from_int(k) + alpha)).count()
                as u64
        } else {
            self.clip(window).intervals().iter().map(|i| i.lattice_count(alpha)).sum()
        }
    }
}

impl<T: Real> TryFrom<RawPeriodic<T>> for PeriodicIntervalSet<T> {
    type Error = Error;

    fn try_from(raw: RawPeriodic<T>) -> Result<Self> {
        Ok(Self::new(raw.pattern, raw.period, raw.index_lo, raw.index_hi)?.translated(raw.offset))
    }
}

impl<T: Real> From<PeriodicIntervalSet<T>> for RawPeriodic<T> {
    fn from(p: PeriodicIntervalSet<T>) -> Self {
        Self {
            pattern: p.pattern,
            period: p.period,
            index_lo: p.index_lo,
            index_hi: p.index_hi,
            offset: p.offset,
        }
    }
}

/// Disjoint union of translated periodic blocks, ordered left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct BlockUnion<T> {
    blocks: Vec<PeriodicIntervalSet<T>>,
}

impl<T: Real> BlockUnion<T> {
    /// Blocks must have pairwise disjoint hulls; they are sorted here.
    pub fn new(mut blocks: Vec<PeriodicIntervalSet<T>>) -> Result<Self> {
        blocks.retain(|b| b.hull().is_some());
        blocks.sort_by(|a, b| {
            let (a, b) = (a.hull().unwrap(), b.hull().unwrap());
            a.lo().partial_cmp(&b.lo()).expect("finite hulls")
        });
        for w in blocks.windows(2) {
            let (a, b) = (w[0].hull().unwrap(), w[1].hull().unwrap());
            if a.hi() > b.lo() {
                return Err(Error::InvalidArgument(format!(
                    "blocks overlap: [{}, {}) and [{}, {})",
                    a.lo(),
                    a.hi(),
                    b.lo(),
                    b.hi()
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[PeriodicIntervalSet<T>] {
        &self.blocks
    }

    fn overlapping<'a>(
        &'a self,
        window: &'a Interval<T>,
    ) -> impl Iterator<Item = &'a PeriodicIntervalSet<T>> + 'a {
        let start = self.blocks.partition_point(|b| b.hull().unwrap().hi() <= window.lo());
        self.blocks[start..].iter().take_while(move |b| b.hull().unwrap().lo() < window.hi())
    }
}

impl<T: Real> RealSet<T> for BlockUnion<T> {
    fn pieces_within(&self, window: &Interval<T>) -> u64 {
        self.blocks.iter().map(|b| b.pieces_within(window)).sum()
    }

    fn measure(&self) -> T {
        self.blocks.iter().fold(T::zero(), |acc, b| acc + b.measure())
    }

    fn clip(&self, window: &Interval<T>) -> IntervalSet<T> {
        let mut v = Vec::new();
        for b in self.overlapping(window) {
            v.extend_from_slice(b.clip(window).intervals());
        }
        IntervalSet::from_intervals(v)
    }

    fn contains(&self, x: T) -> bool {
        let idx = self.blocks.partition_point(|b| b.hull().unwrap().lo() <= x);
        idx > 0 && self.blocks[idx - 1].contains(x)
    }

    fn hull(&self) -> Option<Interval<T>> {
        let lo = self.blocks.first()?.hull()?.lo();
        let hi = self.blocks.last()?.hull()?.hi();
        Interval::try_new(lo, hi)
    }

    fn measure_within(&self, window: &Interval<T>) -> T {
        self.overlapping(window).fold(T::zero(), |acc, b| acc + b.measure_within(window))
    }

    fn lattice_count_within(&self, alpha: T, window: &Interval<T>) -> u64 {
        self.overlapping(window).map(|b| b.lattice_count_within(alpha, window)).sum()
    }
}
