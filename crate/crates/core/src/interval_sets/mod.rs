//! Exact algebra and measure predicates for finite and periodic unions of
//! half-open intervals.

mod interval;
mod multiplicity;
mod periodic;
mod predicates;
mod set;

use serde::{Deserialize, Serialize};

pub use interval::Interval;
pub use multiplicity::{projection_and_multiplicity, MultiplicityProfile};
pub use periodic::{BlockUnion, PeriodicIntervalSet};
pub use predicates::{
    density_profile, epsilon_thin_check, periodic_gap_check, sigma_from_gap, thinness_radius,
    DensityPoint, GapNormalization, ThinnessReport,
};
pub use set::IntervalSet;

use crate::scalar::Real;

/// A bounded-on-windows subset of the real line that can be measured and
/// materialized against a window.
pub trait RealSet<T: Real> {
    fn measure(&self) -> T;

    /// `self ∩ window` in canonical form.
    fn clip(&self, window: &Interval<T>) -> IntervalSet<T>;

    fn contains(&self, x: T) -> bool;

    fn hull(&self) -> Option<Interval<T>>;

    fn measure_within(&self, window: &Interval<T>) -> T {
        self.clip(window).measure()
    }

    /// Upper bound on the number of pieces of `self.clip(window)`.
    fn pieces_within(&self, window: &Interval<T>) -> u64 {
        self.clip(window).len() as u64
    }

    /// Number of points `k + alpha` in `window ∩ self`.
    fn lattice_count_within(&self, alpha: T, window: &Interval<T>) -> u64 {
        self.clip(window).intervals().iter().map(|i| i.lattice_count(alpha)).sum()
    }
}

/// `a ∩ b` for any set against a finite one.
pub fn intersect<T: Real, S: RealSet<T> + ?Sized>(a: &S, b: &IntervalSet<T>) -> IntervalSet<T> {
    let mut v = Vec::new();
    for w in b.intervals() {
        v.extend_from_slice(a.clip(w).intervals());
    }
    IntervalSet::from_intervals(v)
}

/// Any of the set representations, as read from a set file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum AnySet<T> {
    Finite(IntervalSet<T>),
    Periodic(PeriodicIntervalSet<T>),
    Blocks(BlockUnion<T>),
}

impl<T: Real> AnySet<T> {
    fn inner(&self) -> &dyn RealSet<T> {
        match self {
            AnySet::Finite(s) => s,
            AnySet::Periodic(s) => s,
            AnySet::Blocks(s) => s,
        }
    }
}

impl<T: Real> RealSet<T> for AnySet<T> {
    fn measure(&self) -> T {
        self.inner().measure()
    }

    fn clip(&self, window: &Interval<T>) -> IntervalSet<T> {
        self.inner().clip(window)
    }

    fn contains(&self, x: T) -> bool {
        self.inner().contains(x)
    }

    fn hull(&self) -> Option<Interval<T>> {
        self.inner().hull()
    }

    fn measure_within(&self, window: &Interval<T>) -> T {
        self.inner().measure_within(window)
    }

    fn pieces_within(&self, window: &Interval<T>) -> u64 {
        self.inner().pieces_within(window)
    }

    fn lattice_count_within(&self, alpha: T, window: &Interval<T>) -> u64 {
        self.inner().lattice_count_within(alpha, window)
    }
}
