use serde::Serialize;

use super::interval::Interval;
use super::set::IntervalSet;
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Largest number of unit cells a set may span before it is treated as unbounded.
const MAX_CELLS: i64 = 1 << 32;

/// Piecewise-constant `w(t) = #{k : t + k ∈ S}` on `[0, 1)`.
///
/// `breakpoints[i] = (t_i, w_i)` means `w = w_i` on `[t_i, t_{i+1})`, the last
/// piece running to 1. The first breakpoint is always at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityProfile<T> {
    pub breakpoints: Vec<(T, u32)>,
}

impl<T: Real> MultiplicityProfile<T> {
    pub fn at(&self, t: T) -> u32 {
        let idx = self.breakpoints.partition_point(|&(b, _)| b <= t);
        if idx == 0 || t >= T::one() {
            0
        } else {
            self.breakpoints[idx - 1].1
        }
    }

    fn pieces(&self) -> impl Iterator<Item = (T, T, u32)> + '_ {
        self.breakpoints.iter().enumerate().map(move |(i, &(lo, w))| {
            let hi = self.breakpoints.get(i + 1).map_or(T::one(), |b| b.0);
            (lo, hi, w)
        })
    }

    /// `∫₀¹ w(t) dt`
    pub fn integral(&self) -> T {
        compensated_sum(self.pieces().map(|(lo, hi, w)| (hi - lo) * T::from_u32(w).unwrap()))
    }

    /// `proj(S) = {w >= 1}`
    pub fn projection(&self) -> IntervalSet<T> {
        self.pieces().filter(|p| p.2 > 0).filter_map(|(lo, hi, _)| Interval::try_new(lo, hi)).collect()
    }

    pub fn max(&self) -> u32 {
        self.breakpoints.iter().map(|b| b.1).max().unwrap_or(0)
    }
}

/// Shadow of `s` modulo 1 with its multiplicity.
pub fn projection_and_multiplicity<T: Real>(s: &IntervalSet<T>) -> Result<MultiplicityProfile<T>> {
    let mut events: Vec<(T, i32)> = Vec::new();
    let mut cells = 0i64;
    for iv in s.intervals() {
        let first = iv.lo().floor().to_i64();
        let last = (iv.hi().ceil() - T::one()).to_i64();
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::InvalidArgument("set extent exceeds the integer range".into()));
        };
        cells += last - first + 1;
        if cells > MAX_CELLS {
            return Err(Error::InvalidArgument(format!(
                "set spans more than {MAX_CELLS} unit cells; treat as unbounded"
            )));
        }
        for k in first..=last {
            let kk = T::from_int(k);
            let a = iv.lo().max(kk) - kk;
            let b = iv.hi().min(kk + T::one()) - kk;
            if a < b {
                events.push((a, 1));
                if b < T::one() {
                    events.push((b, -1));
                }
            }
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));

    let mut breakpoints: Vec<(T, u32)> = vec![(T::zero(), 0)];
    let mut level: i64 = 0;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        while i < events.len() && events[i].0 == t {
            level += events[i].1 as i64;
            i += 1;
        }
        let w = level as u32;
        match breakpoints.last_mut() {
            Some(last) if last.0 == t => last.1 = w,
            _ => breakpoints.push((t, w)),
        }
    }
    breakpoints.dedup_by(|b, a| a.1 == b.1);
    Ok(MultiplicityProfile { breakpoints })
}
