use serde::Serialize;

use super::interval::Interval;
use super::RealSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint<T> {
    pub r: T,
    /// `|q ∩ (-r, r)| / r`
    pub ratio: T,
}

/// `|q ∩ (-r, r)| / r` at each radius.
pub fn density_profile<T: Real, S: RealSet<T> + ?Sized>(
    q: &S,
    radii: &[T],
) -> Result<Vec<DensityPoint<T>>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > T::zero() && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
            }
            let w = Interval::new_unchecked(-r, r);
            Ok(DensityPoint { r, ratio: q.measure_within(&w) / r })
        })
        .collect()
}

/// `min(1, 1/|x|)`
pub fn thinness_radius<T: Real>(x: T) -> T {
    T::one().min(x.abs().recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThinnessReport<T> {
    pub pass: bool,
    pub eps: T,
    /// Largest `|q ∩ [x-ρ, x+ρ]| / (2ρ)` over the probes; the smallest eps
    /// the probes would accept.
    pub worst_ratio: T,
    pub worst_probe: Option<T>,
    pub violations: usize,
}

/// Checks `|q ∩ [x-ρ(x), x+ρ(x)]| <= 2 eps ρ(x)` at every probe.
pub fn epsilon_thin_check<T: Real, S: RealSet<T> + ?Sized>(
    q: &S,
    eps: T,
    probes: &[T],
) -> Result<ThinnessReport<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut report = ThinnessReport {
        pass: true,
        eps,
        worst_ratio: T::zero(),
        worst_probe: None,
        violations: 0,
    };
    for &x in probes {
        let rho = thinness_radius(x);
        let Some(w) = Interval::try_new(x - rho, x + rho) else { continue };
        let mass = q.measure_within(&w);
        let ratio = mass / (rho + rho);
        if report.worst_probe.is_none() || ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_probe = Some(x);
        }
        if mass > (eps + eps) * rho {
            report.pass = false;
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Translate indices `k` such that `gap + k * period` meets `[a, b)`.
fn meeting_translates<T: Real>(gap: &Interval<T>, period: T, a: T, b: T) -> std::ops::RangeInclusive<i64> {
    let lo = ((a - gap.hi()) / period).floor().to_i64().expect("index range") - 1;
    let hi = ((b - gap.lo()) / period).ceil().to_i64().expect("index range") + 1;
    lo..=hi
}

/// Whether `s ∩ (gap + k period) = ∅` for every translate meeting `window`.
/// Returns the left end of the first offending overlap on failure.
pub fn periodic_gap_check<T: Real, S: RealSet<T> + ?Sized>(
    s: &S,
    gap: &Interval<T>,
    period: T,
    window: &Interval<T>,
) -> Result<Option<T>> {
    if !(period > T::zero()) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    for piece in s.clip(window).intervals() {
        for k in meeting_translates(gap, period, piece.lo(), piece.hi()) {
            let shift = T::from_int(k) * period;
            let translate = Interval::new_unchecked(gap.lo() + shift, gap.hi() + shift);
            if let Some(hit) = piece.intersect(&translate) {
                return Ok(Some(hit.lo()));
            }
        }
    }
    Ok(None)
}

/// Gap length normalized to a unit period, plus the translation that moves
/// the gap to `[0, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapNormalization<T> {
    pub sigma: T,
    pub offset: T,
}

pub fn sigma_from_gap<T: Real, S: RealSet<T> + ?Sized>(
    s: &S,
    period: T,
    gap: &Interval<T>,
) -> Result<GapNormalization<T>> {
    if let Some(window) = s.hull() {
        if let Some(at) = periodic_gap_check(s, gap, period, &window)? {
            return Err(Error::GapCheckFailed { at: at.as_f64() });
        }
    } else if !(period > T::zero()) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let offset = gap.lo() / period;
    Ok(GapNormalization { sigma: gap.length() / period, offset: offset - offset.floor() })
}
