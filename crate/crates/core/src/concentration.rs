//! L² functionals of the level functions: masses on sets, the certified tail,
//! concentration ratios and a discrete Plancherel check.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::counterexample::{ConcentratedFunction, CounterexampleInstance, CounterexampleParams};
use crate::error::{Error, Result};
use crate::interval_sets::{Interval, IntervalSet, PeriodicIntervalSet, RealSet};
use crate::scalar::{compensated_sum, CompensatedSum};

const DIRECT_NODES: usize = 5;
const MODULATED_NODES: usize = 8;
const CHEBYSHEV_NODES: usize = 16;
const CHUNK: usize = 256;
const FOLD_CHUNK: i64 = 1 << 14;

/// How `∫_E |f|²` is evaluated for periodic `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassMethod {
    /// Composite Gauss-Legendre resolving every oscillation of `P(N t)²`.
    Direct,
    /// Fold the copies of one period together and integrate the slowly varying
    /// envelope sum against one period of `P²`.
    Modulated,
    /// `Modulated` for `n > 3`, `Direct` otherwise.
    #[default]
    Auto,
}

impl MassMethod {
    pub fn resolve(self, n: u32) -> Self {
        match self {
            MassMethod::Auto if n > 3 => MassMethod::Modulated,
            MassMethod::Auto => MassMethod::Direct,
            other => other,
        }
    }
}

/// Largest step the direct rule accepts for `f`: `1/(16 N m)`.
pub fn max_grid_step(f: &ConcentratedFunction) -> f64 {
    let m = f.poly().poly().degree() as f64 + 1.0;
    1.0 / (16.0 * f.poly().scale() as f64 * m)
}

fn gauss_legendre(nodes: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(nodes).expect("nonzero"))
        .as_node_weight_pairs()
        .to_vec()
}

fn check_in_table(f: &ConcentratedFunction, hull: Option<Interval<f64>>) -> Result<()> {
    if let Some(h) = hull {
        let reach = (h.lo() - f.shift()).abs().max((h.hi() - f.shift()).abs());
        if reach > f.table_radius() {
            return Err(Error::OutsideTable { t: reach });
        }
    }
    Ok(())
}

/// `∫_E |f|²` for a finite union, on panels of width at most `grid_step`.
pub fn l2_mass_direct(f: &ConcentratedFunction, e: &IntervalSet<f64>, grid_step: f64) -> Result<f64> {
    let max_step = max_grid_step(f);
    if !(grid_step > 0.0) || grid_step > max_step {
        return Err(Error::UnresolvedOscillation { step: grid_step, max_step });
    }
    check_in_table(f, e.hull())?;
    let rule = gauss_legendre(DIRECT_NODES);
    let parts: Vec<f64> = e
        .intervals()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = CompensatedSum::new();
            for piece in chunk {
                let panels = (piece.length() / grid_step).ceil().max(1.0) as u64;
                let width = piece.length() / panels as f64;
                for p in 0..panels {
                    let a = piece.lo() + p as f64 * width;
                    let mid = a + 0.5 * width;
                    let mut s = 0.0;
                    for &(x, w) in &rule {
                        s += w * f.modulus_sq(mid + 0.5 * width * x).unwrap_or(0.0);
                    }
                    acc.add(0.5 * width * s);
                }
            }
            acc.value()
        })
        .collect();
    Ok(compensated_sum(parts))
}

/// Barycentric interpolant through first-kind Chebyshev nodes on `[0, len]`.
struct Chebyshev {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

impl Chebyshev {
    fn nodes(len: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| {
                let theta = std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                0.5 * len * (1.0 - theta.cos())
            })
            .collect()
    }

    fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let count = nodes.len();
        let weights = (0..count)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * count) as f64).sin()
            })
            .collect();
        Self { nodes, weights, values }
    }

    fn eval(&self, y: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&x, &w), &v) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let d = y - x;
            if d == 0.0 {
                return v;
            }
            num += w * v / d;
            den += w / d;
        }
        num / den
    }
}

/// `G(y) = Σ_k |φ̂(o + k/N + y)|²` on one period, interpolated in `y`.
struct EnvelopeFold {
    origin: f64,
    range: (i64, i64),
    g: Chebyshev,
}

impl EnvelopeFold {
    fn build(f: &ConcentratedFunction, e: &PeriodicIntervalSet<f64>) -> Self {
        let period = e.period();
        let origin = e.offset() - f.shift();
        let (k_lo, k_hi) = (*e.index_range().start(), *e.index_range().end());
        let nodes = Chebyshev::nodes(period, CHEBYSHEV_NODES);
        let values: Vec<f64> = nodes
            .iter()
            .map(|&y| {
                let chunks = (k_hi - k_lo) / FOLD_CHUNK + 1;
                let parts: Vec<f64> = (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let start = k_lo + c * FOLD_CHUNK;
                        let end = (start + FOLD_CHUNK - 1).min(k_hi);
                        compensated_sum((start..=end).map(|k| {
                            let u = origin + k as f64 * period + y;
                            let env = f.envelope_at(u).unwrap_or(0.0);
                            env * env
                        }))
                    })
                    .collect();
                compensated_sum(parts)
            })
            .collect();
        Self { origin, range: (k_lo, k_hi), g: Chebyshev::new(nodes, values) }
    }

    fn matches(&self, f: &ConcentratedFunction, e: &PeriodicIntervalSet<f64>) -> bool {
        self.origin == e.offset() - f.shift() && self.range == (*e.index_range().start(), *e.index_range().end())
    }

    /// `∫_pattern P(N(o + y))² G(y) dy`
    fn integrate(&self, f: &ConcentratedFunction, pattern: &IntervalSet<f64>, period: f64) -> f64 {
        let rule = gauss_legendre(MODULATED_NODES);
        let poly = f.poly().poly();
        let scale = f.poly().scale() as f64;
        let panel = period / (4.0 * (2.0 * poly.degree() as f64 + 1.0));
        let mut acc = CompensatedSum::new();
        for piece in pattern.intervals() {
            let panels = (piece.length() / panel).ceil().max(1.0) as u64;
            let width = piece.length() / panels as f64;
            for p in 0..panels {
                let mid = piece.lo() + (p as f64 + 0.5) * width;
                let mut s = 0.0;
                for &(x, w) in &rule {
                    let y = mid + 0.5 * width * x;
                    let v = poly.eval(scale * (self.origin + y));
                    s += w * v * v * self.g.eval(y);
                }
                acc.add(0.5 * width * s);
            }
        }
        acc.value()
    }
}

fn check_modulated(f: &ConcentratedFunction, e: &PeriodicIntervalSet<f64>) -> Result<()> {
    let scale = f.poly().scale() as f64;
    if (e.period() * scale - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "modulated path needs period 1/N = {}, got {}",
            1.0 / scale,
            e.period()
        )));
    }
    check_in_table(f, e.hull())
}

/// `∫_E |f|²` for a periodic set whose period is `1/N`.
///
/// With `u = o + k/N + y` every copy sees the same `P(N(o + y))²`, so the
/// mass is `∫_pattern P(N(o + y))² G(y) dy` where `G` sums the envelope over
/// all copies. `G` is smooth on one period and is interpolated on
/// Chebyshev nodes.
pub fn l2_mass_modulated(f: &ConcentratedFunction, e: &PeriodicIntervalSet<f64>) -> Result<f64> {
    Ok(l2_mass_modulated_many(f, std::slice::from_ref(e))?[0])
}

/// [`l2_mass_modulated`] over several sets, sharing envelope sums between
/// sets with the same offset and copy range.
pub fn l2_mass_modulated_many(f: &ConcentratedFunction, sets: &[PeriodicIntervalSet<f64>]) -> Result<Vec<f64>> {
    let mut folds: Vec<EnvelopeFold> = Vec::new();
    let mut out = Vec::with_capacity(sets.len());
    for e in sets {
        if e.pattern().is_empty() || e.copy_count() == 0 {
            out.push(0.0);
            continue;
        }
        check_modulated(f, e)?;
        let fold = match folds.iter().position(|fold| fold.matches(f, e)) {
            Some(i) => &folds[i],
            None => {
                folds.push(EnvelopeFold::build(f, e));
                folds.last().expect("just pushed")
            }
        };
        out.push(fold.integrate(f, e.pattern(), e.period()));
    }
    Ok(out)
}

/// `∫_E |f|²` for periodic `E` with the chosen integrator.
pub fn l2_mass(
    f: &ConcentratedFunction,
    e: &PeriodicIntervalSet<f64>,
    grid_step: f64,
    method: MassMethod,
) -> Result<f64> {
    match method {
        MassMethod::Modulated => l2_mass_modulated(f, e),
        _ => l2_mass_direct(f, &e.materialize(), grid_step),
    }
}

/// `2 ∫_X^∞ (1 + s²)^{-2} ds = π/2 - X/(1+X²) - atan X`
pub fn tail_integral(x: f64) -> f64 {
    if x <= 2.0 {
        return std::f64::consts::FRAC_PI_2 - x / (1.0 + x * x) - x.atan();
    }
    // series in 1/X avoids the cancellation for large X
    let y = 1.0 / x;
    let y2 = y * y;
    let mut power = y * y2;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = 2.0 * kf / (2.0 * kf + 1.0) * power;
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 * sum.abs() {
            break;
        }
        power *= y2;
    }
    sum
}

/// Certified bound for `∫_{|t|>R} |f|²`: `m² C₁² T(R/L) / L`.
pub fn tail_bound(params: &CounterexampleParams, c1: f64, radius: f64) -> Result<f64> {
    let l = params.compression as f64;
    if !(radius >= l) {
        return Err(Error::InvalidArgument(format!("radius {radius} is below L = {l}")));
    }
    let m = params.m as f64;
    Ok(m * m * c1 * c1 * tail_integral(radius / l) / l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: u32,
    pub scale: u64,
    pub total_mass: f64,
    pub exact_mass: f64,
    pub mass_on_q: f64,
    pub mass_off_q_in_window: f64,
    pub tail_bound: f64,
    pub ratio: f64,
    pub grid_step: f64,
    pub window: Interval<f64>,
    pub method: MassMethod,
}

/// `Q_n`'s complement inside `[-N, N)` as periodic pieces with period `1/N`.
pub fn off_q_pieces(q: &PeriodicIntervalSet<f64>, window: &Interval<f64>) -> Vec<PeriodicIntervalSet<f64>> {
    let period = q.period();
    let cell = Interval::new(0.0, period).expect("positive period");
    let full = IntervalSet::single(cell);
    let first = ((window.lo() - q.offset()) / period).round() as i64;
    let last = ((window.hi() - q.offset()) / period).round() as i64 - 1;
    let (lo, hi) = (*q.index_range().start(), *q.index_range().end());
    let mut out = Vec::new();
    let gaps = q.pattern().complement_within(&cell);
    if !gaps.is_empty() {
        out.push(PeriodicIntervalSet::new(gaps, period, lo, hi).expect("valid").translated(q.offset()));
    }
    if first < lo {
        out.push(PeriodicIntervalSet::new(full.clone(), period, first, lo - 1).expect("valid").translated(q.offset()));
    }
    if last > hi {
        out.push(PeriodicIntervalSet::new(full, period, hi + 1, last).expect("valid").translated(q.offset()));
    }
    out
}

/// The window `[-N, N)` around the instance, translated with it.
pub fn instance_window(inst: &CounterexampleInstance) -> Interval<f64> {
    let nn = inst.params.scale as f64;
    Interval::new(inst.offset - nn, inst.offset + nn).expect("positive window")
}

/// `(mass off Q_n in the window + tail) / mass in the window`.
pub fn concentration_ratio(
    inst: &CounterexampleInstance,
    method: MassMethod,
    refinement: u32,
) -> Result<ConcentrationReport> {
    let f = inst.function();
    let q = inst.placed_q();
    let window = instance_window(inst);
    let grid_step = max_grid_step(&f) / refinement.max(1) as f64;
    let method = method.resolve(inst.params.n);
    let (on, off) = match method {
        MassMethod::Modulated => {
            let mut sets = vec![q.clone()];
            sets.extend(off_q_pieces(&q, &window));
            let masses = l2_mass_modulated_many(&f, &sets)?;
            (masses[0], compensated_sum(masses[1..].iter().copied()))
        }
        _ => {
            let on_set = q.clip(&window);
            let off_set = on_set.complement_within(&window);
            (l2_mass_direct(&f, &on_set, grid_step)?, l2_mass_direct(&f, &off_set, grid_step)?)
        }
    };
    let total = on + off;
    let tail = tail_bound(&inst.params, inst.bump.c1(), inst.params.scale as f64)?;
    let ratio = ((off + tail) / total).min(1.0);
    Ok(ConcentrationReport {
        n: inst.params.n,
        scale: inst.params.scale,
        total_mass: total,
        exact_mass: inst.params.total_mass(),
        mass_on_q: on,
        mass_off_q_in_window: off,
        tail_bound: tail,
        ratio,
        grid_step,
        window,
        method,
    })
}

/// Relative discrepancy between `‖g‖₂` on the samples and the energy of the
/// discrete transform kept to `|k| <= len/4`.
pub fn plancherel_check(samples: &[f64]) -> f64 {
    let len = samples.len();
    if len == 0 {
        return 0.0;
    }
    let time = compensated_sum(samples.iter().map(|v| v * v)) / len as f64;
    if time == 0.0 {
        return 0.0;
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let band = len / 4;
    let scale = len as f64;
    let freq = compensated_sum(
        buf.iter()
            .enumerate()
            .filter(|(k, _)| *k <= band || *k >= len - band)
            .map(|(_, c)| (c / scale).norm_sqr()),
    );
    (time.sqrt() - freq.sqrt()).abs() / time.sqrt()
}

/// `max n · ratio(n)`, the constant `C` in `ratio(n) <= C / n`.
pub fn fit_constant(reports: &[ConcentrationReport]) -> f64 {
    reports.iter().map(|r| r.n as f64 * r.ratio).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::counterexample::{Bump, BumpKind};

    fn bump() -> Arc<Bump> {
        Arc::new(Bump::build(BumpKind::Classic).unwrap())
    }

    #[test]
    fn tail_integral_branches_agree() {
        let closed = |x: f64| std::f64::consts::FRAC_PI_2 - x / (1.0 + x * x) - x.atan();
        for x in [2.0001, 2.5, 3.0, 5.0] {
            assert!((tail_integral(x) - closed(x)).abs() < 1e-13, "{x}");
        }
        let x: f64 = 1.0e4;
        assert!((tail_integral(x) / (2.0 / (3.0 * x.powi(3))) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn tail_bound_shape() {
        let p = CounterexampleParams::at_minimal_scale(3).unwrap();
        let l = p.compression as f64;
        let a = tail_bound(&p, 1.0, l).unwrap();
        let b = tail_bound(&p, 1.0, 2.0 * l).unwrap();
        assert!(a.is_finite() && a > 0.0 && b < a);
        assert!(tail_bound(&p, 1.0, l / 2.0).is_err());
    }

    #[test]
    fn empty_set_has_no_mass() {
        let p = CounterexampleParams::at_minimal_scale(2).unwrap();
        let inst = CounterexampleInstance::new(p, bump());
        let f = inst.function();
        assert_eq!(l2_mass_direct(&f, &IntervalSet::empty(), max_grid_step(&f)).unwrap(), 0.0);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = CounterexampleParams::at_minimal_scale(2).unwrap();
        let inst = CounterexampleInstance::new(p, bump());
        let f = inst.function();
        let e = IntervalSet::single(Interval::new(0.0, 1.0).unwrap());
        assert!(matches!(
            l2_mass_direct(&f, &e, 2.0 * max_grid_step(&f)),
            Err(Error::UnresolvedOscillation { .. })
        ));
    }

    #[test]
    fn direct_and_modulated_agree_at_level_two() {
        let p = CounterexampleParams::new(2, 40).unwrap();
        let inst = CounterexampleInstance::new(p, bump());
        let f = inst.function();
        let q = inst.placed_q();
        let a = l2_mass_direct(&f, &q.materialize(), max_grid_step(&f)).unwrap();
        let b = l2_mass_modulated(&f, &q).unwrap();
        assert!((a - b).abs() <= 1e-8 * a, "{a} {b}");
    }

    #[test]
    fn plancherel_on_bump() {
        let b = bump();
        assert!(plancherel_check(&b.samples(1024)) < 1e-6);
        assert_eq!(plancherel_check(&[]), 0.0);
    }
}
