//! Shifted-lattice counting against a set `Q`: the density `G(α, r)`, its
//! average over `α`, the superlevel sets `E_r`, dyadic block certificates and
//! the assembly of `Λ` from shifted lattices avoiding `Q`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_sets::{Interval, IntervalSet, RealSet};
use crate::scalar::{compensated_sum, Real};

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha >= T::zero() && alpha < T::one()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside [0, 1)")));
    }
    Ok(())
}

fn check_sigma<T: Real>(sigma: T) -> Result<()> {
    if !(sigma > T::zero() && sigma < T::one()) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma} outside (0, 1)")));
    }
    Ok(())
}

fn check_radius<T: Real>(r: T) -> Result<Interval<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(Interval::new_unchecked(T::zero(), r))
}

/// Points of `ℤ + α` in `(0, r)` outside `q`.
pub fn lattice_count_outside<T: Real, S: RealSet<T> + ?Sized>(alpha: T, r: T, q: &S) -> Result<u64> {
    check_alpha(alpha)?;
    let window = check_radius(r)?;
    let origin = alpha == T::zero();
    let all = window.lattice_count(alpha) - u64::from(origin);
    let inside = q.lattice_count_within(alpha, &window) - u64::from(origin && q.contains(T::zero()));
    Ok(all - inside)
}

/// `G(α, r) = #[(α + ℤ) ∩ Qᶜ ∩ (0, r)] / r`
pub fn lattice_density_g<T: Real, S: RealSet<T> + ?Sized>(alpha: T, r: T, q: &S) -> Result<T> {
    let count = lattice_count_outside(alpha, r, q)?;
    Ok(T::from_u64(count).expect("count fits") / r)
}

/// `α ↦ #[(α + ℤ) ∩ Qᶜ ∩ (0, r)]` on `(0, 1)`: constant on
/// `[starts[i], starts[i+1])`, last piece ending at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeStepFunction<T> {
    pub radius: T,
    pub starts: Vec<T>,
    pub counts: Vec<i64>,
}

impl<T: Real> LatticeStepFunction<T> {
    pub fn build<S: RealSet<T> + ?Sized>(q: &S, r: T) -> Result<Self> {
        let window = check_radius(r)?;
        let free = q.clip(&window).complement_within(&window);
        // left of every positive fractional part, ⌈x - α⌉ = ⌊x⌋ + 1 - [x ∈ ℤ]
        let ceil_near_zero = |x: T| {
            let f = x.floor();
            f.to_i64().expect("endpoint fits in i64") + i64::from(x != f)
        };
        let mut initial = 0i64;
        let mut events: Vec<(T, i64)> = Vec::with_capacity(2 * free.len());
        for piece in free.intervals() {
            initial += ceil_near_zero(piece.hi()) - ceil_near_zero(piece.lo());
            let (flo, fhi) = (piece.lo() - piece.lo().floor(), piece.hi() - piece.hi().floor());
            if flo > T::zero() {
                events.push((flo, 1));
            }
            if fhi > T::zero() {
                events.push((fhi, -1));
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite endpoints"));
        let mut starts = vec![T::zero()];
        let mut counts = vec![initial];
        for (at, delta) in events {
            let last = counts.len() - 1;
            if *starts.last().expect("nonempty") == at {
                counts[last] += delta;
            } else {
                starts.push(at);
                counts.push(counts[last] + delta);
            }
        }
        Ok(Self { radius: r, starts, counts })
    }

    fn pieces(&self) -> impl Iterator<Item = (T, T, i64)> + '_ {
        self.starts.iter().enumerate().map(move |(i, &a)| {
            let b = self.starts.get(i + 1).copied().unwrap_or_else(T::one);
            (a, b, self.counts[i])
        })
    }

    /// `∫₀¹ G(α, r) dα`, integrated piece by piece.
    pub fn integral(&self) -> T {
        compensated_sum(self.pieces().map(|(a, b, c)| (b - a) * T::from_int(c))) / self.radius
    }

    /// `{α : G(α, r) > level}`
    pub fn superlevel(&self, level: T) -> IntervalSet<T> {
        self.pieces()
            .filter(|&(a, b, c)| b > a && T::from_int(c) / self.radius > level)
            .map(|(a, b, _)| Interval::new_unchecked(a, b))
            .collect()
    }

    pub fn max_value(&self) -> T {
        T::from_int(self.counts.iter().copied().max().unwrap_or(0)) / self.radius
    }

    pub fn min_value(&self) -> T {
        T::from_int(self.counts.iter().copied().min().unwrap_or(0)) / self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedIdentity<T> {
    pub lhs: T,
    pub rhs: T,
}

pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// `∫₀¹ G(α, r) dα` against `|Qᶜ ∩ (0, r)| / r`.
pub fn averaged_g_identity<T: Real, S: RealSet<T> + ?Sized>(q: &S, r: T) -> Result<AveragedIdentity<T>> {
    let window = check_radius(r)?;
    let lhs = LatticeStepFunction::build(q, r)?.integral();
    let rhs = q.clip(&window).complement_within(&window).measure() / r;
    let tol = IDENTITY_TOLERANCE.max(64.0 * T::epsilon().as_f64());
    if (lhs - rhs).abs().as_f64() > tol {
        return Err(Error::IdentityViolation { lhs: lhs.as_f64(), rhs: rhs.as_f64() });
    }
    Ok(AveragedIdentity { lhs, rhs })
}

/// `E_r = {α ∈ [0, 1) : G(α, r) > 1 - σ/4}`
pub fn e_r_set<T: Real, S: RealSet<T> + ?Sized>(q: &S, r: T, sigma: T) -> Result<IntervalSet<T>> {
    check_sigma(sigma)?;
    let step = LatticeStepFunction::build(q, r)?;
    Ok(step.superlevel(T::one() - sigma / T::lit(4.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCertificate<T> {
    pub alpha: T,
    pub j: u32,
    pub count: u64,
    pub threshold: T,
    pub pass: bool,
}

pub const MAX_BLOCK_INDEX: u32 = 52;

/// `#[(ℤ + α) ∩ (B_j \ Q)]` against `(1 - σ/2)|B_j|`, `B_j = [2^j, 2^{j+1})`.
pub fn block_certificate<T: Real, S: RealSet<T> + ?Sized>(
    alpha: T,
    j: u32,
    q: &S,
    sigma: T,
) -> Result<BlockCertificate<T>> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    if j > MAX_BLOCK_INDEX {
        return Err(Error::InvalidArgument(format!("block index {j} exceeds {MAX_BLOCK_INDEX}")));
    }
    let len = T::lit((j as f64).exp2());
    let block = Interval::new_unchecked(len, len + len);
    let count = block.lattice_count(alpha) - q.lattice_count_within(alpha, &block);
    let threshold = (T::one() - sigma / T::lit(2.0)) * len;
    let pass = T::from_u64(count).expect("count fits") > threshold;
    Ok(BlockCertificate { alpha, j, count, threshold, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmAudit<T> {
    pub certificates: Vec<BlockCertificate<T>>,
    pub passed: u32,
    pub largest_passing: Option<u32>,
    /// Smallest `j0` with every block in `j0..=j_max` passing.
    pub passing_suffix_from: Option<u32>,
}

impl<T> BmAudit<T> {
    /// Whether every block with index in `from..=j_max` passes.
    pub fn passes_from(&self, from: u32) -> bool {
        self.certificates.iter().filter(|c| c.j >= from).all(|c| c.pass)
    }
}

/// Certificates for `j = 0..=j_max`; a finite prefix only.
pub fn bm_hypothesis_audit<T: Real, S: RealSet<T> + ?Sized>(
    alpha: T,
    q: &S,
    sigma: T,
    j_max: u32,
) -> Result<BmAudit<T>> {
    let certificates = (0..=j_max)
        .map(|j| block_certificate(alpha, j, q, sigma))
        .collect::<Result<Vec<_>>>()?;
    let passed = certificates.iter().filter(|c| c.pass).count() as u32;
    let largest_passing = certificates.iter().rev().find(|c| c.pass).map(|c| c.j);
    let passing_suffix_from = match certificates.iter().rposition(|c| !c.pass) {
        None => Some(0),
        Some(i) if i as u32 == j_max => None,
        Some(i) => Some(i as u32 + 1),
    };
    Ok(BmAudit { certificates, passed, largest_passing, passing_suffix_from })
}

/// `α` drawn uniformly from `[0, 1)` by a seeded generator.
pub fn sample_alphas(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloAudit {
    pub samples: usize,
    pub sigma: f64,
    pub j_max: u32,
    /// Fraction of samples passing block `j`, indexed by `j`.
    pub block_pass_fraction: Vec<f64>,
    /// Smallest `j0` such that at least `quorum` of the samples pass every
    /// block in `j0..=j_max`.
    pub tail_from: Option<u32>,
    pub tail_fraction: f64,
    pub quorum: f64,
    pub audits: Vec<BmAudit<f64>>,
}

/// Audits every sample and locates the dyadic tail on which a `quorum`
/// fraction of them pass.
pub fn monte_carlo_audit<S: RealSet<f64> + Sync + ?Sized>(
    q: &S,
    sigma: f64,
    j_max: u32,
    alphas: &[f64],
    quorum: f64,
) -> Result<MonteCarloAudit> {
    let audits = alphas
        .par_iter()
        .map(|&a| bm_hypothesis_audit(a, q, sigma, j_max))
        .collect::<Result<Vec<_>>>()?;
    let samples = audits.len().max(1) as f64;
    let block_pass_fraction = (0..=j_max as usize)
        .map(|j| audits.iter().filter(|a| a.certificates[j].pass).count() as f64 / samples)
        .collect();
    let fraction_from = |j0: u32| audits.iter().filter(|a| a.passes_from(j0)).count() as f64 / samples;
    let tail_from = (0..=j_max).find(|&j0| fraction_from(j0) >= quorum);
    let tail_fraction = tail_from.map(fraction_from).unwrap_or(0.0);
    Ok(MonteCarloAudit {
        samples: audits.len(),
        sigma,
        j_max,
        block_pass_fraction,
        tail_from,
        tail_fraction,
        quorum,
        audits,
    })
}

/// Binary radical inverse of `j >= 1`: 1/2, 1/4, 3/4, 1/8, ...
pub fn dense_sequence(j: u64) -> Result<f64> {
    if j == 0 || j >= 1 << 53 {
        return Err(Error::InvalidArgument(format!("sequence index {j} outside 1..2^53")));
    }
    Ok((j.reverse_bits() >> 11) as f64 * (-53f64).exp2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedAlpha {
    pub index: u64,
    pub alpha: f64,
    pub failed_blocks: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaAssembly {
    pub sigma: f64,
    pub window: Interval<f64>,
    pub audit_j_min: u32,
    pub audit_j_max: u32,
    pub alphas: Vec<f64>,
    pub skipped: Vec<SkippedAlpha>,
    pub per_alpha: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptions {
    pub sigma: f64,
    pub count: usize,
    pub window: Interval<f64>,
    pub audit_j_min: u32,
    pub audit_j_max: u32,
    pub sample_budget: u64,
}

/// `Λ = ⋃_j Γ_{α_j}` with `Γ_α = (ℤ + α) ∩ Qᶜ ∩ window`, taking the first
/// `count` terms of the dense sequence whose audit passes on
/// `audit_j_min..=audit_j_max`.
pub fn assemble_lambda<S: RealSet<f64> + ?Sized>(q: &S, opts: &LambdaOptions) -> Result<LambdaAssembly> {
    check_sigma(opts.sigma)?;
    if opts.count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if opts.audit_j_min > opts.audit_j_max {
        return Err(Error::InvalidArgument("audit_j_min exceeds audit_j_max".into()));
    }
    let mut alphas = Vec::with_capacity(opts.count);
    let mut skipped = Vec::new();
    let mut per_alpha = Vec::with_capacity(opts.count);
    let mut index = 0u64;
    while alphas.len() < opts.count {
        index += 1;
        if index > opts.sample_budget {
            return Err(Error::InsufficientShifts {
                accepted: alphas.len(),
                requested: opts.count,
                sampled: opts.sample_budget,
            });
        }
        let alpha = dense_sequence(index)?;
        let audit = bm_hypothesis_audit(alpha, q, opts.sigma, opts.audit_j_max)?;
        if !audit.passes_from(opts.audit_j_min) {
            let failed_blocks = audit.certificates.iter().filter(|c| c.j >= opts.audit_j_min && !c.pass).count() as u32;
            skipped.push(SkippedAlpha { index, alpha, failed_blocks });
            continue;
        }
        let gamma: Vec<f64> = opts
            .window
            .lattice_indices(alpha)
            .map(|k| k as f64 + alpha)
            .filter(|&x| !q.contains(x))
            .collect();
        alphas.push(alpha);
        per_alpha.push(gamma);
    }
    let mut lambda: Vec<f64> = per_alpha.iter().flatten().copied().collect();
    lambda.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    lambda.dedup();
    if let Some(&bad) = lambda.iter().find(|&&x| q.contains(x)) {
        return Err(Error::AvoidanceViolated { point: bad });
    }
    Ok(LambdaAssembly {
        sigma: opts.sigma,
        window: opts.window,
        audit_j_min: opts.audit_j_min,
        audit_j_max: opts.audit_j_max,
        alphas,
        skipped,
        per_alpha,
        lambda,
    })
}
