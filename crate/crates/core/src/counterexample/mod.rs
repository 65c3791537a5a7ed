//! Level-`n` witnesses `(S_n, Q_n, f_n)` and their assembly into a global pair.
//!
//! `f_n(t) = P(N t) φ̂(t)` with `P` the half-shifted Fejér kernel and
//! `φ(t) = ψ(L t)`, `L = 2ⁿ(2d+1)`. Its transform lives on `S_n`, the `2d+1`
//! intervals `[jN, jN + 1/L)`, while its mass sits on `Q_n`, the cells of
//! half-width `1/(nN)` around `(j + 1/2)/N`.

mod assembly;
mod bump;
mod search;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use assembly::{
    assemble_global, block_probes, block_thinness, thinness_constant, BlockPlacement, BlockThinness, GlobalPair,
};
pub use bump::{Bump, BumpKind, BumpSummary};
pub use search::{choose_scale, ScaleSearch, SearchStep, DEFAULT_SCALE_CAP, DEFAULT_TARGET_C};

use crate::error::{Error, Result};
use crate::interval_sets::{Interval, IntervalSet, PeriodicIntervalSet, RealSet};
use crate::trig_kernels::{minimal_fejer_order, shifted_fejer, ScaledTrigPoly};

/// Largest accepted `N`; keeps `N²` and the copy indices in `i64`.
pub const MAX_SCALE: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub n: u32,
    /// Fejér order `m = d + 1`
    pub m: u64,
    pub d: u64,
    /// `N`
    pub scale: u64,
    /// `L = 2ⁿ(2d+1)`
    pub compression: u64,
}

impl CounterexampleParams {
    pub fn new(n: u32, scale: u64) -> Result<Self> {
        if !(2..=40).contains(&n) {
            return Err(Error::InvalidArgument(format!("level n = {n} outside 2..=40")));
        }
        if scale > MAX_SCALE {
            return Err(Error::InvalidArgument(format!("scale N = {scale} exceeds {MAX_SCALE}")));
        }
        let m = minimal_fejer_order(n);
        let d = m - 1;
        let compression = (1u64 << n) * (2 * d + 1);
        if scale < compression {
            return Err(Error::InvalidArgument(format!(
                "scale N = {scale} must be at least L = {compression}"
            )));
        }
        Ok(Self { n, m, d, scale, compression })
    }

    /// Smallest admissible parameters, `N = L`.
    pub fn at_minimal_scale(n: u32) -> Result<Self> {
        let m = minimal_fejer_order(n.max(2));
        Self::new(n, (1u64 << n) * (2 * m - 1))
    }

    pub fn with_scale(&self, scale: u64) -> Result<Self> {
        Self::new(self.n, scale)
    }

    /// `‖f‖₂² = ‖P‖₂² ‖φ‖₂² = Σ c_k² / L`
    pub fn total_mass(&self) -> f64 {
        shifted_fejer::<f64>(self.m).expect("m >= 1").l2_norm_sq() / self.compression as f64
    }
}

/// `S_n = ⋃_{|j|<=d} [jN, jN + 1/L)`, kept in periodic form (period `N`).
pub fn build_s_n(params: &CounterexampleParams) -> PeriodicIntervalSet<f64> {
    let width = 1.0 / params.compression as f64;
    let pattern = IntervalSet::single(Interval::new(0.0, width).expect("positive width"));
    let d = params.d as i64;
    PeriodicIntervalSet::new(pattern, params.scale as f64, -d, d).expect("valid S_n")
}

/// `Q_n = ⋃_{|j|<N²} [(j + 1/2 - 1/n)/N, (j + 1/2 + 1/n)/N)`, cells clipped to
/// their period (only matters for `n <= 2`).
pub fn build_q_n(params: &CounterexampleParams) -> PeriodicIntervalSet<f64> {
    let nn = params.scale as f64;
    let half = 1.0 / params.n as f64;
    let lo = ((0.5 - half) / nn).max(0.0);
    let hi = ((0.5 + half) / nn).min(1.0 / nn);
    let pattern = IntervalSet::single(Interval::new(lo, hi).expect("positive cell"));
    let sq = (params.scale as i64).checked_mul(params.scale as i64).expect("N² fits in i64");
    PeriodicIntervalSet::new(pattern, 1.0 / nn, -sq + 1, sq - 1).expect("valid Q_n")
}

/// Evaluation of `f`; `bound_only` marks values taken from the decay envelope
/// because the argument lies past the transform table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub value: f64,
    pub bound_only: bool,
}

/// `f(t) = P(N(t - shift)) φ̂(t - shift)`, reported up to a unimodular phase:
/// `value` is the real amplitude `P(N u) R(u / L) / L`, whose modulus is `|f|`.
#[derive(Debug, Clone)]
pub struct ConcentratedFunction {
    poly: ScaledTrigPoly<f64>,
    bump: Arc<Bump>,
    compression: f64,
    shift: f64,
}

impl ConcentratedFunction {
    pub fn new(params: &CounterexampleParams, bump: Arc<Bump>, shift: f64) -> Self {
        let poly = shifted_fejer::<f64>(params.m)
            .and_then(|p| p.scale_to_period(params.scale))
            .expect("valid kernel");
        Self { poly, bump, compression: params.compression as f64, shift }
    }

    pub fn poly(&self) -> &ScaledTrigPoly<f64> {
        &self.poly
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    pub fn compression(&self) -> f64 {
        self.compression
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `sup |P| = m`
    pub fn peak(&self) -> f64 {
        self.poly.poly().eval(0.5)
    }

    /// Largest `|t - shift|` the table covers.
    pub fn table_radius(&self) -> f64 {
        self.bump.table_max_freq() * self.compression
    }

    /// `φ̂` amplitude at `u = t - shift`, `None` past the table.
    #[inline]
    pub(crate) fn envelope_at(&self, u: f64) -> Option<f64> {
        self.bump.transform(u / self.compression).map(|r| r / self.compression)
    }

    pub fn eval(&self, t: f64) -> FValue {
        let u = t - self.shift;
        let p = self.poly.eval(u);
        match self.envelope_at(u) {
            Some(e) => FValue { value: p * e, bound_only: false },
            None => FValue {
                value: p.abs() * self.bump.envelope(u / self.compression) / self.compression,
                bound_only: true,
            },
        }
    }

    /// `|f(t)|²`, or `None` past the table.
    #[inline]
    pub fn modulus_sq(&self, t: f64) -> Option<f64> {
        let u = t - self.shift;
        let e = self.envelope_at(u)?;
        let p = self.poly.eval(u);
        Some(p * p * e * e)
    }
}

/// One level of the construction.
#[derive(Debug, Clone)]
pub struct CounterexampleInstance {
    pub params: CounterexampleParams,
    pub s_n: PeriodicIntervalSet<f64>,
    pub q_n: PeriodicIntervalSet<f64>,
    pub bump: Arc<Bump>,
    /// Translation applied at global assembly.
    pub offset: f64,
    pub search: Option<ScaleSearch>,
}

impl CounterexampleInstance {
    pub fn new(params: CounterexampleParams, bump: Arc<Bump>) -> Self {
        Self {
            s_n: build_s_n(&params),
            q_n: build_q_n(&params),
            params,
            bump,
            offset: 0.0,
            search: None,
        }
    }

    /// `f_n` translated by the assembly offset.
    pub fn function(&self) -> ConcentratedFunction {
        ConcentratedFunction::new(&self.params, self.bump.clone(), self.offset)
    }

    /// `Q_n` translated by the assembly offset.
    pub fn placed_q(&self) -> PeriodicIntervalSet<f64> {
        self.q_n.translated(self.offset)
    }

    pub fn eval_f(&self, t: f64) -> FValue {
        self.function().eval(t)
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            params: self.params,
            offset: self.offset,
            s_n_measure: self.s_n.measure(),
            q_n_measure: self.q_n.measure(),
            s_n: self.s_n.clone(),
            q_n: self.q_n.clone(),
            bump: self.bump.summary(),
            search: self.search.clone(),
        }
    }
}

/// Serialized form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub params: CounterexampleParams,
    pub offset: f64,
    pub s_n_measure: f64,
    pub q_n_measure: f64,
    pub s_n: PeriodicIntervalSet<f64>,
    pub q_n: PeriodicIntervalSet<f64>,
    pub bump: BumpSummary,
    pub search: Option<ScaleSearch>,
}

impl InstanceRecord {
    /// Rebuilds the instance; the bump table must reproduce the recorded digest.
    pub fn restore(&self, bump: Arc<Bump>) -> Result<CounterexampleInstance> {
        if bump.summary().table_digest != self.bump.table_digest {
            return Err(Error::InvalidArgument(format!(
                "bump table digest mismatch for n = {}",
                self.params.n
            )));
        }
        let mut inst = CounterexampleInstance::new(self.params, bump);
        if inst.s_n != self.s_n || inst.q_n != self.q_n {
            return Err(Error::InvalidArgument(format!(
                "stored sets for n = {} do not match their parameters",
                self.params.n
            )));
        }
        inst.offset = self.offset;
        inst.search = self.search.clone();
        Ok(inst)
    }
}
