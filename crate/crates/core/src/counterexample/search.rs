use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Bump, CounterexampleInstance, CounterexampleParams};
use crate::concentration::{concentration_ratio, tail_bound, ConcentrationReport, MassMethod};
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_C: f64 = 3.0;
pub const DEFAULT_SCALE_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub scale: u64,
    /// Tail bound relative to `‖f‖²`.
    pub tail_ratio: f64,
    /// Full measured ratio, only computed for candidates that clear the tail budget.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSearch {
    pub target_ratio: f64,
    pub scale: u64,
    pub steps: Vec<SearchStep>,
    pub report: ConcentrationReport,
}

/// Smallest scale `N >= L` (on the doubling-then-bisection path) with
/// tail bound at most half the target and measured ratio at most the target.
///
/// Doubling brackets the tail condition, bisection on the integer scale
/// tightens it, then the in-window mass is measured; a failing measurement
/// doubles again.
pub fn choose_scale(
    n: u32,
    target_ratio: f64,
    bump: Arc<Bump>,
    cap: u64,
    method: MassMethod,
    refinement: u32,
) -> Result<CounterexampleInstance> {
    if !(target_ratio > 0.0) {
        return Err(Error::InvalidArgument(format!("target ratio must be positive, got {target_ratio}")));
    }
    let base = CounterexampleParams::at_minimal_scale(n)?;
    if base.scale > cap {
        return Err(Error::ScaleCapExceeded { n, cap, last_ratio: f64::INFINITY });
    }
    let mass = base.total_mass();
    let c1 = bump.c1();
    let tail_ratio = |scale: u64| -> Result<f64> {
        Ok(tail_bound(&base.with_scale(scale)?, c1, scale as f64)? / mass)
    };
    let budget = target_ratio / 2.0;
    let mut steps = Vec::new();

    let mut hi = base.scale;
    loop {
        let t = tail_ratio(hi)?;
        steps.push(SearchStep { scale: hi, tail_ratio: t, ratio: None });
        if t <= budget {
            break;
        }
        if hi.saturating_mul(2) > cap {
            return Err(Error::ScaleCapExceeded { n, cap, last_ratio: t });
        }
        hi *= 2;
    }
    if hi > base.scale {
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let t = tail_ratio(mid)?;
            steps.push(SearchStep { scale: mid, tail_ratio: t, ratio: None });
            if t <= budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    let mut scale = hi;
    loop {
        let mut inst = CounterexampleInstance::new(base.with_scale(scale)?, bump.clone());
        let report = concentration_ratio(&inst, method, refinement)?;
        steps.push(SearchStep { scale, tail_ratio: tail_ratio(scale)?, ratio: Some(report.ratio) });
        if report.ratio <= target_ratio {
            inst.search = Some(ScaleSearch { target_ratio, scale, steps, report });
            return Ok(inst);
        }
        if scale.saturating_mul(2) > cap {
            return Err(Error::ScaleCapExceeded { n, cap, last_ratio: report.ratio });
        }
        scale *= 2;
    }
}
