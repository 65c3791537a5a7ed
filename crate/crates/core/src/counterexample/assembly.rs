use serde::{Deserialize, Serialize};

use super::CounterexampleInstance;
use crate::error::{Error, Result};
use crate::interval_sets::{epsilon_thin_check, BlockUnion, Interval, IntervalSet, RealSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPlacement {
    pub n: u32,
    pub scale: u64,
    pub offset: f64,
    pub left_edge: f64,
    pub right_edge: f64,
    pub q_measure: f64,
    /// Mass of the earlier blocks over `M_n`; the offset rule keeps it at most `1/n²`.
    pub density_before: f64,
    /// `|Q ∩ (0, M_n + N_n)| / (M_n + N_n)`, measured on the assembled set.
    pub density_at_right: f64,
    /// `1/n² + |Q_n|/M_n`
    pub density_bound: f64,
}

/// `S = ⋃ S_n` and `Q = ⋃ (Q_n + M_n)`.
#[derive(Debug, Clone)]
pub struct GlobalPair {
    pub s: IntervalSet<f64>,
    pub q: BlockUnion<f64>,
    pub placements: Vec<BlockPlacement>,
    pub levels: Vec<CounterexampleInstance>,
}

/// Places the blocks with `M_n = max(previous right edge + N_n, n² · Σ|Q_k|)`
/// over the blocks already placed.
pub fn assemble_global(mut levels: Vec<CounterexampleInstance>) -> Result<GlobalPair> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("no levels to assemble".into()));
    }
    levels.sort_by_key(|l| l.params.n);
    if levels.windows(2).any(|w| w[0].params.n == w[1].params.n) {
        return Err(Error::InvalidArgument("duplicate level".into()));
    }
    let mut right = 0.0f64;
    let mut cumulative = 0.0f64;
    let mut blocks = Vec::with_capacity(levels.len());
    let mut pending = Vec::with_capacity(levels.len());
    for level in &mut levels {
        let n = level.params.n as f64;
        let nn = level.params.scale as f64;
        let offset = (right + nn).max(n * n * cumulative);
        level.offset = offset;
        let placed = level.placed_q();
        let hull = placed.hull().expect("Q_n is nonempty");
        let q_measure = placed.measure();
        pending.push((level.params.n, level.params.scale, offset, hull, q_measure));
        blocks.push(placed);
        right = hull.hi();
        cumulative += q_measure;
    }
    let q = BlockUnion::new(blocks)?;
    let placements = pending
        .into_iter()
        .map(|(n, scale, offset, hull, q_measure)| {
            let r = offset + scale as f64;
            let density = q.measure_within(&Interval::new(0.0, r).expect("positive radius")) / r;
            let before = q.measure_within(&Interval::new(0.0, hull.lo()).expect("blocks start right of 0")) / offset;
            let nf = n as f64;
            BlockPlacement {
                n,
                scale,
                offset,
                left_edge: hull.lo(),
                right_edge: hull.hi(),
                q_measure,
                density_before: before,
                density_at_right: density,
                density_bound: 1.0 / (nf * nf) + q_measure / offset,
            }
        })
        .collect();
    let s = levels.iter().map(|l| l.s_n.materialize()).fold(IntervalSet::empty(), |acc, s| acc.union(&s));
    Ok(GlobalPair { s, q, placements, levels })
}

/// Largest windowed density of one block, probed on an even grid over
/// `[-N_n, N_n)` around the block centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockThinness {
    pub n: u32,
    /// Worst ratio with `Q_n` at its construction position.
    pub construction_worst: f64,
    /// Worst ratio with `Q_n + M_n` inside the assembled set.
    pub assembled_worst: f64,
}

/// Probe points `centre + (i + 1/2) 2N / count - N`.
pub fn block_probes(centre: f64, scale: u64, count: usize) -> Vec<f64> {
    let nn = scale as f64;
    let step = 2.0 * nn / count as f64;
    (0..count).map(|i| centre - nn + (i as f64 + 0.5) * step).collect()
}

pub fn block_thinness(pair: &GlobalPair, probes: usize) -> Result<Vec<BlockThinness>> {
    pair.levels
        .iter()
        .map(|level| {
            let here = epsilon_thin_check(&level.q_n, 1.0, &block_probes(0.0, level.params.scale, probes))?;
            let placed = epsilon_thin_check(&pair.q, 1.0, &block_probes(level.offset, level.params.scale, probes))?;
            Ok(BlockThinness {
                n: level.params.n,
                construction_worst: here.worst_ratio,
                assembled_worst: placed.worst_ratio,
            })
        })
        .collect()
}

/// `max n · eps_n` over the construction-frame worst ratios.
pub fn thinness_constant(rows: &[BlockThinness]) -> f64 {
    rows.iter().map(|r| r.n as f64 * r.construction_worst).fold(0.0, f64::max)
}
