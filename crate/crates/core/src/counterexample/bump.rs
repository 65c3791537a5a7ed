//! The smooth bump `ψ` supported in `[0, 1]` and a tabulated transform.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `exp(-1/(t(1-t)))` on `(0, 1)`
    #[default]
    Classic,
}

impl BumpKind {
    fn raw(self, t: f64) -> f64 {
        match self {
            BumpKind::Classic => {
                if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (t * (1.0 - t))).exp()
                }
            }
        }
    }
}

/// Samples per unit length used for the transform table.
const TABLE_SAMPLES: usize = 1024;
/// Zero-padding factor; table spacing in frequency is `1 / TABLE_PAD`.
const TABLE_PAD: usize = 128;
/// Largest tabulated frequency.
const TABLE_MAX_FREQ: f64 = 256.0;
/// Relative headroom added to the measured decay constant.
const C1_MARGIN: f64 = 1.01;

/// Normalized bump with its transform table and decay certificate.
///
/// `ψ` is symmetric about 1/2, so `ψ̂(ξ) = e^{-iπξ} R(ξ)` with `R` real and
/// even. The table stores `R`; every functional downstream only needs `|ψ̂| = |R|`.
#[derive(Debug, Clone)]
pub struct Bump {
    kind: BumpKind,
    scale: f64,
    l2_norm: f64,
    step: f64,
    table: Vec<f64>,
    c1: f64,
    c1_at: f64,
    interp_error: f64,
    convergence_delta: f64,
    digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSummary {
    pub kind: BumpKind,
    pub l2_norm: f64,
    pub integral: f64,
    pub c1: f64,
    pub c1_at: f64,
    pub table_step: f64,
    pub table_max_freq: f64,
    pub interp_error: f64,
    pub convergence_delta: f64,
    pub table_digest: String,
}

fn trapezoid_sq(kind: BumpKind, points: usize) -> f64 {
    // the bump vanishes to all orders at both ends, so the rule is spectrally accurate
    let h = 1.0 / points as f64;
    compensated_sum((1..points).map(|j| kind.raw(j as f64 * h).powi(2))) * h
}

/// `R(ξ)` sampled at `ξ = k / pad`, `0 <= k <= count`, from `samples` points.
fn transform_table(kind: BumpKind, scale: f64, samples: usize, pad: usize, count: usize) -> Vec<f64> {
    let len = samples * pad;
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|j| {
            let v = if j < samples { scale * kind.raw(j as f64 / samples as f64) } else { 0.0 };
            Complex::new(v, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let h = 1.0 / samples as f64;
    (0..=count)
        .map(|k| {
            let xi = k as f64 / pad as f64;
            let phase = Complex::from_polar(1.0, std::f64::consts::PI * xi);
            (phase * buf[k] * h).re
        })
        .collect()
}

impl Bump {
    pub fn build(kind: BumpKind) -> Result<Self> {
        let coarse = trapezoid_sq(kind, 2048);
        let fine = trapezoid_sq(kind, 4096);
        if (coarse - fine).abs() > 1e-12 * fine {
            return Err(Error::Convergence(format!(
                "normalization quadrature: {coarse} vs {fine}"
            )));
        }
        let scale = 1.0 / fine.sqrt();
        let l2_norm = (trapezoid_sq(kind, 8192) * scale * scale).sqrt();
        if (l2_norm - 1.0).abs() > 1e-8 {
            return Err(Error::Convergence(format!("normalized L2 norm {l2_norm}")));
        }

        let count = (TABLE_MAX_FREQ * TABLE_PAD as f64) as usize;
        let table = transform_table(kind, scale, TABLE_SAMPLES, TABLE_PAD, count);
        let half = transform_table(kind, scale, TABLE_SAMPLES / 2, TABLE_PAD, count);
        let convergence_delta =
            table.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if convergence_delta > 1e-10 {
            return Err(Error::Convergence(format!(
                "transform table changes by {convergence_delta:e} under sample doubling"
            )));
        }

        let mut digest = Sha256::new();
        for v in &table {
            digest.update(v.to_le_bytes());
        }
        let digest = hex::encode(digest.finalize());

        let mut bump = Self {
            kind,
            scale,
            l2_norm,
            step: 1.0 / TABLE_PAD as f64,
            table,
            c1: 0.0,
            c1_at: 0.0,
            interp_error: 0.0,
            convergence_delta,
            digest,
        };
        bump.certify_interpolation();
        bump.certify_decay()?;
        Ok(bump)
    }

    /// Midpoint interpolation error against direct quadrature.
    fn certify_interpolation(&mut self) {
        let mut worst: f64 = 0.0;
        let last = self.table.len() - 3;
        for i in (0..last).step_by(97) {
            let xi = (i as f64 + 0.5) * self.step;
            let interp = self.transform(xi).expect("inside table");
            worst = worst.max((interp - self.transform_direct(xi, 4096)).abs());
        }
        self.interp_error = worst;
    }

    /// `C₁ = max (1 + ξ²)|ψ̂(ξ)|` over the table, with margin, then checked at
    /// doubling radii far past the table.
    fn certify_decay(&mut self) -> Result<()> {
        let (mut c1, mut at) = (0.0_f64, 0.0);
        for (k, v) in self.table.iter().enumerate() {
            let xi = k as f64 * self.step;
            let w = (1.0 + xi * xi) * v.abs();
            if w > c1 {
                c1 = w;
                at = xi;
            }
        }
        self.c1 = c1 * C1_MARGIN;
        self.c1_at = at;
        for k in -3..=12 {
            let xi = 2f64.powi(k);
            let w = (1.0 + xi * xi) * self.transform_direct(xi, 16384).abs();
            if w > self.c1 {
                return Err(Error::Convergence(format!(
                    "decay certificate fails at ξ = {xi}: {w} > {}",
                    self.c1
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> BumpKind {
        self.kind
    }

    /// `ψ(t)`
    pub fn eval(&self, t: f64) -> f64 {
        self.scale * self.kind.raw(t)
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn table_max_freq(&self) -> f64 {
        (self.table.len() - 3) as f64 * self.step
    }

    /// Interpolated `R(ξ)`; `None` past the table.
    pub fn transform(&self, xi: f64) -> Option<f64> {
        let x = xi.abs() / self.step;
        let i = x.floor() as usize;
        if i + 2 >= self.table.len() {
            return None;
        }
        let u = x - i as f64;
        let at = |j: isize| self.table[j.unsigned_abs()];
        let i = i as isize;
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // four-point Lagrange cubic on nodes -1, 0, 1, 2
        let v = -p0 * u * (u - 1.0) * (u - 2.0) / 6.0 + p1 * (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
            - p2 * (u + 1.0) * u * (u - 2.0) / 2.0
            + p3 * (u + 1.0) * u * (u - 1.0) / 6.0;
        Some(v)
    }

    /// `R(ξ)` by direct trapezoid quadrature on `points` nodes.
    pub fn transform_direct(&self, xi: f64, points: usize) -> f64 {
        let h = 1.0 / points as f64;
        let tau = std::f64::consts::TAU;
        compensated_sum((1..points).map(|j| {
            let t = j as f64 * h;
            self.eval(t) * (tau * xi * (t - 0.5)).cos()
        })) * h
    }

    /// `C₁ / (1 + ξ²)`
    pub fn envelope(&self, xi: f64) -> f64 {
        self.c1 / (1.0 + xi * xi)
    }

    pub fn summary(&self) -> BumpSummary {
        BumpSummary {
            kind: self.kind,
            l2_norm: self.l2_norm,
            integral: self.table[0],
            c1: self.c1,
            c1_at: self.c1_at,
            table_step: self.step,
            table_max_freq: self.table_max_freq(),
            interp_error: self.interp_error,
            convergence_delta: self.convergence_delta,
            table_digest: self.digest.clone(),
        }
    }

    /// Samples `ψ(j / points)`, `0 <= j < points`.
    pub fn samples(&self, points: usize) -> Vec<f64> {
        (0..points).map(|j| self.eval(j as f64 / points as f64)).collect()
    }
}
