//! Fejér kernels, the half-period shifted kernel and its certificates.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Real};

/// Real, even, 1-periodic trigonometric polynomial `Σ_{|k|<=d} c_k e^{2πikt}`
/// with `c_k = c_{-k}`. Only `c_0..=c_d` are stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigPoly<T> {
    coeffs: Vec<T>,
}

impl<T: Real> TrigPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("need at least the constant coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![T::zero()] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_0, c_1, ..., c_d`
    pub fn half_coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> T {
        self.coeffs.get(k.unsigned_abs() as usize).copied().unwrap_or_else(T::zero)
    }

    /// `(k, c_k)` for `-d <= k <= d`.
    pub fn coefficients(&self) -> Vec<(i64, T)> {
        let d = self.degree() as i64;
        (-d..=d).map(|k| (k, self.coeff(k))).collect()
    }

    /// Clenshaw summation of `c_0 + 2 Σ_{k>=1} c_k cos(2πkt)`.
    pub fn eval(&self, t: T) -> T {
        let s = t - t.floor();
        let x = (T::TAU() * s).cos();
        let two_x = x + x;
        let (mut b1, mut b2) = (T::zero(), T::zero());
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = (c + c) + two_x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + x * b1 - b2
    }

    /// `Σ_k |c_k|²`
    pub fn l2_norm_sq(&self) -> T {
        let tail = compensated_sum(self.coeffs[1..].iter().map(|&c| c * c));
        self.coeffs[0] * self.coeffs[0] + tail + tail
    }

    /// Rectangle rule for `∫₀¹ |P|²` on `points` equispaced nodes; exact up to
    /// rounding once `points > 2d`.
    pub fn l2_norm_sq_quadrature(&self, points: usize) -> T {
        let g = T::from_usize(points).unwrap();
        compensated_sum((0..points).map(|i| {
            let v = self.eval(T::from_usize(i).unwrap() / g);
            v * v
        })) / g
    }

    /// `p(t + 1/2)`: multiplies `c_k` by `(-1)^k`.
    pub fn half_shift(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
            .collect();
        Self { coeffs }
    }

    pub fn scale_to_period(&self, scale: u64) -> Result<ScaledTrigPoly<T>> {
        if scale == 0 {
            return Err(Error::InvalidArgument("scale must be at least 1".into()));
        }
        Ok(ScaledTrigPoly { poly: self.clone(), scale })
    }
}

/// Fejér kernel `F_m` with `c_k = 1 - |k|/m`, degree `m - 1`.
pub fn fejer<T: Real>(m: u64) -> Result<TrigPoly<T>> {
    if m < 1 {
        return Err(Error::InvalidArgument("Fejér order must be at least 1".into()));
    }
    let mm = T::from_u64(m).unwrap();
    let coeffs = (0..m).map(|k| T::one() - T::from_u64(k).unwrap() / mm).collect();
    TrigPoly::new(coeffs)
}

/// `P(t) = F_m(t + 1/2)`, peaking at `t = 1/2`.
pub fn shifted_fejer<T: Real>(m: u64) -> Result<TrigPoly<T>> {
    Ok(fejer::<T>(m)?.half_shift())
}

/// Closed form `(1/m) (sin(πmt) / sin(πt))²`, with the limit `m` on integers.
pub fn fejer_closed_form<T: Real>(m: u64, t: T) -> T {
    let mm = T::from_u64(m).unwrap();
    let s = (T::PI() * t).sin();
    if s.abs() < T::epsilon() {
        return mm;
    }
    let num = (T::PI() * mm * t).sin();
    num * num / (mm * s * s)
}

/// Minimal Fejér order for level `n` together with its runtime certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeChoice<T> {
    pub n: u32,
    /// Fejér order, `m = d + 1`
    pub m: u64,
    pub d: u64,
    /// `1/n`
    pub bound: T,
    /// Largest `|P|` seen on the grid over `[0,1] \ [1/2 - 1/n, 1/2 + 1/n]`.
    pub measured_max: T,
    pub grid_points: usize,
}

/// `m = ⌈n / sin²(π/n)⌉`: the tail estimate `F_m(t) <= 1/(m sin²(πt))` is at
/// most `1/n` once `|t| >= 1/n`. Quotients within 1e-9 of an integer are
/// snapped, so `n = 3` gives exactly 4.
pub fn minimal_fejer_order(n: u32) -> u64 {
    let s = (std::f64::consts::PI / n as f64).sin();
    let x = n as f64 / (s * s);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Certificate grid points per unit of Fejér order, rounded up to a power of two.
const CERT_POINTS_PER_ORDER: usize = 1_000;

pub fn choose_degree<T: Real>(n: u32) -> Result<DegreeChoice<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("level must be at least 2, got {n}")));
    }
    let m = minimal_fejer_order(n);
    let p = shifted_fejer::<T>(m)?;
    let bound = T::one() / T::from_u32(n).unwrap();
    let half = T::lit(0.5);
    let (left, right) = (half - bound, half + bound);

    // P(i/g) for all i at once: the coefficients are real and even, so one
    // transform of the coefficient vector gives every grid value
    let g = (CERT_POINTS_PER_ORDER * m as usize).next_power_of_two();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); g];
    for (k, &c) in p.half_coeffs().iter().enumerate() {
        buf[k] = Complex::new(c, T::zero());
        if k > 0 {
            buf[g - k] = Complex::new(c, T::zero());
        }
    }
    FftPlanner::new().plan_fft_forward(g).process(&mut buf);

    let mut measured = T::zero();
    let mut grid_points = 0;
    if left > T::zero() {
        let gt = T::from_usize(g).unwrap();
        for (i, v) in buf.iter().enumerate() {
            let t = T::from_usize(i).unwrap() / gt;
            if t <= left || t >= right {
                measured = measured.max(v.re.abs());
                grid_points += 1;
            }
        }
        for t in [left, right, T::one()] {
            measured = measured.max(p.eval(t).abs());
            grid_points += 1;
        }
    }
    if measured > bound {
        return Err(Error::CertificateFailed { n, measured: measured.as_f64(), bound: bound.as_f64() });
    }
    Ok(DegreeChoice { n, m, d: m - 1, bound, measured_max: measured, grid_points })
}

/// `P_N(t) = P(N t)`, whose spectrum is the spike train `c_k δ(ξ - kN)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledTrigPoly<T> {
    poly: TrigPoly<T>,
    scale: u64,
}

impl<T: Real> ScaledTrigPoly<T> {
    pub fn poly(&self) -> &TrigPoly<T> {
        &self.poly
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn eval(&self, t: T) -> T {
        let u = t * T::from_u64(self.scale).unwrap();
        self.poly.eval(u)
    }

    /// `(kN, c_k)` for `|k| <= d`.
    pub fn spike_train(&self) -> Vec<(i64, T)> {
        let n = self.scale as i64;
        self.poly.coefficients().into_iter().map(|(k, c)| (k * n, c)).collect()
    }
}
