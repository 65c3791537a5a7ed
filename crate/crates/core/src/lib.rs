//! Concentration witnesses for Paley-Wiener spaces over unbounded spectra,
//! and the shifted-lattice counting used to certify uniqueness sets.
//!
//! Set algebra, trigonometric kernels and lattice counting are generic over
//! [`Real`]; the transform tables and L² integrators work in `f64`.

pub mod cli;
pub mod concentration;
pub mod counterexample;
pub mod error;
pub mod interval_sets;
pub mod scalar;
pub mod trig_kernels;
pub mod uniqueness;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Interval = interval_sets::Interval<f64>;
pub type IntervalSet = interval_sets::IntervalSet<f64>;
pub type PeriodicIntervalSet = interval_sets::PeriodicIntervalSet<f64>;
pub type BlockUnion = interval_sets::BlockUnion<f64>;
pub type TrigPoly = trig_kernels::TrigPoly<f64>;

pub type IntervalF32 = interval_sets::Interval<f32>;
pub type IntervalSetF32 = interval_sets::IntervalSet<f32>;
pub type PeriodicIntervalSetF32 = interval_sets::PeriodicIntervalSet<f32>;
pub type TrigPolyF32 = trig_kernels::TrigPoly<f32>;
