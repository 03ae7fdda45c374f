//! Physics-based RF clutter simulation: terrain, scattering, array and
//! bistatic channel models, receiver IQ synthesis, covariance baselines,
//! radar signal processing, waveform optimization and MIMO support.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); geometry is
//! always `f64`. Concrete aliases are exported below.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod channel;
pub mod cofar;
pub mod covtrad;
pub mod dsp;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod mimo;
pub mod num;
pub mod ocean;
pub mod rxsim;
pub mod scattering;
pub mod scenario_io;
pub mod seed;
pub mod terrain;
pub mod waveform;

pub use error::{Error, Result};
pub use num::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type Waveform64 = waveform::Waveform<f64>;
pub type Waveform32 = waveform::Waveform<f32>;
pub type ImpulseResponse64 = channel::ImpulseResponse<f64>;
pub type ImpulseResponse32 = channel::ImpulseResponse<f32>;
pub type DataCube64 = rxsim::DataCube<f64>;
pub type DataCube32 = rxsim::DataCube<f32>;
