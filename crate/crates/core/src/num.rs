//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that only manipulates samples (waveforms, convolutions,
//! covariance matrices, eigen-solves, range-Doppler processing) is written
//! against [`Real`] so it runs in either `f32` or `f64`. Scene geometry is
//! always carried in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar usable by every numeric kernel in the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Display + Debug
{
    /// Machine epsilon of the type, as `f64`.
    const EPS_F64: f64;

    /// Lossy conversion from `f64`. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const EPS_F64: f64 = f32::EPSILON as f64;
}

impl Real for f64 {
    const EPS_F64: f64 = f64::EPSILON;
}

/// `exp(j·phase)` for a phase given in `f64`.
#[inline]
pub fn cis<T: Real>(phase: f64) -> Complex<T> {
    let (s, c) = phase.sin_cos();
    Complex::new(T::lit(c), T::lit(s))
}

/// Widen a complex sample to `f64`.
#[inline]
pub fn widen<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// Narrow an `f64` complex sample to `T`.
#[inline]
pub fn narrow<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// Sum of squared magnitudes.
pub fn energy<T: Real>(xs: &[Complex<T>]) -> T {
    xs.iter().map(|z| z.norm_sqr()).sum()
}

/// Relative L2 distance `‖a − b‖ / ‖b‖`, evaluated in `f64`.
///
/// Returns the absolute distance when `b` is identically zero.
pub fn rel_l2<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> f64 {
    assert_eq!(a.len(), b.len(), "rel_l2 length mismatch");
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (widen(*x) - widen(*y)).norm_sqr();
        den += widen(*y).norm_sqr();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// `10·log10(x)` with a floor so that zero maps to a finite value.
#[inline]
pub fn db10(x: f64) -> f64 {
    10.0 * x.max(1e-300).log10()
}
