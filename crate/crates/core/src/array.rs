//! Antenna array geometry, steering vectors and beam-pattern gain.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{config, domain, Result};
use crate::num::{cis, widen, Real};
use crate::terrain::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub element_positions: Vec<Vec3>,
    pub wavelength: f64,
    /// Element pattern is `cosᵖ` of the angle from `boresight`.
    pub cos_exponent: f64,
    pub boresight: Vec3,
    /// Optional per-element complex gain errors.
    pub element_gains: Option<Vec<Complex<f64>>>,
}

impl ArrayGeometry {
    pub fn new(element_positions: Vec<Vec3>, wavelength: f64, boresight: Vec3, cos_exponent: f64) -> Result<Self> {
        if element_positions.is_empty() {
            return config("array needs at least one element");
        }
        if !(wavelength > 0.0) {
            return config(format!("wavelength must be positive, got {wavelength}"));
        }
        if element_positions.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return config("element positions must be finite");
        }
        if boresight.norm() == 0.0 {
            return config("boresight must be non-zero");
        }
        Ok(ArrayGeometry {
            element_positions,
            wavelength,
            cos_exponent,
            boresight: boresight.normalize(),
            element_gains: None,
        })
    }

    /// Uniform linear array with `n` elements spaced `spacing` metres along
    /// `axis`, centred on `center`.
    pub fn ula(n: usize, spacing: f64, axis: Vec3, center: Vec3, wavelength: f64, boresight: Vec3) -> Result<Self> {
        if n == 0 {
            return config("array needs at least one element");
        }
        let axis = axis.normalize();
        let mid = (n as f64 - 1.0) / 2.0;
        let positions = (0..n).map(|k| center + axis * ((k as f64 - mid) * spacing)).collect();
        Self::new(positions, wavelength, boresight, 1.0)
    }

    pub fn with_element_gains(mut self, gains: Vec<Complex<f64>>) -> Result<Self> {
        if gains.len() != self.len() {
            return config(format!("{} element gains for {} elements", gains.len(), self.len()));
        }
        self.element_gains = Some(gains);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.element_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_positions.is_empty()
    }

    /// Power pattern of one element towards `direction`; zero behind the
    /// boresight hemisphere.
    pub fn element_factor(&self, direction: &Vec3) -> f64 {
        let c = self.boresight.dot(direction);
        if c <= 0.0 {
            0.0
        } else {
            c.powf(self.cos_exponent)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteeringKind {
    Spatial,
    Temporal,
    SpaceTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector<T: Real> {
    pub kind: SteeringKind,
    pub entries: Vec<Complex<T>>,
}

impl<T: Real> SteeringVector<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Multiply every entry by `exp(jθ)`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = cis::<T>(theta);
        SteeringVector { kind: self.kind, entries: self.entries.iter().map(|z| z * r).collect() }
    }
}

fn check_unit(direction: &Vec3) -> Result<()> {
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return domain(format!("direction {direction:?} is not a unit vector"));
    }
    Ok(())
}

/// `exp(j·2π/λ·⟨pₙ − p₀, d⟩)` for every element `n`.
pub fn spatial_steering<T: Real>(array: &ArrayGeometry, direction: &Vec3) -> Result<SteeringVector<T>> {
    check_unit(direction)?;
    let k = 2.0 * PI / array.wavelength;
    let p0 = array.element_positions[0];
    let mut entries: Vec<Complex<T>> = array
        .element_positions
        .iter()
        .map(|p| cis(k * (p - p0).dot(direction)))
        .collect();
    if let Some(g) = &array.element_gains {
        for (e, gain) in entries.iter_mut().zip(g) {
            *e = Complex::new(T::lit(gain.re), T::lit(gain.im)) * *e;
        }
    }
    Ok(SteeringVector { kind: SteeringKind::Spatial, entries })
}

/// Wrap a normalized Doppler frequency into `[−0.5, 0.5)`.
pub fn wrap_normalized_doppler(f: f64) -> f64 {
    f - (f + 0.5).floor()
}

/// `exp(j·2π·f̄·m)` for `m = 0..M−1`.
pub fn temporal_steering<T: Real>(normalized_doppler: f64, pulses: usize) -> Result<SteeringVector<T>> {
    if pulses == 0 {
        return config("temporal steering needs at least one pulse");
    }
    let f = wrap_normalized_doppler(normalized_doppler);
    let entries = (0..pulses).map(|m| cis(2.0 * PI * f * m as f64)).collect();
    Ok(SteeringVector { kind: SteeringKind::Temporal, entries })
}

/// Kronecker product temporal ⊗ spatial; entry `m·N + n` is `tₘ·sₙ`.
pub fn space_time_steering<T: Real>(spatial: &SteeringVector<T>, temporal: &SteeringVector<T>) -> Result<SteeringVector<T>> {
    if spatial.kind != SteeringKind::Spatial || temporal.kind != SteeringKind::Temporal {
        return config("space-time steering needs a spatial and a temporal vector");
    }
    let entries = temporal
        .entries
        .iter()
        .flat_map(|t| spatial.entries.iter().map(move |s| t * s))
        .collect();
    Ok(SteeringVector { kind: SteeringKind::SpaceTime, entries })
}

/// `|wᴴ·a(d)|² · cosᵖ(angle from boresight)`.
pub fn pattern_gain<T: Real>(array: &ArrayGeometry, weights: &[Complex<T>], direction: &Vec3) -> Result<f64> {
    if weights.len() != array.len() {
        return config(format!("{} weights for {} elements", weights.len(), array.len()));
    }
    let element = array.element_factor(direction);
    if element == 0.0 {
        return Ok(0.0);
    }
    let a = spatial_steering::<f64>(array, direction)?;
    let sum: Complex<f64> = weights.iter().zip(&a.entries).map(|(w, s)| widen(*w).conj() * s).sum();
    Ok(sum.norm_sqr() * element)
}
