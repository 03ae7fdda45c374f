//! Dynamic sea clutter.
//!
//! Each sea patch carries a radial surface velocity that follows a seeded
//! Ornstein–Uhlenbeck process with stationary standard deviation
//! `kappa · wind_speed`, and a log-normal amplitude factor with unit median.
//! The clutter map is re-evaluated for every pulse.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::PulseModulation;
use crate::error::{config, domain, Result};
use crate::seed;
use crate::terrain::{LandCover, ScenePatch, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct OceanParams {
    pub wind_speed: f64,
    pub wind_direction: f64,
    /// Radial-velocity std per unit wind speed (dimensionless).
    pub kappa: f64,
    /// Decorrelation time of the surface velocity (s).
    pub correlation_time: f64,
    /// Log-amplitude std per unit wind speed (1/(m/s)).
    pub amplitude_sigma_per_wind: f64,
}

impl Default for OceanParams {
    fn default() -> Self {
        OceanParams {
            wind_speed: 0.0,
            wind_direction: 0.0,
            kappa: 0.1,
            correlation_time: 0.02,
            amplitude_sigma_per_wind: 0.01,
        }
    }
}

impl OceanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wind_speed >= 0.0) {
            return config("ocean.wind_speed must be non-negative");
        }
        if !(self.kappa >= 0.0) || !(self.amplitude_sigma_per_wind >= 0.0) {
            return config("ocean scale factors must be non-negative");
        }
        if !(self.correlation_time > 0.0) {
            return config("ocean correlation time must be positive");
        }
        Ok(())
    }

    pub fn velocity_std(&self) -> f64 {
        self.kappa * self.wind_speed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OceanState {
    pub params: OceanParams,
    pub wavelength: f64,
    pub patches: Vec<ScenePatch>,
}

impl OceanState {
    pub fn new(params: OceanParams, wavelength: f64, patches: Vec<ScenePatch>) -> Result<Self> {
        params.validate()?;
        if !(wavelength > 0.0) {
            return config("wavelength must be positive");
        }
        Ok(OceanState { params, wavelength, patches })
    }
}

/// Per-patch velocity and log-amplitude paths over `pulses` pulses.
fn surface_paths(params: &OceanParams, patch_id: usize, pulses: usize, prf: f64, master: u64) -> (Vec<f64>, Vec<f64>) {
    let sv = params.velocity_std();
    let sa = params.amplitude_sigma_per_wind * params.wind_speed;
    if sv == 0.0 && sa == 0.0 {
        return (vec![0.0; pulses], vec![0.0; pulses]);
    }
    let rho = (-1.0 / (prf * params.correlation_time)).exp();
    let innov = (1.0 - rho * rho).sqrt();
    let mut rng = seed::rng(master, &[seed::tag::OCEAN, patch_id as u64]);
    let mut v = Vec::with_capacity(pulses);
    let mut a = Vec::with_capacity(pulses);
    let (mut xv, mut xa) = (0.0, 0.0);
    for m in 0..pulses {
        let (nv, na): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        if m == 0 {
            xv = nv;
            xa = na;
        } else {
            xv = rho * xv + innov * nv;
            xa = rho * xa + innov * na;
        }
        v.push(sv * xv);
        a.push(sa * xa);
    }
    (v, a)
}

/// Doppler offset (Hz, monostatic `2v/λ`) and amplitude factor of every
/// patch at pulse `pulse_index`.
pub fn evolve_clutter_map(state: &OceanState, pulse_index: usize, prf: f64, master_seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(prf > 0.0) {
        return config("PRF must be positive");
    }
    Ok(state
        .patches
        .iter()
        .map(|p| {
            let (v, a) = surface_paths(&state.params, p.patch_id, pulse_index + 1, prf, master_seed);
            (2.0 * v[pulse_index] / state.wavelength, a[pulse_index].exp())
        })
        .collect())
}

/// Whole-CPI sea modulation, indexed like the patch list it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct OceanModulation {
    /// Accumulated Doppler offset `Σ_{k<m} δf_k` (Hz·pulses), `[patch][pulse]`.
    pub phase_offset: Array2<f64>,
    /// `[patch][pulse]`
    pub amplitude: Array2<f64>,
    /// `[patch][pulse]`
    pub doppler_offset: Array2<f64>,
}

impl OceanModulation {
    pub fn build(state: &OceanState, pulses: usize, prf: f64, master_seed: u64) -> Result<Self> {
        if !(prf > 0.0) {
            return config("PRF must be positive");
        }
        let n = state.patches.len();
        let mut phase_offset = Array2::zeros((n, pulses));
        let mut amplitude = Array2::zeros((n, pulses));
        let mut doppler_offset = Array2::zeros((n, pulses));
        for (i, p) in state.patches.iter().enumerate() {
            let (v, a) = surface_paths(&state.params, p.patch_id, pulses, prf, master_seed);
            let mut acc = 0.0;
            for m in 0..pulses {
                let df = 2.0 * v[m] / state.wavelength;
                phase_offset[[i, m]] = acc;
                acc += df;
                doppler_offset[[i, m]] = df;
                amplitude[[i, m]] = a[m].exp();
            }
        }
        Ok(OceanModulation { phase_offset, amplitude, doppler_offset })
    }
}

impl PulseModulation for OceanModulation {
    #[inline]
    fn modulation(&self, response_index: usize, pulse: usize) -> (f64, f64) {
        (self.phase_offset[[response_index, pulse]], self.amplitude[[response_index, pulse]])
    }
}

/// Doppler frequency of FFT bin `b` of `m` bins, wrapped to `[−PRF/2, PRF/2)`.
pub fn bin_frequency(b: usize, m: usize, prf: f64) -> f64 {
    let f = b as f64 / m as f64;
    crate::array::wrap_normalized_doppler(f) * prf
}

/// Power-weighted Doppler standard deviation over masked bins of a
/// `[doppler][range]` power map.
pub fn wind_doppler_spread(power: &Array2<f64>, mask: &Array2<bool>, prf: f64) -> Result<f64> {
    if power.is_empty() {
        return domain("empty range-Doppler map");
    }
    if power.dim() != mask.dim() {
        return config("mask shape differs from the map");
    }
    let m = power.dim().0;
    let (mut w, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for ((b, r), &p) in power.indexed_iter() {
        if !mask[[b, r]] {
            continue;
        }
        let f = bin_frequency(b, m, prf);
        w += p;
        s1 += p * f;
        s2 += p * f * f;
    }
    if !(w > 0.0) {
        return domain("no power inside the clutter mask");
    }
    let mean = s1 / w;
    Ok((s2 / w - mean * mean).max(0.0).sqrt())
}

/// Re-label patches lying within `width/2` of the segment `start → end`
/// (a ship wake footprint).
pub fn wake_strip(patches: &mut [ScenePatch], start: Vec3, end: Vec3, width: f64, class: LandCover) -> usize {
    let seg = (end - start).xy();
    let len2 = seg.norm_squared();
    let mut count = 0;
    for p in patches.iter_mut() {
        let rel = (p.center - start).xy();
        let t = if len2 > 0.0 { (rel.dot(&seg) / len2).clamp(0.0, 1.0) } else { 0.0 };
        if (rel - seg * t).norm() <= width / 2.0 {
            p.landcover = class;
            count += 1;
        }
    }
    count
}
