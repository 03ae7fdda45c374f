//! Cube regeneration from stored impulse responses with any waveform.
//! Works purely from the stored responses; nothing upstream of them is recomputed.

use crate::channel::ImpulseResponse;
use crate::error::{config, Result};
use crate::num::Real;
use crate::rxsim::{simulate_cube, DataCube};
use crate::waveform::Waveform;

use super::challenge::Challenge;

/// `y_k = (h_c,k + h_t,k) ⊛ s + noise` for every CPI `k`.
pub fn regenerate_cube<T: Real>(
    clutter: &[ImpulseResponse<T>],
    target: &[ImpulseResponse<T>],
    waveform: &Waveform<T>,
    noise_power: f64,
    seed: u64,
    carrier: f64,
) -> Result<DataCube<T>> {
    if clutter.len() != target.len() || clutter.is_empty() {
        return config("need matching, non-empty clutter and target response lists");
    }
    let cubes = clutter
        .iter()
        .zip(target)
        .enumerate()
        .map(|(k, (c, t))| simulate_cube(c, t, std::slice::from_ref(waveform), noise_power, seed, k, carrier))
        .collect::<Result<Vec<_>>>()?;
    DataCube::stack(&cubes)
}

/// Regenerate a challenge's cube in f64 with a new waveform.
pub fn regenerate_from_challenge(ch: &Challenge, waveform: &Waveform<f64>, noise_power: f64) -> Result<DataCube<f64>> {
    let clutter: Vec<ImpulseResponse<f64>> = ch.clutter.iter().map(|h| h.cast()).collect();
    let target: Vec<ImpulseResponse<f64>> = ch.target.iter().map(|h| h.cast()).collect();
    regenerate_cube(&clutter, &target, waveform, noise_power, ch.manifest.seed, ch.manifest.carrier)
}
