//! Receiver IQ synthesis: convolution of transmit waveforms with channel
//! impulse responses, plus thermal noise.
//!
//! This module consumes impulse responses; it never synthesizes them. Any
//! number of cubes can be produced from one set of responses by changing
//! the waveform alone.

use std::sync::Arc;

use ndarray::{Array3, Array4, ArrayView3, Axis};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::channel::ImpulseResponse;
use crate::error::{config, Result};
use crate::num::Real;
use crate::seed;
use crate::waveform::Waveform;

/// Linear convolution of `ir` and `waveform` (length `L + P − 1`) via FFT.
pub fn convolve_pulse<T: Real>(ir: &[Complex<T>], waveform: &[Complex<T>]) -> Vec<Complex<T>> {
    if ir.is_empty() || waveform.is_empty() {
        return Vec::new();
    }
    let out_len = ir.len() + waveform.len() - 1;
    let conv = FftConvolver::new(ir.len(), &[waveform]);
    conv.apply(&[(ir, 0)], out_len)
}

/// FFT convolution engine for a fixed IR length and a set of waveforms.
pub struct FftConvolver<T: Real> {
    size: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    spectra: Vec<Vec<Complex<T>>>,
}

impl<T: Real> FftConvolver<T> {
    pub fn new(ir_len: usize, waveforms: &[&[Complex<T>]]) -> Self {
        let longest = waveforms.iter().map(|w| w.len()).max().unwrap_or(1);
        let size = (ir_len + longest - 1).max(1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let spectra = waveforms
            .iter()
            .map(|w| {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); size];
                buf[..w.len()].copy_from_slice(w);
                forward.process(&mut buf);
                buf
            })
            .collect();
        FftConvolver { size, forward, inverse, spectra }
    }

    /// `Σᵢ irᵢ ⊛ waveform[kᵢ]`, truncated to `out_len` samples.
    pub fn apply(&self, terms: &[(&[Complex<T>], usize)], out_len: usize) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut acc = vec![zero; self.size];
        let mut buf = vec![zero; self.size];
        for (ir, k) in terms {
            buf.iter_mut().for_each(|z| *z = zero);
            buf[..ir.len()].copy_from_slice(ir);
            self.forward.process(&mut buf);
            for ((a, h), s) in acc.iter_mut().zip(&buf).zip(&self.spectra[*k]) {
                *a = *a + h * s;
            }
        }
        self.inverse.process(&mut acc);
        let scale = T::one() / T::lit(self.size as f64);
        acc.truncate(out_len.min(self.size));
        acc.iter_mut().for_each(|z| *z = *z * scale);
        acc
    }
}

/// Complex IQ samples `[cpi][channel][pulse][range sample]`.
///
/// Range sample `r` of a cube corresponds to delay `delay_origin + r/fs` of
/// the impulse responses that produced it; the convolution tail beyond the
/// receive window is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube<T: Real> {
    pub samples: Array4<Complex<T>>,
    pub sample_rate: f64,
    pub prf: f64,
    pub noise_power: f64,
    pub carrier: f64,
}

impl<T: Real> DataCube<T> {
    pub fn zeros(dims: (usize, usize, usize, usize), sample_rate: f64, prf: f64, noise_power: f64, carrier: f64) -> Self {
        DataCube { samples: Array4::zeros(dims), sample_rate, prf, noise_power, carrier }
    }

    /// `(cpis, channels, pulses, range bins)`
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        self.samples.dim()
    }

    pub fn cpi(&self, k: usize) -> ArrayView3<'_, Complex<T>> {
        self.samples.index_axis(Axis(0), k)
    }

    /// Concatenate single- or multi-CPI cubes along the CPI axis.
    pub fn stack(cubes: &[DataCube<T>]) -> Result<Self> {
        let first = cubes.first().ok_or_else(|| crate::Error::Config("no cubes to stack".into()))?;
        let (_, n, m, r) = first.dims();
        for c in cubes {
            let (_, n2, m2, r2) = c.dims();
            if (n, m, r) != (n2, m2, r2) || c.sample_rate != first.sample_rate || c.prf != first.prf {
                return config("cubes to stack have different layouts");
            }
        }
        let views: Vec<_> = cubes.iter().map(|c| c.samples.view()).collect();
        let samples = ndarray::concatenate(Axis(0), &views).map_err(|e| crate::Error::Config(e.to_string()))?;
        Ok(DataCube { samples, ..first.clone() })
    }

    pub fn cast<U: Real>(&self) -> DataCube<U> {
        DataCube {
            samples: self.samples.mapv(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()))),
            sample_rate: self.sample_rate,
            prf: self.prf,
            noise_power: self.noise_power,
            carrier: self.carrier,
        }
    }
}

/// One transmitter's contribution to a receiver: its channel and the
/// waveform(s) it sends (one for the whole CPI, or one per pulse).
pub struct Source<'a, T: Real> {
    pub ir: &'a ImpulseResponse<T>,
    pub waveforms: &'a [Waveform<T>],
}

/// Receiver-side settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiveConfig {
    /// Noise variance per complex sample.
    pub noise_power: f64,
    pub seed: u64,
    pub receiver: usize,
    pub cpi: usize,
    pub carrier: f64,
    /// Samples kept per pulse; defaults to the impulse response length.
    pub window: Option<usize>,
}

impl ReceiveConfig {
    pub fn new(noise_power: f64, seed: u64, cpi: usize, carrier: f64) -> Self {
        ReceiveConfig { noise_power, seed, receiver: 0, cpi, carrier, window: None }
    }
}

/// Superpose every source at one receiver and add circular Gaussian noise.
/// Noise for `(receiver, cpi, channel, pulse)` is drawn from its own derived
/// stream.
pub fn receive<T: Real>(sources: &[Source<'_, T>], cfg: &ReceiveConfig) -> Result<DataCube<T>> {
    let first = sources.first().ok_or_else(|| crate::Error::Config("no transmit sources".into()))?;
    let (channels, pulses, taps) = first.ir.taps.dim();
    let noise_power = cfg.noise_power;
    let window = cfg.window.unwrap_or(taps);
    if !(noise_power >= 0.0) {
        return config("noise power must be non-negative");
    }
    if window < taps {
        return config("receive window is shorter than the impulse response");
    }
    for s in sources {
        if !s.ir.same_layout(first.ir) {
            return config("impulse responses of all sources must share one layout");
        }
        if s.waveforms.len() != 1 && s.waveforms.len() != pulses {
            return config(format!("expected 1 or {pulses} waveforms, got {}", s.waveforms.len()));
        }
        if s.waveforms.iter().any(|w| w.sample_rate != first.ir.sample_rate) {
            return config("waveform sample rate differs from the impulse response sample rate");
        }
    }
    let all: Vec<&[Complex<T>]> = sources.iter().flat_map(|s| s.waveforms.iter().map(|w| w.samples.as_slice())).collect();
    let offsets: Vec<usize> = sources
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.waveforms.len();
            Some(o)
        })
        .collect();
    let engine = FftConvolver::new(taps, &all);
    let contiguous: Vec<ndarray::Array3<Complex<T>>> = sources.iter().map(|s| s.ir.taps.as_standard_layout().into_owned()).collect();
    let half = (noise_power / 2.0).sqrt();

    let rows: Vec<Vec<Complex<T>>> = (0..channels * pulses)
        .into_par_iter()
        .map(|k| {
            let (n, m) = (k / pulses, k % pulses);
            let terms: Vec<(&[Complex<T>], usize)> = contiguous
                .iter()
                .zip(sources)
                .zip(&offsets)
                .map(|((taps3, s), &o)| {
                    let row = taps3.slice(ndarray::s![n, m, ..]).to_slice().expect("standard layout");
                    let w = if s.waveforms.len() == 1 { 0 } else { m };
                    (row, o + w)
                })
                .collect();
            let mut y = engine.apply(&terms, window);
            y.resize(window, Complex::new(T::zero(), T::zero()));
            if noise_power > 0.0 {
                let mut rng = seed::rng(cfg.seed, &[seed::tag::NOISE, cfg.receiver as u64, cfg.cpi as u64, n as u64, m as u64]);
                for z in y.iter_mut() {
                    let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                    *z = *z + Complex::new(T::lit(half * re), T::lit(half * im));
                }
            }
            y
        })
        .collect();

    let mut cube = DataCube::zeros((1, channels, pulses, window), first.ir.sample_rate, first.ir.prf, noise_power, cfg.carrier);
    for (k, row) in rows.into_iter().enumerate() {
        let (n, m) = (k / pulses, k % pulses);
        for (r, z) in row.into_iter().enumerate() {
            cube.samples[[0, n, m, r]] = z;
        }
    }
    Ok(cube)
}

/// `y = (h_c + h_t) ⊛ s + noise` for one CPI.
pub fn simulate_cube<T: Real>(
    clutter: &ImpulseResponse<T>,
    target: &ImpulseResponse<T>,
    waveforms: &[Waveform<T>],
    noise_power: f64,
    seed_value: u64,
    cpi_index: usize,
    carrier: f64,
) -> Result<DataCube<T>> {
    if !clutter.same_layout(target) {
        return config("clutter and target impulse responses have different layouts");
    }
    let combined = clutter.add(target)?;
    receive(&[Source { ir: &combined, waveforms }], &ReceiveConfig::new(noise_power, seed_value, cpi_index, carrier))
}

/// Per-pulse slab helper used by tests and the CLI: `[channel][pulse][range]`.
pub fn cpi_slab<T: Real>(cube: &DataCube<T>, k: usize) -> Array3<Complex<T>> {
    cube.cpi(k).to_owned()
}
