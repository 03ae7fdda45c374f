//! Green's-function channel synthesis.
//!
//! Every scatterer in the scene contributes one delayed, Doppler-shifted,
//! spatially steered tap to a `[channel][pulse][delay]` tapped delay line.
//! The impulse response is waveform independent; receive data is obtained
//! later by convolving it with whatever the transmitter sends.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, ArrayView1};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::array::{spatial_steering, ArrayGeometry};
use crate::error::{config, domain, Result};
use crate::num::{narrow, widen, Real};
use crate::scattering::{patch_power_scale, LinkBudget};
use crate::seed;
use crate::terrain::{PlatformState, Vec3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How per-scatterer phases are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Independent uniform phase per scatterer and realization.
    Random,
    /// Phase from the two-way path length.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticModel {
    /// Standard deviation of the intrinsic-motion Doppler jitter (Hz).
    pub doppler_jitter_std: f64,
    pub seed: u64,
    pub phase_mode: PhaseMode,
}

impl StochasticModel {
    pub fn new(doppler_jitter_std: f64, seed: u64, phase_mode: PhaseMode) -> Result<Self> {
        if !(doppler_jitter_std >= 0.0) {
            return config("doppler jitter std must be non-negative");
        }
        Ok(StochasticModel { doppler_jitter_std, seed, phase_mode })
    }

    pub fn deterministic() -> Self {
        StochasticModel { doppler_jitter_std: 0.0, seed: 0, phase_mode: PhaseMode::Deterministic }
    }
}

/// Delay, Doppler and complex amplitude of one scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchResponse {
    pub patch_id: usize,
    pub delay: f64,
    pub doppler: f64,
    pub amplitude: Complex<f64>,
    /// Unit vector from the receiver towards the scatterer.
    pub arrival: Vec3,
}

/// Geometry shared by every scatterer in one bistatic link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tx: PlatformState,
    pub rx: PlatformState,
    pub wavelength: f64,
}

impl Link {
    pub fn monostatic(platform: PlatformState, wavelength: f64) -> Self {
        Link { tx: platform, rx: platform, wavelength }
    }
}

/// Two-way delay, Doppler and path length for a scatterer at `position`
/// moving at `velocity`.
pub fn bistatic_geometry(link: &Link, position: &Vec3, velocity: &Vec3) -> Result<(f64, f64, f64, Vec3)> {
    let to_tx = position - link.tx.position;
    let to_rx = position - link.rx.position;
    let (r_tx, r_rx) = (to_tx.norm(), to_rx.norm());
    if r_tx == 0.0 || r_rx == 0.0 {
        return domain("scatterer coincides with a platform");
    }
    let (u_tx, u_rx) = (to_tx / r_tx, to_rx / r_rx);
    let closing = (link.tx.velocity - velocity).dot(&u_tx) + (link.rx.velocity - velocity).dot(&u_rx);
    let path = r_tx + r_rx;
    Ok((path / SPEED_OF_LIGHT, closing / link.wavelength, path, u_rx))
}

/// Response of one stationary clutter patch with received power scale `power_scale`.
pub fn patch_response(
    patch_id: usize,
    center: &Vec3,
    power_scale: f64,
    link: &Link,
    stochastic: &StochasticModel,
    realization: u64,
) -> Result<PatchResponse> {
    if !(power_scale >= 0.0) {
        return domain(format!("patch {patch_id}: power scale must be non-negative"));
    }
    let (delay, doppler, path, arrival) = bistatic_geometry(link, center, &Vec3::zeros())?;
    let (phase, jitter) = match stochastic.phase_mode {
        PhaseMode::Deterministic => (path_phase(path, link.wavelength), 0.0),
        PhaseMode::Random => {
            let mut rng = seed::rng(stochastic.seed, &[seed::tag::PATCH_PHASE, realization, patch_id as u64]);
            let phase = rng.random_range(0.0..2.0 * PI);
            let jitter = if stochastic.doppler_jitter_std > 0.0 {
                stochastic.doppler_jitter_std * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            (phase, jitter)
        }
    };
    Ok(PatchResponse {
        patch_id,
        delay,
        doppler: doppler + jitter,
        amplitude: Complex::from_polar(power_scale.sqrt(), phase),
        arrival,
    })
}

#[inline]
fn path_phase(path: f64, wavelength: f64) -> f64 {
    -2.0 * PI * (path / wavelength).fract()
}

/// A point scatterer (target or discrete) with a radar cross section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub position: Vec3,
    pub velocity: Vec3,
    pub rcs: f64,
}

/// Deterministic response of a point target; phase from path length.
pub fn target_response(id: usize, target: &PointTarget, link: &Link, tx_gain: f64, rx_gain: f64) -> Result<PatchResponse> {
    if !(target.rcs >= 0.0) {
        return domain("target rcs must be non-negative");
    }
    let (delay, doppler, path, arrival) = bistatic_geometry(link, &target.position, &target.velocity)?;
    let power = patch_power_scale(&LinkBudget {
        sigma0: target.rcs,
        area: 1.0,
        tx_gain,
        rx_gain,
        wavelength: link.wavelength,
        range_tx: (target.position - link.tx.position).norm(),
        range_rx: (target.position - link.rx.position).norm(),
        shadowed: false,
    })?;
    Ok(PatchResponse {
        patch_id: id,
        delay,
        doppler,
        amplitude: Complex::from_polar(power.sqrt(), path_phase(path, link.wavelength)),
        arrival,
    })
}

/// Fast-time and slow-time sampling of the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarTiming {
    pub prf: f64,
    pub sample_rate: f64,
    /// Delay of tap 0 (s).
    pub delay_origin: f64,
    pub num_taps: usize,
    pub pulses: usize,
}

impl RadarTiming {
    /// `num_taps = ⌈swath_delay · sample_rate⌉`.
    pub fn from_swath(prf: f64, sample_rate: f64, delay_origin: f64, swath_delay: f64, pulses: usize) -> Result<Self> {
        let t = RadarTiming { prf, sample_rate, delay_origin, num_taps: swath_taps(swath_delay, sample_rate), pulses };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prf > 0.0) {
            return config(format!("PRF must be positive, got {}", self.prf));
        }
        if !(self.sample_rate > 0.0) {
            return config(format!("sample rate must be positive, got {}", self.sample_rate));
        }
        if self.num_taps == 0 || self.pulses == 0 {
            return config("timing needs at least one tap and one pulse");
        }
        Ok(())
    }

    /// Tap index of `delay`, if it falls inside the window.
    pub fn tap_of(&self, delay: f64) -> Option<usize> {
        let k = ((delay - self.delay_origin) * self.sample_rate).round();
        (k >= 0.0 && k < self.num_taps as f64).then_some(k as usize)
    }
}

/// Tap count covering a delay window; tolerant to rounding in the product.
pub fn swath_taps(swath_delay: f64, sample_rate: f64) -> usize {
    ((swath_delay * sample_rate) - 1e-6).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Clutter,
    Target,
}

/// Tapped delay line per receive channel and pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse<T: Real> {
    /// `[channel][pulse][tap]`
    pub taps: Array3<Complex<T>>,
    pub sample_rate: f64,
    pub delay_origin: f64,
    pub prf: f64,
    pub kind: ChannelKind,
}

impl<T: Real> ImpulseResponse<T> {
    pub fn zeros(channels: usize, timing: &RadarTiming, kind: ChannelKind) -> Self {
        ImpulseResponse {
            taps: Array3::zeros((channels, timing.pulses, timing.num_taps)),
            sample_rate: timing.sample_rate,
            delay_origin: timing.delay_origin,
            prf: timing.prf,
            kind,
        }
    }

    pub fn channels(&self) -> usize {
        self.taps.dim().0
    }

    pub fn pulses(&self) -> usize {
        self.taps.dim().1
    }

    pub fn num_taps(&self) -> usize {
        self.taps.dim().2
    }

    pub fn pulse(&self, channel: usize, pulse: usize) -> ArrayView1<'_, Complex<T>> {
        self.taps.slice(ndarray::s![channel, pulse, ..])
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|z| widen(*z).norm_sqr()).sum()
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.taps.dim() == other.taps.dim()
            && self.sample_rate == other.sample_rate
            && self.delay_origin == other.delay_origin
            && self.prf == other.prf
    }

    /// Tap-wise sum; layouts must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.same_layout(other) {
            return config("impulse responses have different layouts");
        }
        Ok(ImpulseResponse { taps: &self.taps + &other.taps, ..self.clone() })
    }

    /// Round every tap to the precision of `U` and back.
    pub fn quantized<U: Real>(&self) -> Self {
        ImpulseResponse {
            taps: self.taps.mapv(|z| {
                let q = Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()));
                Complex::new(T::lit(q.re.to_f64_lossy()), T::lit(q.im.to_f64_lossy()))
            }),
            ..self.clone()
        }
    }

    pub fn cast<U: Real>(&self) -> ImpulseResponse<U> {
        ImpulseResponse {
            taps: self.taps.mapv(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()))),
            sample_rate: self.sample_rate,
            delay_origin: self.delay_origin,
            prf: self.prf,
            kind: self.kind,
        }
    }
}

/// Count of scatterers that fell outside the delay window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthesisReport {
    pub accumulated: usize,
    pub dropped: usize,
}

/// Per-pulse perturbation of a scatterer: extra accumulated Doppler phase
/// (in Hz·pulses, so the pulse phase is `2π(f·m + offset)/PRF`) and an
/// amplitude factor.
pub trait PulseModulation: Sync {
    fn modulation(&self, response_index: usize, pulse: usize) -> (f64, f64);
}

/// No modulation: every scatterer is static over the CPI.
pub struct Static;

impl PulseModulation for Static {
    #[inline]
    fn modulation(&self, _: usize, _: usize) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// Sum scatterer responses into an impulse response.
///
/// Tap placement is nearest-sample. Responses are accumulated in ascending
/// `patch_id` order for every `(channel, pulse)`, so the result does not
/// depend on the number of worker threads.
pub fn synthesize_ir<T: Real>(
    responses: &[PatchResponse],
    timing: &RadarTiming,
    array: &ArrayGeometry,
    kind: ChannelKind,
) -> Result<(ImpulseResponse<T>, SynthesisReport)> {
    synthesize_ir_modulated(responses, timing, array, kind, &Static)
}

pub fn synthesize_ir_modulated<T: Real>(
    responses: &[PatchResponse],
    timing: &RadarTiming,
    array: &ArrayGeometry,
    kind: ChannelKind,
    modulation: &dyn PulseModulation,
) -> Result<(ImpulseResponse<T>, SynthesisReport)> {
    timing.validate()?;
    let channels = array.len();
    let taps = timing.num_taps;

    let mut order: Vec<usize> = (0..responses.len()).collect();
    order.sort_by_key(|&i| responses[i].patch_id);

    // (response index, tap, steering) for every scatterer inside the window.
    let placed: Vec<(usize, usize, Vec<Complex<f64>>)> = order
        .par_iter()
        .filter_map(|&i| {
            let r = &responses[i];
            let tap = timing.tap_of(r.delay)?;
            Some(spatial_steering::<f64>(array, &r.arrival).map(|s| (i, tap, s.entries)))
        })
        .collect::<Result<_>>()?;
    let report = SynthesisReport { accumulated: placed.len(), dropped: responses.len() - placed.len() };
    if report.dropped > 0 {
        log::warn!("{} scatterers outside the delay window were dropped", report.dropped);
    }

    let slabs: Vec<Vec<Complex<f64>>> = (0..timing.pulses)
        .into_par_iter()
        .map(|m| {
            let mut slab = vec![Complex::new(0.0, 0.0); channels * taps];
            for (i, tap, steer) in &placed {
                let r = &responses[*i];
                let (offset, gain) = modulation.modulation(*i, m);
                let phase = 2.0 * PI * (r.doppler * m as f64 + offset) / timing.prf;
                let a = r.amplitude * gain * Complex::from_polar(1.0, phase);
                for (n, s) in steer.iter().enumerate() {
                    slab[n * taps + tap] += a * s;
                }
            }
            slab
        })
        .collect();

    let mut ir = ImpulseResponse::<T>::zeros(channels, timing, kind);
    for (m, slab) in slabs.iter().enumerate() {
        for n in 0..channels {
            for l in 0..taps {
                ir.taps[[n, m, l]] = narrow(slab[n * taps + l]);
            }
        }
    }
    Ok((ir, report))
}

/// Impulse response of a single point target.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_target_ir<T: Real>(
    id: usize,
    target: &PointTarget,
    link: &Link,
    tx_gain: f64,
    rx_gain: f64,
    timing: &RadarTiming,
    array: &ArrayGeometry,
) -> Result<(ImpulseResponse<T>, SynthesisReport)> {
    let r = target_response(id, target, link, tx_gain, rx_gain)?;
    if target.rcs == 0.0 {
        timing.validate()?;
        return Ok((ImpulseResponse::zeros(array.len(), timing, ChannelKind::Target), SynthesisReport::default()));
    }
    synthesize_ir(&[r], timing, array, ChannelKind::Target)
}

/// DFT of every `(channel, pulse)` delay line.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<T: Real> {
    /// `[channel][pulse][bin]`
    pub bins: Array3<Complex<T>>,
    pub bin_spacing: f64,
    pub kind: ChannelKind,
}

pub fn to_transfer_function<T: Real>(ir: &ImpulseResponse<T>) -> Result<TransferFunction<T>> {
    let (n, m, l) = ir.taps.dim();
    if l == 0 {
        return config("impulse response has no taps");
    }
    let fft = FftPlanner::<T>::new().plan_fft_forward(l);
    let mut bins = ir.taps.as_standard_layout().into_owned();
    for mut row in bins.rows_mut() {
        let mut buf = row.to_vec();
        fft.process(&mut buf);
        row.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    debug_assert_eq!(bins.dim(), (n, m, l));
    Ok(TransferFunction { bins, bin_spacing: ir.sample_rate / l as f64, kind: ir.kind })
}

/// Inverse of [`to_transfer_function`].
pub fn to_impulse_taps<T: Real>(tf: &TransferFunction<T>) -> Array3<Complex<T>> {
    let l = tf.bins.dim().2;
    let ifft = FftPlanner::<T>::new().plan_fft_inverse(l);
    let scale = T::one() / T::lit(l as f64);
    let mut taps = tf.bins.clone();
    for mut row in taps.rows_mut() {
        let mut buf = row.to_vec();
        ifft.process(&mut buf);
        row.iter_mut().zip(buf).for_each(|(d, s)| *d = s * scale);
    }
    taps
}

/// Lagged products `c[l] = Σₙ conj(h[n])·h[n+l]` for `l = 0..P−1`.
fn lag_products(h: &[Complex<f64>], p: usize) -> Vec<Complex<f64>> {
    (0..p)
        .map(|l| h.iter().zip(h.iter().skip(l)).map(|(a, b)| a.conj() * b).sum())
        .collect()
}

/// `HᴴH` where `H` is the `(L+P−1)×P` full convolution matrix of `h`.
pub fn convolution_gram<T: Real>(h: &[Complex<T>], p: usize) -> Array2<Complex<T>> {
    let wide: Vec<Complex<f64>> = h.iter().map(|z| widen(*z)).collect();
    toeplitz_from_lags(&lag_products(&wide, p))
}

fn toeplitz_from_lags<T: Real>(c: &[Complex<f64>]) -> Array2<Complex<T>> {
    let p = c.len();
    Array2::from_shape_fn((p, p), |(j, k)| {
        // gram[j][k] = c[j − k], with c[−l] = conj(c[l]).
        if j >= k {
            narrow(c[j - k])
        } else {
            narrow(c[k - j].conj())
        }
    })
}

/// Sample mean of `HᴴH` over `realizations` draws of a single delay line.
///
/// `generator(k)` returns the taps of realization `k`; it must be a pure
/// function of `k` for the result to be reproducible. Realizations are
/// evaluated in parallel and summed in index order.
pub fn ensemble_second_moment<T, F>(realizations: usize, waveform_len: usize, generator: F) -> Result<Array2<Complex<T>>>
where
    T: Real,
    F: Fn(usize) -> Result<Vec<Complex<T>>> + Sync,
{
    if realizations == 0 {
        return config("ensemble needs at least one realization");
    }
    if waveform_len == 0 {
        return config("waveform length must be positive");
    }
    let lags: Vec<Vec<Complex<f64>>> = (0..realizations)
        .into_par_iter()
        .map(|k| {
            let h: Vec<Complex<f64>> = generator(k)?.iter().map(|z| widen(*z)).collect();
            Ok(lag_products(&h, waveform_len))
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![Complex::new(0.0, 0.0); waveform_len];
    for c in &lags {
        for (acc, v) in mean.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let inv = 1.0 / realizations as f64;
    mean.iter_mut().for_each(|z| *z *= inv);
    Ok(toeplitz_from_lags(&mean))
}
