//! Cognitive fully adaptive waveform design: the unit-energy transmit
//! waveform maximizing expected SCNR is the principal generalized
//! eigenvector of the target and clutter-plus-noise channel moments.

use ndarray::{s, Array2};
use num_complex::Complex;
use rayon::prelude::*;

use crate::channel::{convolution_gram, ensemble_second_moment, ImpulseResponse};
use crate::error::{config, domain, Error, Result};
use crate::linalg;
use crate::num::Real;

/// `A = E{H_cᴴH_c} + σ²I` and `B = E{H_tᴴH_t}`, both `P×P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMoments<T: Real> {
    pub a: Array2<Complex<T>>,
    pub b: Array2<Complex<T>>,
    pub noise_power: f64,
    /// Number of realizations behind the expectations (0 if given directly).
    pub realizations: usize,
}

fn symmetrize<T: Real>(m: &mut Array2<Complex<T>>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for j in 0..n {
        m[[j, j]] = Complex::new(m[[j, j]].re, T::zero());
        for k in j + 1..n {
            let avg = (m[[j, k]] + m[[k, j]].conj()) * half;
            m[[j, k]] = avg;
            m[[k, j]] = avg.conj();
        }
    }
}

impl<T: Real> ChannelMoments<T> {
    /// Build from the clutter moment `E{H_cᴴH_c}`, target moment and noise
    /// variance. Inputs must be Hermitian to `1e-10` (relative) and are
    /// symmetrized exactly.
    pub fn new(clutter_moment: Array2<Complex<T>>, target_moment: Array2<Complex<T>>, noise_power: f64) -> Result<Self> {
        let p = clutter_moment.nrows();
        if !clutter_moment.is_square() || target_moment.dim() != (p, p) {
            return config("channel moments must be square and of equal size");
        }
        if !(noise_power >= 0.0) {
            return config("noise power must be non-negative");
        }
        let tol = 1e-10f64.max(T::epsilon().to_f64_lossy() * 100.0);
        for (name, m) in [("clutter", &clutter_moment), ("target", &target_moment)] {
            if !linalg::is_hermitian(m, tol) {
                return Err(Error::Domain(format!("{name} moment is not Hermitian")));
            }
        }
        let mut a = clutter_moment;
        for j in 0..p {
            a[[j, j]] = a[[j, j]] + Complex::new(T::lit(noise_power), T::zero());
        }
        let mut b = target_moment;
        symmetrize(&mut a);
        symmetrize(&mut b);
        Ok(ChannelMoments { a, b, noise_power, realizations: 0 })
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `SᴴBS / SᴴAS` for unit-energy `S`.
pub fn scnr<T: Real>(s: &[Complex<T>], moments: &ChannelMoments<T>) -> Result<T> {
    if s.len() != moments.len() {
        return config(format!("waveform length {} does not match moment size {}", s.len(), moments.len()));
    }
    let e: f64 = s.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum();
    let tol = 1e-9f64.max(T::epsilon().to_f64_lossy() * 16.0 * s.len() as f64);
    if (e - 1.0).abs() > tol {
        return domain(format!("waveform energy {e} is not 1"));
    }
    let num = linalg::quadratic_form(&moments.b, s);
    let den = linalg::quadratic_form(&moments.a, s);
    if !(den > T::zero()) {
        return Err(Error::Conditioning("clutter-plus-noise energy is not positive".into()));
    }
    Ok(num / den)
}

/// Generalized eigen-decomposition of `(B, A)`: ascending eigenvalues and
/// `A`-whitened eigenvectors `L⁻ᴴ u` mapped back to waveform space.
fn generalized<T: Real>(moments: &ChannelMoments<T>) -> Result<(Vec<T>, Array2<Complex<T>>, Array2<Complex<T>>)> {
    if moments.is_empty() {
        return config("channel moments are empty");
    }
    let l = linalg::cholesky(&moments.a).map_err(|e| match e {
        Error::Conditioning(m) => Error::Conditioning(format!("clutter-plus-noise moment is singular: {m}")),
        other => other,
    })?;
    let c = linalg::whiten(&l, &moments.b);
    let (values, vectors) = linalg::hermitian_eigen(&c)?;
    Ok((values, vectors, l))
}

/// Ascending generalized eigenvalues of `B S = λ A S`.
pub fn generalized_eigenvalues<T: Real>(moments: &ChannelMoments<T>) -> Result<Vec<T>> {
    Ok(generalized(moments)?.0)
}

/// Rotate so the first entry with non-negligible magnitude is real positive.
pub fn canonical_phase<T: Real>(s: &mut [Complex<T>]) {
    let max = s.iter().map(|z| z.norm()).fold(T::zero(), |a, b| if b > a { b } else { a });
    let tol = max * T::lit(1e-8);
    if let Some(i) = s.iter().position(|z| z.norm() > tol) {
        let r = s[i].norm();
        let rot = s[i].conj() / r;
        s.iter_mut().for_each(|x| *x = *x * rot);
        s[i] = Complex::new(r, T::zero());
    }
}

/// `(S*, λ*)`: unit-energy principal generalized eigenvector and its
/// eigenvalue, which equals `scnr(S*)`.
pub fn optimal_waveform<T: Real>(moments: &ChannelMoments<T>) -> Result<(Vec<Complex<T>>, T)> {
    let (values, vectors, l) = generalized(moments)?;
    let p = values.len();
    let u: Vec<Complex<T>> = vectors.column(p - 1).to_vec();
    let mut s = linalg::adjoint_back_solve(&l, &u);
    let norm = s.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    s.iter_mut().for_each(|z| *z = *z / norm);
    canonical_phase(&mut s);
    Ok((s, values[p - 1]))
}

/// `10·log10(λmax/λmin)` of the generalized spectrum.
pub fn max_gain_db<T: Real>(moments: &ChannelMoments<T>) -> Result<f64> {
    let values = generalized_eigenvalues(moments)?;
    let min = values[0].to_f64_lossy();
    let max = values[values.len() - 1].to_f64_lossy();
    if !(min > 0.0) {
        return Err(Error::Conditioning(format!("smallest generalized eigenvalue is {min:e}")));
    }
    Ok(10.0 * (max / min).log10())
}

/// Moments estimated from `K` seeded channel realizations for each of
/// clutter and target (see [`ensemble_second_moment`]).
pub fn moments_from_ensembles<T, FC, FT>(realizations: usize, waveform_len: usize, clutter: FC, target: FT, noise_power: f64) -> Result<ChannelMoments<T>>
where
    T: Real,
    FC: Fn(usize) -> Result<Vec<Complex<T>>> + Sync,
    FT: Fn(usize) -> Result<Vec<Complex<T>>> + Sync,
{
    let a = ensemble_second_moment(realizations, waveform_len, clutter)?;
    let b = ensemble_second_moment(realizations, waveform_len, target)?;
    let mut m = ChannelMoments::new(a, b, noise_power)?;
    m.realizations = realizations;
    Ok(m)
}

/// Target statistics used for range regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetModel {
    /// Point target: `B = I`.
    Delta,
    /// Target moment from the supplied target impulse response.
    FromResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSolution<T: Real> {
    /// CPI or pulse index the moments were estimated for.
    pub index: usize,
    pub range_start: usize,
    pub range_end: usize,
    pub lambda: T,
    pub max_gain_db: f64,
    pub waveform: Vec<Complex<T>>,
    pub realizations: usize,
}

/// Which realizations of an impulse response feed the moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Redesign {
    /// All channels and pulses of the CPI.
    PerCpi,
    /// All channels of one pulse.
    PerPulse(usize),
}

fn region_moment<T: Real>(ir: &ImpulseResponse<T>, start: usize, end: usize, p: usize, mode: Redesign) -> Result<(Array2<Complex<T>>, usize)> {
    let (n, m, _) = ir.taps.dim();
    let pulses: Vec<usize> = match mode {
        Redesign::PerCpi => (0..m).collect(),
        Redesign::PerPulse(k) if k < m => vec![k],
        Redesign::PerPulse(k) => return config(format!("pulse {k} out of range")),
    };
    let rows: Vec<(usize, usize)> = (0..n).flat_map(|c| pulses.iter().map(move |&q| (c, q))).collect();
    let k = rows.len();
    let gen = |i: usize| -> Result<Vec<Complex<T>>> {
        let (c, q) = rows[i];
        Ok(ir.taps.slice(s![c, q, start..end]).to_vec())
    };
    Ok((ensemble_second_moment(k, p, gen)?, k))
}

/// Independent waveform solutions for each range region `[start, end)` of
/// one CPI's impulse responses, in parallel.
pub fn solve_regions<T: Real>(
    clutter: &ImpulseResponse<T>,
    target: &ImpulseResponse<T>,
    regions: &[(usize, usize)],
    waveform_len: usize,
    noise_power: f64,
    target_model: TargetModel,
    mode: Redesign,
    index: usize,
) -> Result<Vec<RegionSolution<T>>> {
    if !clutter.same_layout(target) {
        return config("clutter and target responses have different layouts");
    }
    let taps = clutter.num_taps();
    if regions.iter().any(|&(a, b)| a >= b || b > taps) {
        return config("range region outside the impulse response");
    }
    regions
        .par_iter()
        .map(|&(start, end)| {
            let (a, k) = region_moment(clutter, start, end, waveform_len, mode)?;
            let b = match target_model {
                TargetModel::Delta => Array2::<Complex<T>>::eye(waveform_len),
                TargetModel::FromResponse => region_moment(target, start, end, waveform_len, mode)?.0,
            };
            let mut moments = ChannelMoments::new(a, b, noise_power)?;
            moments.realizations = k;
            let (waveform, lambda) = optimal_waveform(&moments)?;
            let gain = max_gain_db(&moments).unwrap_or(f64::NAN);
            Ok(RegionSolution { index, range_start: start, range_end: end, lambda, max_gain_db: gain, waveform, realizations: k })
        })
        .collect()
}

/// Equal-width range regions covering `[0, taps)`.
pub fn split_regions(taps: usize, count: usize) -> Vec<(usize, usize)> {
    let count = count.clamp(1, taps.max(1));
    (0..count).map(|i| (i * taps / count, (i + 1) * taps / count)).filter(|(a, b)| a < b).collect()
}

/// Gram of a single delta channel: `|a|²·I` on the full overlap window.
pub fn delta_gram<T: Real>(amplitude: Complex<T>, p: usize) -> Array2<Complex<T>> {
    convolution_gram(&[amplitude], p)
}
