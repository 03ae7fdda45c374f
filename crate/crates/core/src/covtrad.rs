//! Covariance-based statistical clutter baseline: independent complex
//! Gaussian patch amplitudes on space-time steering vectors.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{config, domain, Error, Result};
use crate::linalg;
use crate::num::{narrow, widen, Real};
use crate::seed;

/// One clutter patch: expected power `G` and its `NM` steering vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePatch<T: Real> {
    pub power: f64,
    pub steering: Vec<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClutterSnapshot<T: Real> {
    pub vector: Vec<Complex<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeCovariance<T: Real> {
    pub matrix: Array2<Complex<T>>,
    pub channels: usize,
    pub pulses: usize,
}

impl<T: Real> SpaceTimeCovariance<T> {
    pub fn new(matrix: Array2<Complex<T>>, channels: usize, pulses: usize) -> Result<Self> {
        let n = channels * pulses;
        if matrix.dim() != (n, n) {
            return config(format!("covariance must be {n}x{n}"));
        }
        Ok(SpaceTimeCovariance { matrix, channels, pulses })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[[i, i]].re.to_f64_lossy()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(linalg::hermitian_eigen(&self.matrix)?.0)
    }

    /// Hermitian to `1e-12` and no eigenvalue below `−1e-10·trace`.
    pub fn check(&self) -> Result<()> {
        if !linalg::is_hermitian(&self.matrix, 1e-12f64.max(T::epsilon().to_f64_lossy() * 10.0)) {
            return Err(Error::Domain("covariance is not Hermitian".into()));
        }
        let floor = -1e-10 * self.trace().abs();
        let min = self.eigenvalues()?.first().map(|x| x.to_f64_lossy()).unwrap_or(0.0);
        if min < floor {
            return Err(Error::Domain(format!("covariance has negative eigenvalue {min}")));
        }
        Ok(())
    }

    pub fn relative_error(&self, reference: &Self) -> f64 {
        let diff = &self.matrix - &reference.matrix;
        let r = linalg::frobenius(&reference.matrix);
        let d = linalg::frobenius(&diff);
        if r > 0.0 {
            d / r
        } else {
            d
        }
    }
}

fn check_lengths<T: Real>(patches: &[CovariancePatch<T>]) -> Result<usize> {
    let n = patches.first().map(|p| p.steering.len()).unwrap_or(0);
    if patches.iter().any(|p| p.steering.len() != n) {
        return config("all steering vectors must have the same length");
    }
    if patches.iter().any(|p| !(p.power >= 0.0)) {
        return config("patch powers must be non-negative");
    }
    Ok(n)
}

/// `x = Σ γᵢ vᵢ` with `γᵢ ~ CN(0, Gᵢ)` independent. `draw` selects the
/// derived random stream.
pub fn draw_snapshot<T: Real>(patches: &[CovariancePatch<T>], seed_value: u64, draw: u64) -> Result<ClutterSnapshot<T>> {
    let n = check_lengths(patches)?;
    let mut rng = seed::rng(seed_value, &[seed::tag::SNAPSHOT, draw]);
    let mut acc = vec![Complex::new(0.0, 0.0); n];
    for p in patches {
        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let gamma = Complex::new(re, im) * (p.power / 2.0).sqrt();
        for (a, v) in acc.iter_mut().zip(&p.steering) {
            *a += gamma * widen(*v);
        }
    }
    Ok(ClutterSnapshot { vector: acc.into_iter().map(narrow).collect() })
}

/// `K` snapshots, draw indices `0..K`, in parallel.
pub fn draw_snapshots<T: Real>(patches: &[CovariancePatch<T>], seed_value: u64, count: usize) -> Result<Vec<ClutterSnapshot<T>>> {
    check_lengths(patches)?;
    (0..count as u64).into_par_iter().map(|k| draw_snapshot(patches, seed_value, k)).collect()
}

/// `R = Σ Gᵢ vᵢ vᵢᴴ`.
pub fn clutter_covariance<T: Real>(patches: &[CovariancePatch<T>], channels: usize, pulses: usize) -> Result<SpaceTimeCovariance<T>> {
    let n = check_lengths(patches)?;
    let n = if patches.is_empty() { channels * pulses } else { n };
    if n != channels * pulses {
        return config("steering length must equal channels x pulses");
    }
    let mut acc = Array2::<Complex<f64>>::zeros((n, n));
    for p in patches.iter().filter(|p| p.power != 0.0) {
        let v: Vec<Complex<f64>> = p.steering.iter().map(|z| widen(*z)).collect();
        for j in 0..n {
            let gj = v[j] * p.power;
            for k in 0..n {
                acc[[j, k]] += gj * v[k].conj();
            }
        }
    }
    SpaceTimeCovariance::new(acc.mapv(narrow), channels, pulses)
}

/// `(1/K) Σ x xᴴ`.
pub fn sample_covariance<T: Real>(snapshots: &[ClutterSnapshot<T>], channels: usize, pulses: usize) -> Result<SpaceTimeCovariance<T>> {
    if snapshots.is_empty() {
        return domain("sample covariance needs at least one snapshot");
    }
    let n = channels * pulses;
    if snapshots.iter().any(|s| s.vector.len() != n) {
        return config("snapshot length must equal channels x pulses");
    }
    let inv = 1.0 / snapshots.len() as f64;
    let rows: Vec<Vec<Complex<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![Complex::new(0.0, 0.0); n];
            for s in snapshots {
                let xj = widen(s.vector[j]);
                for (r, xk) in row.iter_mut().zip(&s.vector) {
                    *r += xj * widen(*xk).conj();
                }
            }
            row
        })
        .collect();
    let matrix = Array2::from_shape_fn((n, n), |(j, k)| narrow(rows[j][k] * inv));
    SpaceTimeCovariance::new(matrix, channels, pulses)
}

/// Largest relative Frobenius distance of any group's sample covariance from
/// the pooled sample covariance of all groups.
pub fn heterogeneity<T: Real>(groups: &[Vec<ClutterSnapshot<T>>], channels: usize, pulses: usize) -> Result<f64> {
    if groups.len() < 2 {
        return config("homogeneity check needs at least two groups");
    }
    let pooled: Vec<ClutterSnapshot<T>> = groups.iter().flatten().cloned().collect();
    let pooled = sample_covariance(&pooled, channels, pulses)?;
    let mut worst = 0.0f64;
    for g in groups {
        worst = worst.max(sample_covariance(g, channels, pulses)?.relative_error(&pooled));
    }
    Ok(worst)
}

/// Whether all groups are consistent with one covariance at tolerance `tol`.
pub fn is_homogeneous<T: Real>(groups: &[Vec<ClutterSnapshot<T>>], channels: usize, pulses: usize, tol: f64) -> Result<bool> {
    Ok(heterogeneity(groups, channels, pulses)? <= tol)
}

pub const COVARIANCE_MAGIC: &[u8; 8] = b"RFCOV001";

/// Header `RFCOV001`, u32 N, u32 M, then `(NM)²` f64 (re, im) pairs,
/// row-major, little-endian.
pub fn write_covariance<T: Real, W: Write>(cov: &SpaceTimeCovariance<T>, mut w: W) -> Result<()> {
    w.write_all(COVARIANCE_MAGIC)?;
    w.write_all(&(cov.channels as u32).to_le_bytes())?;
    w.write_all(&(cov.pulses as u32).to_le_bytes())?;
    for z in cov.matrix.iter() {
        w.write_all(&z.re.to_f64_lossy().to_le_bytes())?;
        w.write_all(&z.im.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_covariance<R: Read>(mut r: R) -> Result<SpaceTimeCovariance<f64>> {
    let bad = |m: &str| Error::Format { path: "<covariance>".into(), message: m.into() };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != COVARIANCE_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let channels = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let pulses = u32::from_le_bytes(b4) as usize;
    let n = channels * pulses;
    let mut raw = vec![0u8; n * n * 16];
    r.read_exact(&mut raw).map_err(|_| bad("truncated payload"))?;
    let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let matrix = Array2::from_shape_fn((n, n), |(j, k)| Complex::new(vals[2 * (j * n + k)], vals[2 * (j * n + k) + 1]));
    SpaceTimeCovariance::new(matrix, channels, pulses)
}
