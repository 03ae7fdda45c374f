//! Baseline receive chain: beamforming, pulse compression, Doppler
//! processing and range-Doppler maps.

use std::io::Write;

use ndarray::{Array2, Axis};
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{config, domain, Result};
use crate::num::{widen, Real};
use crate::rxsim::DataCube;
use crate::waveform::Waveform;

type C = Complex<f64>;

/// `wᴴx` per (pulse, range) sample of CPI `cpi`. Output `[pulse][range]`.
pub fn beamform<T: Real>(cube: &DataCube<T>, cpi: usize, weights: &[Complex<T>]) -> Result<Array2<C>> {
    let (cpis, n, m, r) = cube.dims();
    if weights.len() != n {
        return config(format!("expected {n} beamforming weights, got {}", weights.len()));
    }
    if cpi >= cpis {
        return config(format!("CPI {cpi} out of range (cube has {cpis})"));
    }
    let w: Vec<C> = weights.iter().map(|z| widen(*z).conj()).collect();
    let view = cube.cpi(cpi);
    let mut out = Array2::<C>::zeros((m, r));
    for (ch, wc) in w.iter().enumerate() {
        let slab = view.index_axis(Axis(0), ch);
        out.zip_mut_with(&slab, |o, x| *o += wc * widen(*x));
    }
    Ok(out)
}

/// Matched filter: `y[k] = Σⱼ x[k+j]·conj(s[j])`, same length as `x`.
/// A return delayed by `d` samples peaks at `k = d`.
pub fn pulse_compress<T: Real>(samples: &[C], waveform: &Waveform<T>) -> Result<Vec<C>> {
    let s: Vec<C> = waveform.samples.iter().map(|z| widen(*z)).collect();
    Ok(compress_rows(&[samples.to_vec()], &s)?.remove(0))
}

fn compress_rows(rows: &[Vec<C>], s: &[C]) -> Result<Vec<Vec<C>>> {
    if s.iter().all(|z| z.norm_sqr() == 0.0) {
        return domain("matched filter waveform is zero");
    }
    let r = rows.first().map(|x| x.len()).unwrap_or(0);
    let size = (r + s.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut sf = vec![C::new(0.0, 0.0); size];
    sf[..s.len()].copy_from_slice(s);
    fwd.process(&mut sf);
    let scale = 1.0 / size as f64;
    Ok(rows
        .par_iter()
        .map(|x| {
            let mut buf = vec![C::new(0.0, 0.0); size];
            buf[..x.len()].copy_from_slice(x);
            fwd.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(&sf) {
                *b *= h.conj();
            }
            inv.process(&mut buf);
            buf.truncate(x.len());
            buf.iter_mut().for_each(|z| *z *= scale);
            buf
        })
        .collect())
}

/// Pulse-compress every row of a `[pulse][range]` array.
pub fn pulse_compress_all<T: Real>(data: &Array2<C>, waveform: &Waveform<T>) -> Result<Array2<C>> {
    let s: Vec<C> = waveform.samples.iter().map(|z| widen(*z)).collect();
    let rows: Vec<Vec<C>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let out = compress_rows(&rows, &s)?;
    let (m, r) = data.dim();
    Ok(Array2::from_shape_fn((m, r), |(i, j)| out[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "rect" => Ok(Window::None),
            "hann" => Ok(Window::Hann),
            _ => config(format!("unknown window `{s}`")),
        }
    }
}

fn window_taps(window: Window, m: usize) -> Vec<f64> {
    match window {
        Window::None => vec![1.0; m],
        Window::Hann if m == 1 => vec![1.0],
        Window::Hann => (0..m).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (m - 1) as f64).cos()).collect(),
    }
}

/// DFT across pulses: `[pulse][range] → [doppler bin][range]`, bin `b` at
/// `b·PRF/M` (bins above `M/2` are negative frequencies).
pub fn doppler_process(compressed: &Array2<C>, window: Window) -> Array2<C> {
    let (m, r) = compressed.dim();
    if m == 0 {
        return compressed.clone();
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let taps = window_taps(window, m);
    let cols: Vec<Vec<C>> = (0..r)
        .into_par_iter()
        .map(|j| {
            let mut col: Vec<C> = (0..m).map(|i| compressed[[i, j]] * taps[i]).collect();
            fft.process(&mut col);
            col
        })
        .collect();
    Array2::from_shape_fn((m, r), |(b, j)| cols[j][b])
}

/// Wrapped Doppler frequency of bin `b`.
pub fn doppler_bin_frequency(bin: usize, pulses: usize, prf: f64) -> f64 {
    let b = bin as f64;
    let m = pulses as f64;
    let f = if b >= m / 2.0 { b - m } else { b };
    f * prf / m
}

/// Nearest Doppler bin for frequency `f`.
pub fn doppler_bin_of(f: f64, pulses: usize, prf: f64) -> usize {
    let b = (f / prf * pulses as f64).round() as i64;
    b.rem_euclid(pulses as i64) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    pub window: Window,
    /// Values are clipped to this many dB below the peak.
    pub dynamic_range_db: f64,
    /// Peaks must exceed the median of the clipped map by this much.
    pub peak_offset_db: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { window: Window::None, dynamic_range_db: 60.0, peak_offset_db: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    /// Complex output before the magnitude, `[doppler][range]`.
    pub complex: Array2<C>,
    /// `20·log10|·|` normalized to a 0 dB peak and clipped.
    pub db: Array2<f64>,
    /// Un-normalized peak magnitude in dB.
    pub reference_db: f64,
    /// Local maxima above threshold, strongest first.
    pub peaks: Vec<Peak>,
    pub prf: f64,
    pub sample_rate: f64,
}

pub fn range_doppler_map<T: Real>(cube: &DataCube<T>, cpi: usize, waveform: &Waveform<T>, weights: &[Complex<T>], cfg: &MapConfig) -> Result<RangeDopplerMap> {
    let beam = beamform(cube, cpi, weights)?;
    let compressed = pulse_compress_all(&beam, waveform)?;
    let rd = doppler_process(&compressed, cfg.window);
    Ok(map_from_complex(rd, cube.prf, cube.sample_rate, cfg))
}

pub fn map_from_complex(complex: Array2<C>, prf: f64, sample_rate: f64, cfg: &MapConfig) -> RangeDopplerMap {
    let peak = complex.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = -cfg.dynamic_range_db;
    if peak == 0.0 {
        let db = Array2::from_elem(complex.dim(), floor);
        return RangeDopplerMap { complex, db, reference_db: f64::NEG_INFINITY, peaks: Vec::new(), prf, sample_rate };
    }
    let db = complex.mapv(|z| (20.0 * (z.norm() / peak).log10()).max(floor));
    let peaks = find_peaks(&db, cfg.peak_offset_db);
    RangeDopplerMap { complex, db, reference_db: 20.0 * peak.log10(), peaks, prf, sample_rate }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// 3×3 local maxima (Doppler wraps, range does not) above median + offset.
pub fn find_peaks(db: &Array2<f64>, offset_db: f64) -> Vec<Peak> {
    let (m, r) = db.dim();
    if m == 0 || r == 0 {
        return Vec::new();
    }
    let mut all: Vec<f64> = db.iter().copied().collect();
    let threshold = median(&mut all) + offset_db;
    let mut peaks = Vec::new();
    for b in 0..m {
        for j in 0..r {
            let v = db[[b, j]];
            if v <= threshold {
                continue;
            }
            let mut is_max = true;
            'nb: for db_ in [m - 1, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let bb = (b + db_) % m;
                    let jj = j as i64 + dj;
                    if (bb == b && dj == 0) || jj < 0 || jj >= r as i64 {
                        continue;
                    }
                    let w = db[[bb, jj as usize]];
                    // Ties are broken toward the lower (doppler, range) index.
                    if w > v || (w == v && (bb, jj as usize) < (b, j)) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                peaks.push(Peak { range_bin: j, doppler_bin: b, db: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.db.total_cmp(&a.db).then((a.doppler_bin, a.range_bin).cmp(&(b.doppler_bin, b.range_bin))));
    peaks
}

/// −3 dB width (seconds) of the compressed waveform's mainlobe, measured on
/// the autocorrelation interpolated by `upsample` through spectral zero
/// padding.
pub fn mainlobe_width_3db<T: Real>(waveform: &Waveform<T>, upsample: usize) -> Result<f64> {
    let s: Vec<C> = waveform.samples.iter().map(|z| widen(*z)).collect();
    if s.iter().all(|z| z.norm_sqr() == 0.0) {
        return domain("waveform is zero");
    }
    let p = s.len();
    let n = (2 * p).next_power_of_two();
    let up = upsample.max(1);
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = vec![C::new(0.0, 0.0); n];
    spec[..p].copy_from_slice(&s);
    planner.plan_fft_forward(n).process(&mut spec);
    // Autocorrelation spectrum |S|², centered at lag 0 (circular: lag 0 at index 0).
    let pow: Vec<C> = spec.iter().map(|z| C::new(z.norm_sqr(), 0.0)).collect();
    let big = n * up;
    let mut padded = vec![C::new(0.0, 0.0); big];
    let half = n / 2;
    padded[..half].copy_from_slice(&pow[..half]);
    padded[big - half..].copy_from_slice(&pow[half..]);
    planner.plan_fft_inverse(big).process(&mut padded);
    let mag: Vec<f64> = padded.iter().map(|z| z.norm()).collect();
    let peak = mag[0];
    let level = peak / 2f64.sqrt();
    let crossing = |dir: i64| -> f64 {
        let mut k = 0i64;
        loop {
            let next = k + dir;
            let a = mag[(k.rem_euclid(big as i64)) as usize];
            let b = mag[(next.rem_euclid(big as i64)) as usize];
            if b < level {
                return (k as f64 + (a - level) / (a - b) * dir as f64).abs();
            }
            k = next;
            if k.unsigned_abs() as usize >= big / 2 {
                return (big / 2) as f64;
            }
        }
    };
    let width_samples = (crossing(1) + crossing(-1)) / up as f64;
    Ok(width_samples / waveform.sample_rate)
}

/// CSV `doppler_bin,range_bin,db`.
pub fn write_map_csv<W: Write>(map: &RangeDopplerMap, mut w: W) -> Result<()> {
    writeln!(w, "doppler_bin,range_bin,db")?;
    for ((b, j), v) in map.db.indexed_iter() {
        writeln!(w, "{b},{j},{v:.3}")?;
    }
    Ok(())
}

/// Binary PGM: columns are range bins, rows are Doppler bins with zero
/// Doppler centered (most negative frequency on top).
pub fn write_map_pgm<W: Write>(map: &RangeDopplerMap, dynamic_range_db: f64, mut w: W) -> Result<()> {
    let (m, r) = map.db.dim();
    write!(w, "P5\n{r} {m}\n255\n")?;
    let mut bytes = Vec::with_capacity(m * r);
    for row in 0..m {
        let b = (row + m.div_ceil(2)) % m;
        for j in 0..r {
            let v = ((map.db[[b, j]] + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
            bytes.push((v * 255.0).round() as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{lfm, ChirpDirection};

    #[test]
    fn compress_self_and_delay() {
        let w = lfm::<f64>(5e6, 10e-6, 10e6, ChirpDirection::Up).unwrap();
        let mut x: Vec<C> = w.samples.clone();
        x.resize(300, C::new(0.0, 0.0));
        let y = pulse_compress(&x, &w).unwrap();
        assert!((y[0] - C::new(1.0, 0.0)).norm() < 1e-12);
        let d = 37;
        let mut x = vec![C::new(0.0, 0.0); 300];
        x[d..d + w.len()].copy_from_slice(&w.samples);
        let y = pulse_compress(&x, &w).unwrap();
        let arg = (0..y.len()).max_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm())).unwrap();
        assert_eq!(arg, d);
        let zero = Waveform::new(vec![C::new(0.0, 0.0); 4], 1.0, "z").unwrap();
        assert!(pulse_compress(&x, &zero).is_err());
    }

    #[test]
    fn doppler_bins() {
        let m = 64;
        let data = Array2::from_shape_fn((m, 3), |(i, _)| crate::num::cis::<f64>(2.0 * std::f64::consts::PI * i as f64 / 4.0));
        let rd = doppler_process(&data, Window::None);
        let arg = (0..m).max_by(|&a, &b| rd[[a, 0]].norm().total_cmp(&rd[[b, 0]].norm())).unwrap();
        assert_eq!(arg, 16);
        let e_in: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        let e_out: f64 = rd.iter().map(|z| z.norm_sqr()).sum();
        assert!((e_out / m as f64 - e_in).abs() / e_in < 1e-10);
        assert_eq!(doppler_bin_frequency(63, 64, 6400.0), -100.0);
        assert_eq!(doppler_bin_of(-100.0, 64, 6400.0), 63);
    }

    #[test]
    fn lfm_width() {
        for b in [1e6, 5e6, 20e6] {
            let w = lfm::<f64>(b, 20e-6, 4.0 * b, ChirpDirection::Up).unwrap();
            let width = mainlobe_width_3db(&w, 16).unwrap();
            assert!((width * b - 1.0).abs() < 0.2, "B={b}: width·B = {}", width * b);
        }
    }

    #[test]
    fn zero_map_has_no_peaks() {
        let map = map_from_complex(Array2::zeros((8, 8)), 1000.0, 1e6, &MapConfig::default());
        assert!(map.peaks.is_empty());
    }
}
