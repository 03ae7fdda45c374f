//! Transmit waveforms in complex baseband.

use std::f64::consts::PI;

use num_complex::Complex;
use rand::Rng;

use crate::error::{config, domain, Result};
use crate::num::{cis, energy, Real};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChirpDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T: Real> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate: f64,
    pub label: String,
}

impl<T: Real> Waveform<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate: f64, label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return config("waveform needs at least one sample");
        }
        if !(sample_rate > 0.0) {
            return config(format!("sample rate must be positive, got {sample_rate}"));
        }
        Ok(Waveform { samples, sample_rate, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        energy(&self.samples)
    }

    /// A copy delayed by `delay` samples (leading zeros).
    pub fn delayed(&self, delay: usize) -> Self {
        let mut samples = vec![Complex::new(T::zero(), T::zero()); delay];
        samples.extend_from_slice(&self.samples);
        Waveform { samples, sample_rate: self.sample_rate, label: format!("{}+{delay}", self.label) }
    }

    pub fn cast<U: Real>(&self) -> Waveform<U> {
        Waveform {
            samples: self.samples.iter().map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()))).collect(),
            sample_rate: self.sample_rate,
            label: self.label.clone(),
        }
    }
}

/// Scale to unit energy.
pub fn normalize_energy<T: Real>(w: &Waveform<T>) -> Result<Waveform<T>> {
    let e: f64 = w.samples.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum();
    if !(e > 0.0) || !e.is_finite() {
        return domain("cannot normalize a zero-energy waveform");
    }
    let scale = T::lit(1.0 / e.sqrt());
    Ok(Waveform {
        samples: w.samples.iter().map(|z| z * scale).collect(),
        sample_rate: w.sample_rate,
        label: w.label.clone(),
    })
}

/// Linear FM pulse `exp(±jπ(B/T)t²)` on `t ∈ [−T/2, T/2)`, unit energy.
pub fn lfm<T: Real>(bandwidth: f64, duration: f64, sample_rate: f64, direction: ChirpDirection) -> Result<Waveform<T>> {
    if !(duration > 0.0) {
        return config(format!("pulse duration must be positive, got {duration}"));
    }
    if !(sample_rate >= bandwidth) || bandwidth < 0.0 {
        return config(format!("sample rate {sample_rate} Hz undersamples bandwidth {bandwidth} Hz"));
    }
    let n = ((duration * sample_rate).round() as usize).max(1);
    let rate = bandwidth / duration;
    let sign = match direction {
        ChirpDirection::Up => 1.0,
        ChirpDirection::Down => -1.0,
    };
    let samples = (0..n)
        .map(|k| {
            let t = -duration / 2.0 + k as f64 / sample_rate;
            cis(sign * PI * rate * t * t)
        })
        .collect();
    let label = match direction {
        ChirpDirection::Up => "lfm-up",
        ChirpDirection::Down => "lfm-down",
    };
    normalize_energy(&Waveform::new(samples, sample_rate, label)?)
}

/// Unit-modulus chips with independent uniform phases, unit energy.
pub fn phase_code<T: Real>(chips: usize, sample_rate: f64, seed_value: u64) -> Result<Waveform<T>> {
    if chips == 0 {
        return config("phase code needs at least one chip");
    }
    let mut rng = seed::rng(seed_value, &[seed::tag::PHASE_CODE]);
    let samples = (0..chips).map(|_| cis(rng.random_range(0.0..2.0 * PI))).collect();
    normalize_energy(&Waveform::new(samples, sample_rate, format!("phase-code-{seed_value}"))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let w = Waveform::new(vec![Complex::new(0.6f64, 0.0), Complex::new(0.0, 0.8)], 1.0, "u").unwrap();
        let n = normalize_energy(&w).unwrap();
        for (a, b) in n.samples.iter().zip(&w.samples) {
            assert!((a - b).norm() < 1e-15);
        }
        let big = Waveform::new(w.samples.iter().map(|z| z * 7.0).collect(), 1.0, "x7").unwrap();
        let n7 = normalize_energy(&big).unwrap();
        for (a, b) in n7.samples.iter().zip(&w.samples) {
            assert!((a - b).norm() < 1e-15);
        }
        let zero = Waveform::new(vec![Complex::new(0.0f64, 0.0); 3], 1.0, "0").unwrap();
        assert!(normalize_energy(&zero).is_err());
    }

    #[test]
    fn lfm_basics() {
        let up = lfm::<f64>(5e6, 20e-6, 10e6, ChirpDirection::Up).unwrap();
        let down = lfm::<f64>(5e6, 20e-6, 10e6, ChirpDirection::Down).unwrap();
        assert_eq!(up.len(), 200);
        assert!((up.energy() - 1.0).abs() < 1e-12);
        for (u, d) in up.samples.iter().zip(&down.samples) {
            assert!((u.conj() - d).norm() < 1e-15);
        }
        let rect = lfm::<f64>(0.0, 1e-6, 10e6, ChirpDirection::Up).unwrap();
        let first = rect.samples[0];
        assert!(rect.samples.iter().all(|z| (z - first).norm() < 1e-15));
        assert!(lfm::<f64>(5e6, 20e-6, 4e6, ChirpDirection::Up).is_err());
        assert!(lfm::<f64>(5e6, 0.0, 10e6, ChirpDirection::Up).is_err());
    }

    #[test]
    fn phase_code_basics() {
        let one = phase_code::<f64>(1, 1e6, 3).unwrap();
        assert!((one.samples[0].norm() - 1.0).abs() < 1e-15);
        let a = phase_code::<f64>(64, 1e6, 11).unwrap();
        let b = phase_code::<f64>(64, 1e6, 11).unwrap();
        let c = phase_code::<f64>(64, 1e6, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
        let m = 1.0 / 8.0;
        assert!(a.samples.iter().all(|z| (z.norm() - m).abs() < 1e-15));
        assert!(phase_code::<f64>(0, 1e6, 1).is_err());
    }
}
