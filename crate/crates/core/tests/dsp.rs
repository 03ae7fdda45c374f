mod common;

use ndarray::{Array2, Array4};
use proptest::prelude::*;

use common::{random_vec, rng, C};
use rfclutter::dsp::{
    beamform, doppler_bin_frequency, doppler_bin_of, doppler_process, find_peaks, mainlobe_width_3db, map_from_complex, pulse_compress,
    pulse_compress_all, range_doppler_map, write_map_csv, write_map_pgm, MapConfig, Window,
};
use rfclutter::rxsim::DataCube;
use rfclutter::waveform::{lfm, phase_code, ChirpDirection, Waveform};

#[test]
fn compression_matches_oracle() {
    let x = [C::new(1.0, 0.0), C::new(0.0, 2.0), C::new(-1.0, 0.0), C::new(0.5, 0.5), C::new(3.0, 0.0)];
    let s = Waveform::new(vec![C::new(0.0, 1.0), C::new(1.0, -1.0)], 1.0, "pair").unwrap();
    let want = [C::new(-2.0, 1.0), C::new(1.0, -1.0), C::new(0.0, 2.0), C::new(3.5, 2.5), C::new(0.0, -3.0)];
    let y = pulse_compress(&x, &s).unwrap();
    for (a, b) in y.iter().zip(want) {
        assert!((a - b).norm() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn lfm_width_matches_oracle() {
    let w = lfm::<f64>(5e6, 20e-6, 20e6, ChirpDirection::Up).unwrap();
    let width = mainlobe_width_3db(&w, 512).unwrap();
    assert!((width / 1.7685629629345456e-07 - 1.0).abs() < 1e-3, "{width}");
    // The direction of the sweep does not change the autocorrelation magnitude.
    let down = lfm::<f64>(5e6, 20e-6, 20e6, ChirpDirection::Down).unwrap();
    assert!((mainlobe_width_3db(&down, 512).unwrap() - width).abs() < 1e-12);
}

#[test]
fn tone_lands_in_its_bin() {
    let prf = 2000.0;
    let data = Array2::from_shape_fn((16, 4), |(m, _)| C::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.3125 * m as f64));
    let rd = doppler_process(&data, Window::Hann);
    let best = (0..16).max_by(|&a, &b| rd[[a, 1]].norm().total_cmp(&rd[[b, 1]].norm())).unwrap();
    assert_eq!(best, 5);
    assert_eq!(doppler_bin_of(0.3125 * prf, 16, prf), 5);
    assert_eq!(doppler_bin_frequency(5, 16, prf), 625.0);
    assert_eq!(doppler_bin_frequency(8, 16, prf), -1000.0);
}

fn two_target_cube(w: &Waveform<f64>) -> DataCube<f64> {
    let (n, m, r) = (2, 32, 200);
    let mut cube = DataCube::zeros((1, n, m, r), 1e7, 1000.0, 0.0, 1e10);
    for (delay, bin, amp) in [(40usize, 3usize, 1.0), (120, 25, 0.5)] {
        for ch in 0..n {
            for p in 0..m {
                let ph = C::from_polar(amp, 2.0 * std::f64::consts::PI * bin as f64 * p as f64 / m as f64);
                for (k, s) in w.samples.iter().enumerate() {
                    cube.samples[[0, ch, p, delay + k]] += ph * s;
                }
            }
        }
    }
    cube
}

#[test]
fn two_targets_give_two_peaks() {
    let w = lfm::<f64>(5e6, 3e-6, 1e7, ChirpDirection::Up).unwrap();
    let cube = two_target_cube(&w);
    let weights = [C::new(0.5, 0.0), C::new(0.5, 0.0)];
    let map = range_doppler_map(&cube, 0, &w, &weights, &MapConfig::default()).unwrap();
    assert_eq!(map.db.dim(), (32, 200));
    assert_eq!((map.peaks[0].range_bin, map.peaks[0].doppler_bin), (40, 3));
    assert_eq!(map.peaks[0].db, 0.0);
    let second = map.peaks.iter().find(|p| p.range_bin == 120).unwrap();
    assert_eq!(second.doppler_bin, 25);
    assert!((second.db - 20.0 * 0.5f64.log10()).abs() < 0.5);
    assert!(map.db.iter().all(|v| *v >= -60.0 && *v <= 0.0));
    assert!(range_doppler_map(&cube, 1, &w, &weights, &MapConfig::default()).is_err());
    assert!(range_doppler_map(&cube, 0, &w, &weights[..1], &MapConfig::default()).is_err());
}

#[test]
fn map_outputs() {
    let w = lfm::<f64>(5e6, 3e-6, 1e7, ChirpDirection::Up).unwrap();
    let map = range_doppler_map(&two_target_cube(&w), 0, &w, &[C::new(1.0, 0.0), C::new(0.0, 0.0)], &MapConfig::default()).unwrap();
    let mut csv = Vec::new();
    write_map_csv(&map, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("doppler_bin,range_bin,db"));
    assert_eq!(lines.clone().count(), 32 * 200);
    assert!(text.contains("\n3,40,0.000\n"));

    let mut pgm = Vec::new();
    write_map_pgm(&map, 60.0, &mut pgm).unwrap();
    let header = b"P5\n200 32\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    let pixels = &pgm[header.len()..];
    assert_eq!(pixels.len(), 32 * 200);
    // Zero Doppler is centred, so bin 3 sits on row 16 + 3.
    assert_eq!(pixels[19 * 200 + 40], 255);
}

#[test]
fn peaks_wrap_in_doppler_only() {
    let mut db = Array2::from_elem((8, 6), -60.0);
    db[[0, 2]] = 0.0;
    db[[7, 2]] = -1.0;
    db[[4, 0]] = -5.0;
    let peaks = find_peaks(&db, 20.0);
    assert_eq!(peaks.len(), 2);
    assert_eq!((peaks[0].doppler_bin, peaks[0].range_bin), (0, 2));
    assert_eq!((peaks[1].doppler_bin, peaks[1].range_bin), (4, 0));
    let flat = map_from_complex(Array2::from_elem((4, 4), C::new(1.0, 0.0)), 1e3, 1e6, &MapConfig::default());
    assert!(flat.peaks.is_empty());
}

proptest! {
    #[test]
    fn chain_is_linear(seed in 0u64..1000, k in -3.0f64..3.0) {
        let mut r = rng(seed);
        let w = phase_code::<f64>(7, 1e6, seed).unwrap();
        let a = Array2::from_shape_vec((4, 30), random_vec(&mut r, 120)).unwrap();
        let b = Array2::from_shape_vec((4, 30), random_vec(&mut r, 120)).unwrap();
        let lhs = doppler_process(&pulse_compress_all(&(&a * k + &b), &w).unwrap(), Window::Hann);
        let ya = doppler_process(&pulse_compress_all(&a, &w).unwrap(), Window::Hann);
        let yb = doppler_process(&pulse_compress_all(&b, &w).unwrap(), Window::Hann);
        for ((l, x), y) in lhs.iter().zip(ya.iter()).zip(yb.iter()) {
            prop_assert!((l - (x * k + y)).norm() < 1e-10);
        }
    }

    #[test]
    fn normalized_map_is_scale_invariant(seed in 0u64..1000, k in 0.01f64..100.0) {
        let mut r = rng(seed);
        let data = Array2::from_shape_vec((8, 16), random_vec(&mut r, 128)).unwrap();
        let cfg = MapConfig::default();
        let base = map_from_complex(data.clone(), 1e3, 1e6, &cfg);
        let scaled = map_from_complex(data.mapv(|z| z * k), 1e3, 1e6, &cfg);
        for (a, b) in base.db.iter().zip(scaled.db.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((scaled.reference_db - base.reference_db - 20.0 * k.log10()).abs() < 1e-9);
    }

    #[test]
    fn beamforming_is_conjugate_weighted_sum(seed in 0u64..1000) {
        let mut r = rng(seed);
        let samples = Array4::from_shape_vec((2, 3, 4, 5), random_vec(&mut r, 120)).unwrap();
        let cube = DataCube { samples, ..DataCube::zeros((2, 3, 4, 5), 1e6, 1e3, 0.0, 1e10) };
        let w = random_vec(&mut r, 3);
        let y = beamform(&cube, 1, &w).unwrap();
        for p in 0..4 {
            for j in 0..5 {
                let want: C = (0..3).map(|ch| w[ch].conj() * cube.samples[[1, ch, p, j]]).sum();
                prop_assert!((y[[p, j]] - want).norm() < 1e-12);
            }
        }
    }
}
