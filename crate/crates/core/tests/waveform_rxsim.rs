mod common;

use ndarray::Array3;
use proptest::prelude::*;

use common::{direct_convolution, random_vec, rel_l2, rng, C};
use rfclutter::channel::{ChannelKind, ImpulseResponse, RadarTiming};
use rfclutter::formats::{read_cube, read_ir, read_waveform, write_cube, write_ir, write_waveform};
use rfclutter::rxsim::{convolve_pulse, receive, simulate_cube, DataCube, ReceiveConfig, Source};
use rfclutter::waveform::{lfm, normalize_energy, phase_code, ChirpDirection, Waveform};
use rfclutter::Error;

fn random_ir(seed: u64, n: usize, m: usize, l: usize, kind: ChannelKind) -> ImpulseResponse<f64> {
    let mut r = rng(seed);
    let t = RadarTiming { prf: 1000.0, sample_rate: 2e6, delay_origin: 3e-5, num_taps: l, pulses: m };
    let mut ir = ImpulseResponse::zeros(n, &t, kind);
    let v = random_vec(&mut r, n * m * l);
    ir.taps = Array3::from_shape_vec((n, m, l), v).unwrap();
    ir
}

#[test]
fn cube_is_per_pulse_convolution() {
    let c = random_ir(1, 2, 3, 20, ChannelKind::Clutter);
    let t = random_ir(2, 2, 3, 20, ChannelKind::Target);
    let wf = phase_code::<f64>(7, 2e6, 4).unwrap();
    let cube = simulate_cube(&c, &t, std::slice::from_ref(&wf), 0.0, 0, 0, 1e10).unwrap();
    assert_eq!(cube.dims(), (1, 2, 3, 20));
    for n in 0..2 {
        for m in 0..3 {
            let h: Vec<C> = (0..20).map(|l| c.taps[[n, m, l]] + t.taps[[n, m, l]]).collect();
            let want = direct_convolution(&h, &wf.samples);
            let got: Vec<C> = (0..20).map(|r| cube.samples[[0, n, m, r]]).collect();
            assert!(rel_l2(&got, &want[..20]) < 1e-13);
        }
    }
}

#[test]
fn per_pulse_waveforms_and_longer_window() {
    let ir = random_ir(5, 1, 4, 10, ChannelKind::Clutter);
    let wfs: Vec<Waveform<f64>> = (0..4).map(|k| phase_code(3 + k, 2e6, k as u64).unwrap()).collect();
    let cfg = ReceiveConfig { window: Some(30), ..ReceiveConfig::new(0.0, 0, 0, 1e10) };
    let cube = receive(&[Source { ir: &ir, waveforms: &wfs }], &cfg).unwrap();
    for m in 0..4 {
        let h: Vec<C> = ir.pulse(0, m).to_vec();
        let mut want = direct_convolution(&h, &wfs[m].samples);
        want.resize(30, C::new(0.0, 0.0));
        let got: Vec<C> = (0..30).map(|r| cube.samples[[0, 0, m, r]]).collect();
        assert!(rel_l2(&got, &want) < 1e-13);
    }
    let short = ReceiveConfig { window: Some(5), ..cfg };
    assert!(matches!(receive(&[Source { ir: &ir, waveforms: &wfs }], &short), Err(Error::Config(_))));
    assert!(matches!(receive(&[Source { ir: &ir, waveforms: &wfs[..2] }], &cfg), Err(Error::Config(_))));
}

#[test]
fn noise_statistics_and_streams() {
    let ir = ImpulseResponse::<f64>::zeros(2, &RadarTiming { prf: 1e3, sample_rate: 1e6, delay_origin: 0.0, num_taps: 5000, pulses: 20 }, ChannelKind::Clutter);
    let wf = phase_code::<f64>(4, 1e6, 0).unwrap();
    let sigma2 = 0.25;
    let cube = simulate_cube(&ir, &ir, std::slice::from_ref(&wf), sigma2, 9, 0, 1e10).unwrap();
    let n = cube.samples.len() as f64;
    let mean: C = cube.samples.iter().sum::<C>() / n;
    let var = cube.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
    let re_var = cube.samples.iter().map(|z| z.re * z.re).sum::<f64>() / n;
    assert!(mean.norm() < 0.01);
    assert!((var - sigma2).abs() < 0.005);
    assert!((re_var - sigma2 / 2.0).abs() < 0.003);
    let again = simulate_cube(&ir, &ir, std::slice::from_ref(&wf), sigma2, 9, 0, 1e10).unwrap();
    assert_eq!(cube, again);
    let other_cpi = simulate_cube(&ir, &ir, std::slice::from_ref(&wf), sigma2, 9, 1, 1e10).unwrap();
    assert_ne!(cube.samples, other_cpi.samples);
}

#[test]
fn rx_is_thread_invariant() {
    let ir = random_ir(11, 3, 8, 64, ChannelKind::Clutter);
    let wf = lfm::<f64>(1e6, 10e-6, 2e6, ChirpDirection::Up).unwrap();
    let run = |k: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(|| {
            simulate_cube(&ir, &ImpulseResponse { kind: ChannelKind::Target, ..ir.clone() }, std::slice::from_ref(&wf), 0.1, 3, 2, 1e10).unwrap()
        })
    };
    assert_eq!(run(1), run(6));
}

#[test]
fn f32_tracks_f64() {
    let ir = random_ir(12, 1, 2, 50, ChannelKind::Clutter);
    let wf = lfm::<f64>(1e6, 10e-6, 2e6, ChirpDirection::Down).unwrap();
    let zero = ImpulseResponse { taps: ir.taps.mapv(|_| C::new(0.0, 0.0)), kind: ChannelKind::Target, ..ir.clone() };
    let a = simulate_cube(&ir, &zero, std::slice::from_ref(&wf), 0.0, 0, 0, 1e10).unwrap();
    let b = simulate_cube(&ir.cast::<f32>(), &zero.cast::<f32>(), std::slice::from_ref(&wf.cast::<f32>()), 0.0, 0, 0, 1e10).unwrap();
    let bw: Vec<C> = b.samples.iter().map(|z| C::new(z.re as f64, z.im as f64)).collect();
    let aw: Vec<C> = a.samples.iter().copied().collect();
    assert!(rel_l2(&bw, &aw) < 1e-5);
}

#[test]
fn binary_formats_round_trip_and_reject_damage() {
    let ir = random_ir(13, 2, 3, 7, ChannelKind::Target).cast::<f32>();
    let mut buf = Vec::new();
    write_ir(&ir, &mut buf).unwrap();
    assert_eq!(read_ir(buf.as_slice(), "ir", ChannelKind::Target).unwrap(), ir);
    assert!(read_ir(&buf[..buf.len() - 1], "ir", ChannelKind::Target).is_err());
    let mut extra = buf.clone();
    extra.push(0);
    assert!(read_ir(extra.as_slice(), "ir", ChannelKind::Target).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_ir(bad.as_slice(), "ir", ChannelKind::Target), Err(Error::Format { .. })));

    let cube = DataCube::<f32> { samples: ndarray::Array4::from_elem((2, 1, 2, 3), num_complex::Complex::new(0.5, -0.25)), ..DataCube::zeros((2, 1, 2, 3), 1e6, 1e3, 0.1, 1e10) };
    let mut buf = Vec::new();
    write_cube(&cube, &mut buf).unwrap();
    assert_eq!(read_cube(buf.as_slice(), "cube").unwrap(), cube);

    let wf = lfm::<f32>(1e6, 5e-6, 2e6, ChirpDirection::Up).unwrap();
    let mut buf = Vec::new();
    write_waveform(&wf, &mut buf).unwrap();
    let back = read_waveform(buf.as_slice(), "wf").unwrap();
    assert_eq!(back.samples, wf.samples);
    assert_eq!(back.sample_rate, wf.sample_rate);
}

proptest! {
    #[test]
    fn waveforms_have_unit_energy(b in 1e5f64..2e7, t in 1e-6f64..4e-5, chips in 1usize..200, seed in 0u64..100) {
        let fs = 2.0 * b;
        let up = lfm::<f64>(b, t, fs, ChirpDirection::Up).unwrap();
        prop_assert!((up.energy() - 1.0).abs() < 1e-12);
        prop_assert_eq!(up.len(), ((t * fs).round() as usize).max(1));
        let pc = phase_code::<f64>(chips, fs, seed).unwrap();
        prop_assert!((pc.energy() - 1.0).abs() < 1e-12);
        prop_assert!(pc.samples.iter().all(|z| (z.norm() - 1.0 / (chips as f64).sqrt()).abs() < 1e-12));
    }

    #[test]
    fn up_and_down_chirps_are_conjugates(b in 1e5f64..2e7, t in 1e-6f64..2e-5) {
        let up = lfm::<f64>(b, t, 2.0 * b, ChirpDirection::Up).unwrap();
        let down = lfm::<f64>(b, t, 2.0 * b, ChirpDirection::Down).unwrap();
        for (u, d) in up.samples.iter().zip(&down.samples) {
            prop_assert!((u.conj() - d).norm() < 1e-14);
        }
    }

    #[test]
    fn normalization_is_scale_invariant(k in 0.01f64..100.0, seed in 0u64..50) {
        let w = phase_code::<f64>(9, 1e6, seed).unwrap();
        let big = Waveform::new(w.samples.iter().map(|z| z * k).collect(), 1e6, "scaled").unwrap();
        let n = normalize_energy(&big).unwrap();
        for (a, b) in n.samples.iter().zip(&w.samples) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn convolution_matches_direct_sum(seed in 0u64..10_000, l in 1usize..80, p in 1usize..40) {
        let mut r = rng(seed);
        let h = random_vec(&mut r, l);
        let s = random_vec(&mut r, p);
        prop_assert!(rel_l2(&convolve_pulse(&h, &s), &direct_convolution(&h, &s)) < 1e-12);
    }

    #[test]
    fn receive_is_linear_in_the_channel(seed in 0u64..1000, k in -4.0f64..4.0) {
        let a = random_ir(seed, 1, 2, 16, ChannelKind::Clutter);
        let b = random_ir(seed + 1, 1, 2, 16, ChannelKind::Clutter);
        let wf = phase_code::<f64>(5, 2e6, seed).unwrap();
        let cfg = ReceiveConfig::new(0.0, 0, 0, 1e10);
        let ab = ImpulseResponse { taps: &a.taps * k + &b.taps, ..a.clone() };
        let both = receive(&[Source { ir: &ab, waveforms: std::slice::from_ref(&wf) }], &cfg).unwrap();
        let two = receive(&[Source { ir: &a, waveforms: std::slice::from_ref(&wf) }, Source { ir: &b, waveforms: std::slice::from_ref(&wf) }], &cfg).unwrap();
        let ya = receive(&[Source { ir: &a, waveforms: std::slice::from_ref(&wf) }], &cfg).unwrap();
        let yb = receive(&[Source { ir: &b, waveforms: std::slice::from_ref(&wf) }], &cfg).unwrap();
        let flat = |c: &DataCube<f64>| c.samples.iter().copied().collect::<Vec<C>>();
        let (x, y, u, v) = (flat(&both), flat(&two), flat(&ya), flat(&yb));
        for i in 0..x.len() {
            prop_assert!((x[i] - (u[i] * k + v[i])).norm() < 1e-12);
            prop_assert!((y[i] - (u[i] + v[i])).norm() < 1e-12);
        }
    }
}
