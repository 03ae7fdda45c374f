mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{rng, unit_random, C};
use rfclutter::array::{space_time_steering, spatial_steering, temporal_steering, ArrayGeometry};
use rfclutter::covtrad::{
    clutter_covariance, draw_snapshots, heterogeneity, is_homogeneous, read_covariance, sample_covariance, write_covariance, ClutterSnapshot,
    CovariancePatch,
};
use rfclutter::terrain::Vec3;
use rfclutter::waveform::{lfm, phase_code, ChirpDirection, Waveform};
use rfclutter::Error;

const N: usize = 2;
const M: usize = 4;

fn patches(seed: u64, count: usize) -> Vec<CovariancePatch<f64>> {
    let array = ArrayGeometry::ula(N, 0.015, Vec3::x(), Vec3::zeros(), 0.03, Vec3::y()).unwrap();
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let az: f64 = r.random_range(-1.2..1.2);
            let s = spatial_steering::<f64>(&array, &Vec3::new(az.sin(), az.cos(), 0.0)).unwrap();
            let t = temporal_steering::<f64>(r.random_range(-0.5..0.5), M).unwrap();
            CovariancePatch { power: r.random_range(0.1..2.0), steering: space_time_steering(&s, &t).unwrap().entries }
        })
        .collect()
}

#[test]
fn snapshots_are_seeded_and_thread_invariant() {
    let p = patches(1, 30);
    let run = |k: usize| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(|| draw_snapshots(&p, 5, 200).unwrap());
    let a = run(1);
    assert_eq!(a, run(7));
    assert_ne!(a, draw_snapshots(&p, 6, 200).unwrap());
    assert_eq!(draw_snapshots(&p, 5, 10).unwrap()[..], a[..10]);
}

#[test]
fn covariance_file_round_trip() {
    let r = clutter_covariance(&patches(2, 12), N, M).unwrap();
    let mut buf = Vec::new();
    write_covariance(&r, &mut buf).unwrap();
    assert_eq!(&buf[..8], b"RFCOV001");
    assert_eq!(buf.len(), 16 + 64 * 16);
    assert_eq!(read_covariance(buf.as_slice()).unwrap(), r);
    assert!(read_covariance(&buf[..buf.len() - 3]).is_err());
    let mut bad = buf.clone();
    bad[3] = b'X';
    assert!(matches!(read_covariance(bad.as_slice()), Err(Error::Format { .. })));
}

#[test]
fn input_validation() {
    let mut p = patches(3, 2);
    assert!(clutter_covariance(&p, N, M + 1).is_err());
    p[1].power = -1.0;
    assert!(matches!(clutter_covariance(&p, N, M), Err(Error::Config(_))));
    assert!(heterogeneity::<f64>(&[vec![]], N, M).is_err());
    let empty = clutter_covariance::<f64>(&[], N, M).unwrap();
    assert_eq!(empty.trace(), 0.0);
}

/// `χ(δ) = Σⱼ s[j+δ]·conj(ref[j])`: the reference filter's response to a
/// transmitted waveform `s` from a scatterer `δ` samples off the gate.
fn cross_ambiguity(s: &Waveform<f64>, reference: &Waveform<f64>, delta: usize) -> C {
    reference.samples.iter().enumerate().filter_map(|(j, r)| s.samples.get(j + delta).map(|x| x * r.conj())).sum()
}

fn group(base: &[CovariancePatch<f64>], s: &Waveform<f64>, reference: &Waveform<f64>, seed: u64, k: usize) -> Vec<ClutterSnapshot<f64>> {
    let weighted: Vec<CovariancePatch<f64>> = base
        .iter()
        .enumerate()
        .map(|(i, p)| CovariancePatch { power: p.power * cross_ambiguity(s, reference, i % reference.len()).norm_sqr(), ..p.clone() })
        .collect();
    draw_snapshots(&weighted, seed, k).unwrap()
}

#[test]
fn waveform_changes_break_homogeneity() {
    let reference = lfm::<f64>(1e6, 16e-6, 1e6, ChirpDirection::Up).unwrap();
    let base = patches(4, 16);
    let k = 4000;
    let fixed: Vec<_> = (0..3).map(|g| group(&base, &reference, &reference, 100 + g, k)).collect();
    let changing: Vec<_> = (0..3).map(|g| group(&base, &phase_code(16, 1e6, g).unwrap(), &reference, 100 + g, k)).collect();
    let h_fixed = heterogeneity(&fixed, N, M).unwrap();
    let h_changing = heterogeneity(&changing, N, M).unwrap();
    assert!(is_homogeneous(&fixed, N, M, 0.1).unwrap(), "fixed {h_fixed}");
    assert!(!is_homogeneous(&changing, N, M, 0.1).unwrap(), "changing {h_changing}");
    assert!(h_changing > 3.0 * h_fixed);
}

proptest! {
    #[test]
    fn covariances_are_hermitian_psd(seed in 0u64..10_000, count in 1usize..40) {
        let p = patches(seed, count);
        let r = clutter_covariance(&p, N, M).unwrap();
        prop_assert!(r.check().is_ok());
        let want: f64 = p.iter().map(|x| x.power * (N * M) as f64).sum();
        prop_assert!((r.trace() - want).abs() < 1e-12 * want);
        let s = sample_covariance(&draw_snapshots(&p, seed, 5).unwrap(), N, M).unwrap();
        prop_assert!(s.check().is_ok());
    }

    #[test]
    fn per_patch_phase_rotation_is_invisible(seed in 0u64..10_000) {
        let p = patches(seed, 10);
        let mut r = rng(seed);
        let rotated: Vec<CovariancePatch<f64>> = p
            .iter()
            .map(|x| {
                let rot = C::from_polar(1.0, r.random_range(-3.2..3.2));
                CovariancePatch { power: x.power, steering: x.steering.iter().map(|z| z * rot).collect() }
            })
            .collect();
        let a = clutter_covariance(&p, N, M).unwrap();
        let b = clutter_covariance(&rotated, N, M).unwrap();
        prop_assert!(b.relative_error(&a) < 1e-14);
    }

    #[test]
    fn zero_power_patches_change_nothing(seed in 0u64..10_000, at in 0usize..10) {
        let p = patches(seed, 10);
        let mut padded = p.clone();
        let ghost = CovariancePatch { power: 0.0, steering: unit_random(&mut rng(seed), N * M) };
        padded.insert(at, ghost.clone());
        prop_assert_eq!(clutter_covariance(&p, N, M).unwrap(), clutter_covariance(&padded, N, M).unwrap());
        let mut tail = p.clone();
        tail.push(ghost);
        prop_assert_eq!(draw_snapshots(&p, seed, 4).unwrap(), draw_snapshots(&tail, seed, 4).unwrap());
    }
}
