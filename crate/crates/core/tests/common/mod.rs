#![allow(dead_code)]

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfclutter::scenario_io::{parse_scenario, Scenario};

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// O(L·P) linear convolution, written independently of the library.
pub fn direct_convolution(h: &[C], s: &[C]) -> Vec<C> {
    let mut y = vec![C::new(0.0, 0.0); h.len() + s.len() - 1];
    for (i, a) in h.iter().enumerate() {
        for (j, b) in s.iter().enumerate() {
            y[i + j] += a * b;
        }
    }
    y
}

pub fn rel_l2(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn unit_random(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    let v = random_vec(rng, n);
    let e: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / e).collect()
}

/// Small hilly scene seen by a slow airborne radar with three channels.
pub const SMALL_SCENARIO: &str = "\
scenario.name = small
seed.master = 7
radar.carrier = 1e10
radar.bandwidth = 5e6
radar.sample_rate = 1e7
radar.prf = 2000
radar.pulses = 16
radar.channels = 3
radar.swath = 2500
radar.pulse_width = 5e-6
radar.noise_power = 0
tx.position = 600 -1500 800
tx.velocity = 40 0 0
terrain.dem = synthetic:peak
terrain.landcover = uniform:grass
terrain.rows = 40
terrain.cols = 40
terrain.cell_size = 30
terrain.relief = 150
clutter.doppler_jitter = 0.3
target.0.position = 300 200 5
target.0.velocity = 0 -5 0
target.0.rcs = 10
";

pub fn small_scenario() -> Scenario {
    parse_scenario(SMALL_SCENARIO).expect("test scenario parses")
}
