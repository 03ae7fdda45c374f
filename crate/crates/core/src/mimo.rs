//! MIMO radar as a set of bistatic transmitter/receiver pairs.

use std::ops::Range;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;

use crate::array::ArrayGeometry;
use crate::channel::{ImpulseResponse, Link};
use crate::dsp::pulse_compress;
use crate::error::{config, Result};
use crate::num::{widen, Real};
use crate::rxsim::{receive, DataCube, ReceiveConfig, Source};
use crate::terrain::PlatformState;
use crate::waveform::Waveform;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub platform: PlatformState,
    pub array: ArrayGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub tx: usize,
    pub rx: usize,
}

/// All transmitter × receiver pairs, transmitter-major.
pub fn enumerate_pairs(tx: &[Node], rx: &[Node]) -> Result<Vec<Pair>> {
    if tx.is_empty() || rx.is_empty() {
        return config("MIMO needs at least one transmitter and one receiver");
    }
    Ok((0..tx.len()).flat_map(|t| (0..rx.len()).map(move |r| Pair { tx: t, rx: r })).collect())
}

pub fn pair_link(tx: &Node, rx: &Node, wavelength: f64) -> Link {
    Link { tx: tx.platform, rx: rx.platform, wavelength }
}

/// One cube per receiver: `Σ_tx IR(tx, rx) ⊛ s_tx + noise`, summed in
/// transmitter order. `irs[k]` belongs to `pairs[k]`; `waveforms[t]` holds
/// one waveform (or one per pulse) for transmitter `t`.
pub fn simulate_mimo_cube<T: Real>(
    pairs: &[Pair],
    irs: &[ImpulseResponse<T>],
    waveforms: &[Vec<Waveform<T>>],
    base: &ReceiveConfig,
) -> Result<Vec<DataCube<T>>> {
    if pairs.len() != irs.len() {
        return config(format!("{} pairs but {} impulse responses", pairs.len(), irs.len()));
    }
    let txs = pairs.iter().map(|p| p.tx).max().map_or(0, |t| t + 1);
    let rxs = pairs.iter().map(|p| p.rx).max().map_or(0, |r| r + 1);
    if waveforms.len() != txs {
        return config(format!("{txs} transmitters but {} waveform sets", waveforms.len()));
    }
    (0..rxs)
        .into_par_iter()
        .map(|r| {
            let mut mine: Vec<(usize, &ImpulseResponse<T>)> = pairs.iter().zip(irs).filter(|(p, _)| p.rx == r).map(|(p, ir)| (p.tx, ir)).collect();
            mine.sort_by_key(|(t, _)| *t);
            let sources: Vec<Source<'_, T>> = mine.iter().map(|(t, ir)| Source { ir, waveforms: &waveforms[*t] }).collect();
            receive(&sources, &ReceiveConfig { receiver: r, ..*base })
        })
        .collect()
}

fn peak_response<T: Real>(cube: &DataCube<T>, waveform: &Waveform<T>, gate: &Range<usize>) -> Result<f64> {
    let (cpis, n, m, r) = cube.dims();
    let mut best = 0.0f64;
    for k in 0..cpis {
        for c in 0..n {
            for p in 0..m {
                let row: Vec<Complex<f64>> = (0..r).map(|i| widen(cube.samples[[k, c, p, i]])).collect();
                let y = pulse_compress(&row, waveform)?;
                let hi = gate.end.min(y.len());
                for z in &y[gate.start.min(hi)..hi] {
                    best = best.max(z.norm());
                }
            }
        }
    }
    Ok(best)
}

/// Leakage floor reported when a matched filter output is exactly zero.
pub const LEAKAGE_FLOOR_DB: f64 = -300.0;

/// `out[a][b]`: peak of the matched filter for waveform `a` over range gate
/// `gate` applied to the cube received from transmitter `b` alone, relative
/// to the matched peak `(a, a)`, in dB.
pub fn cross_channel_leakage<T: Real>(single_tx_cubes: &[DataCube<T>], waveforms: &[Waveform<T>], gate: Range<usize>) -> Result<Array2<f64>> {
    let k = waveforms.len();
    if k < 2 || single_tx_cubes.len() != k {
        return config("leakage needs one single-transmitter cube per waveform and at least two");
    }
    let cells: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect();
    let peaks: Vec<f64> = cells.par_iter().map(|&(a, b)| peak_response(&single_tx_cubes[b], &waveforms[a], &gate)).collect::<Result<_>>()?;
    let peaks = Array2::from_shape_vec((k, k), peaks).expect("square");
    Ok(Array2::from_shape_fn((k, k), |(a, b)| {
        let (num, den) = (peaks[[a, b]], peaks[[a, a]]);
        if num == 0.0 || den == 0.0 {
            if a == b && den > 0.0 {
                0.0
            } else {
                LEAKAGE_FLOOR_DB
            }
        } else {
            (20.0 * (num / den).log10()).max(LEAKAGE_FLOOR_DB)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::Vec3;

    fn node(x: f64) -> Node {
        Node {
            platform: PlatformState::stationary(Vec3::new(x, 0.0, 1000.0)),
            array: ArrayGeometry::ula(1, 0.015, Vec3::x(), Vec3::zeros(), 0.03, Vec3::y()).unwrap(),
        }
    }

    #[test]
    fn pair_order() {
        let tx = vec![node(0.0), node(1.0)];
        let rx = vec![node(2.0), node(3.0), node(4.0)];
        let p = enumerate_pairs(&tx, &rx).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], Pair { tx: 0, rx: 0 });
        assert_eq!(p[2], Pair { tx: 0, rx: 2 });
        assert_eq!(p[3], Pair { tx: 1, rx: 0 });
        assert_eq!(enumerate_pairs(&tx[..1], &rx[..1]).unwrap().len(), 1);
        assert!(enumerate_pairs(&[], &rx).is_err());
    }
}
