//! Synthetic terrain and the two challenge-style scenarios.
//!
//! Full-scale dimensions are 30 CPIs × 32 channels × 64 pulses × 2334 range
//! bins. A scale factor `s ∈ (0, 1]` shrinks CPIs, channels and range bins to
//! `max(1, ceil(s·n))` and the scene width proportionally; pulses stay 64.

use crate::channel::{PhaseMode, SPEED_OF_LIGHT};
use crate::error::{config, Result};
use crate::ocean::OceanParams;
use crate::terrain::{ElevationGrid, GeoPoint, LandCover, LandCoverGrid, PlatformState, Vec3};

use super::{AntennaParams, ClutterParams, DiscreteKind, DiscreteSpec, RadarParams, RasterSource, Scenario, TargetSpec, TerrainParams, WaveformKind};

/// Default scale for desk runs and tests.
pub const DESK_SCALE: f64 = 0.125;

pub const FULL_CPIS: usize = 30;
pub const FULL_CHANNELS: usize = 32;
pub const FULL_PULSES: usize = 64;
pub const FULL_RANGE_BINS: usize = 2334;

/// `max(1, ceil(scale·n))`, tolerant of rounding in `scale`.
pub fn scaled_count(n: usize, scale: f64) -> usize {
    ((n as f64 * scale - 1e-9).ceil() as usize).max(1)
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return config(format!("scale must lie in (0, 1], got {scale}"));
    }
    Ok(())
}

/// Synthetic elevation: `flat`, `peak` (one Gaussian mountain), `ridge`
/// (an east-west ridge across the middle) or `littoral` (sea in the
/// southern 35 %, land rising inland).
pub fn synthetic_dem(kind: &str, rows: usize, cols: usize, cell_size: f64, relief: f64) -> Result<ElevationGrid> {
    let (w, h) = (cols as f64 * cell_size, rows as f64 * cell_size);
    match kind {
        "flat" => ElevationGrid::flat(cell_size, rows, cols, 0.0),
        "peak" => {
            let s = w.min(h) / 8.0;
            ElevationGrid::from_fn(cell_size, rows, cols, |x, y| {
                let r2 = (x - w / 2.0).powi(2) + (y - h / 2.0).powi(2);
                relief * (-r2 / (2.0 * s * s)).exp()
            })
        }
        "ridge" => ElevationGrid::from_fn(cell_size, rows, cols, |_, y| relief * (-((y - h / 2.0) / (h / 10.0)).powi(2)).exp()),
        "littoral" => {
            let coast = 0.35 * h;
            ElevationGrid::from_fn(cell_size, rows, cols, |x, y| {
                if y < coast {
                    0.0
                } else {
                    let d = y - coast;
                    let rise = relief * (1.0 - (-d / (0.3 * h)).exp());
                    let roll = 0.1 * relief * (x / 700.0).sin() * (y / 900.0).cos();
                    (rise + roll * (d / (d + 200.0))).max(0.5)
                }
            })
        }
        other => config(format!("unknown synthetic DEM `{other}`")),
    }
}

/// Littoral landcover: water south of the coast, a bare beach, then a
/// blocky mix of grass, shrub, forest and urban.
pub fn littoral_landcover(dem: &ElevationGrid) -> LandCoverGrid {
    let h = dem.nrows as f64 * dem.cell_size;
    let coast = 0.35 * h;
    LandCoverGrid::from_fn(dem, |x, y| {
        if y < coast {
            LandCover::Water
        } else if y < coast + 60.0 {
            LandCover::Bare
        } else {
            let ix = (x / 240.0).floor() as i64;
            let iy = ((y - coast) / 240.0).floor() as i64;
            const MIX: [LandCover; 5] = [LandCover::Grass, LandCover::Shrub, LandCover::Forest, LandCover::Grass, LandCover::Urban];
            MIX[(ix * 7 + iy * 13).rem_euclid(5) as usize]
        }
    })
}

struct Layout {
    scale: f64,
    width: f64,
    height: f64,
    rows: usize,
    cols: usize,
    cell: f64,
    relief: f64,
}

const ALTITUDE: f64 = 1000.0;
const SPEED: f64 = 125.0;
const NEAR_SLANT: f64 = 9000.0;
const CPI_INTERVAL: f64 = 3.0;
const SAMPLE_RATE: f64 = 10e6;

impl Layout {
    fn new(scale: f64) -> Self {
        let bins = scaled_count(FULL_RANGE_BINS, scale);
        let cell = 15.0;
        let window = bins as f64 * SPEED_OF_LIGHT / (2.0 * SAMPLE_RATE);
        let rows = (0.97 * window / cell).floor() as usize;
        let cols = (16_000.0 * scale / cell).round().max(4.0) as usize;
        Layout { scale, width: cols as f64 * cell, height: rows as f64 * cell, rows, cols, cell, relief: 80.0 }
    }

    fn ground_offset(&self) -> f64 {
        (NEAR_SLANT * NEAR_SLANT - ALTITUDE * ALTITUDE).sqrt()
    }

    fn height_at(&self, x: f64, y: f64) -> f64 {
        let dem = synthetic_dem("littoral", self.rows, self.cols, self.cell, self.relief).expect("valid layout");
        dem.height(x, y).unwrap_or(0.0)
    }

    fn on_ground(&self, x: f64, y: f64, above: f64) -> Vec3 {
        Vec3::new(x, y, self.height_at(x, y) + above)
    }

    /// Platform x position at CPI `k` of `cpis`; the track is centred on the scene.
    fn track_x(&self, k: usize, cpis: usize) -> f64 {
        self.width / 2.0 + SPEED * CPI_INTERVAL * (k as f64 - (cpis as f64 - 1.0) / 2.0)
    }
}

/// Four moving targets (the last one weak), two strong point discretes and
/// a littoral land/sea scene viewed broadside by an airborne GMTI radar.
pub fn generate_scenario1(scale: f64) -> Result<Scenario> {
    check_scale(scale)?;
    let lay = Layout::new(scale);
    let cpis = scaled_count(FULL_CPIS, scale);
    let channels = scaled_count(FULL_CHANNELS, scale);
    let bins = scaled_count(FULL_RANGE_BINS, scale);
    let carrier = 10e9;
    let swath = (bins as f64 - 0.5) * SPEED_OF_LIGHT / (2.0 * SAMPLE_RATE);
    let y0 = -lay.ground_offset();
    let tx = PlatformState::new(Vec3::new(lay.track_x(0, cpis), y0, ALTITUDE), Vec3::new(SPEED, 0.0, 0.0))?;
    let mid_range = lay.ground_offset() + lay.height / 2.0;
    let dep = (ALTITUDE / mid_range).atan();
    let beam = Vec3::new(0.0, dep.cos(), -dep.sin());

    let (w, h) = (lay.width, lay.height);
    let last_x = lay.track_x(cpis - 1, cpis);
    let targets = vec![
        TargetSpec { position: lay.on_ground(w / 2.0, 0.55 * h, 2.0), velocity: Vec3::new(0.0, -10.0, 0.0), rcs: 20.0 },
        TargetSpec { position: lay.on_ground(0.4 * w, 0.75 * h, 2.0), velocity: Vec3::new(4.0, 7.0, 0.0), rcs: 10.0 },
        TargetSpec { position: lay.on_ground(0.6 * w, 0.2 * h, 3.0), velocity: Vec3::new(-3.0, -6.0, 0.0), rcs: 30.0 },
        TargetSpec { position: lay.on_ground(last_x.min(0.95 * w), 0.27 * h, 3.0), velocity: Vec3::new(0.0, 13.0, 0.0), rcs: 5.0 },
    ];
    let discretes = vec![
        DiscreteSpec { position: lay.on_ground(0.3 * w, 0.65 * h, 15.0), kind: DiscreteKind::Point { rcs: 1e4 } },
        DiscreteSpec { position: lay.on_ground(0.7 * w, 0.25 * h, 10.0), kind: DiscreteKind::Point { rcs: 3e3 } },
    ];

    Ok(Scenario {
        name: format!("scenario1-scale{}", lay.scale),
        seed: 2021,
        radar: RadarParams {
            carrier,
            bandwidth: 5e6,
            sample_rate: SAMPLE_RATE,
            prf: 2100.0,
            pulses: FULL_PULSES,
            channels,
            cpis,
            cpi_interval: CPI_INTERVAL,
            swath,
            near_range: Some(NEAR_SLANT - 30.0),
            pulse_width: 20e-6,
            waveform: WaveformKind::Lfm,
            chips: 64,
            tx_power: 1e4,
            tx_gain: 1.0,
            rx_gain: 1.0,
            noise_power: 1e-18,
        },
        antenna: AntennaParams { spacing: None, axis: Vec3::x(), boresight: beam, cos_exponent: 1.0, tx_elements: 32, beam: Some(beam) },
        tx,
        rx: None,
        terrain: TerrainParams {
            dem: RasterSource::Synthetic("littoral".into()),
            landcover: RasterSource::Synthetic("littoral".into()),
            rows: lay.rows,
            cols: lay.cols,
            cell_size: lay.cell,
            patch_size: 30.0,
            relief: lay.relief,
            origin: GeoPoint { lat_deg: 36.6, lon_deg: -121.9 },
        },
        scattering_table: None,
        clutter: ClutterParams { phase_mode: PhaseMode::Random, doppler_jitter: 0.5 },
        ocean: OceanParams { wind_speed: 5.0, ..OceanParams::default() },
        targets,
        discretes,
    })
}

pub const BUILDING_GRID: (usize, usize) = (50, 3);
pub const BUILDING_SIZE: (f64, f64, f64) = (30.0, 30.0, 6.0);

/// Scenario 1 plus a 50 × 3 grid of 30 m × 30 m × 6 m buildings just
/// beyond target 1 in range.
pub fn generate_scenario2(scale: f64) -> Result<Scenario> {
    let mut s = generate_scenario1(scale)?;
    s.name = s.name.replacen("scenario1", "scenario2", 1);
    let t1 = s.targets[0].position;
    let (bw, bl, bh) = BUILDING_SIZE;
    let (nx, ny) = BUILDING_GRID;
    // Centres on odd multiples of 15 m so each footprint covers whole cells and one patch.
    let snap = |v: f64| (v / 30.0).floor() * 30.0 + 15.0;
    let x0 = snap(t1.x - bw * (nx as f64) / 2.0);
    let y0 = snap(t1.y + 60.0);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (x0 + i as f64 * bw, y0 + j as f64 * bl);
            s.discretes.push(DiscreteSpec { position: Vec3::new(x, y, 0.0), kind: DiscreteKind::Building { width: bw, length: bl, height: bh } });
        }
    }
    Ok(s)
}
