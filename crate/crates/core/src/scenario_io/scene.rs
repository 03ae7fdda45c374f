//! End-to-end pipeline: terrain → line of sight → landcover → clutter map
//! → impulse responses → IQ cube.

use num_complex::Complex;
use rayon::prelude::*;

use crate::array::{pattern_gain, spatial_steering, ArrayGeometry};
use crate::channel::{
    patch_response, synthesize_ir_modulated, target_response, ChannelKind, ImpulseResponse, Link, PatchResponse, PointTarget, PulseModulation,
    RadarTiming, StochasticModel, SPEED_OF_LIGHT,
};
use crate::error::{config, Result};
use crate::formats;
use crate::num::Real;
use crate::ocean::{OceanModulation, OceanState};
use crate::rxsim::{simulate_cube, DataCube};
use crate::scattering::{patch_power_scale, Band, LinkBudget, ScatteringTable};
use crate::seed;
use crate::terrain::{build_patch_grid, line_of_sight_clipped, ElevationGrid, LandCover, LandCoverGrid, PlatformState, ScenePatch, Vec3};
use crate::waveform::{lfm, phase_code, ChirpDirection, Waveform};

use super::generate::{littoral_landcover, synthetic_dem};
use super::{DiscreteKind, RasterSource, Scenario, WaveformKind};

/// Terrain, landcover, patches and backscatter table of a scenario.
#[derive(Debug, Clone)]
pub struct Scene {
    pub dem: ElevationGrid,
    pub landcover: LandCoverGrid,
    pub patches: Vec<ScenePatch>,
    pub table: ScatteringTable,
    pub band: Band,
}

fn resolve(p: &std::path::Path, base: &std::path::Path) -> std::path::PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Build the scene. Relative raster paths resolve against `base`.
pub fn build_scene(s: &Scenario, base: &std::path::Path) -> Result<Scene> {
    let t = &s.terrain;
    let mut dem = match &t.dem {
        RasterSource::Synthetic(kind) => synthetic_dem(kind, t.rows, t.cols, t.cell_size, t.relief)?,
        RasterSource::File(p) => formats::load_dem(&resolve(p, base))?,
        RasterSource::Uniform(_) => return config("terrain.dem cannot be uniform"),
    };
    if matches!(t.dem, RasterSource::Synthetic(_)) {
        dem.origin = t.origin;
    }
    let mut landcover = match &t.landcover {
        RasterSource::Synthetic(_) => littoral_landcover(&dem),
        RasterSource::Uniform(c) => LandCoverGrid::uniform(&dem, *c),
        RasterSource::File(p) => formats::load_landcover(&resolve(p, base))?,
    };
    for d in &s.discretes {
        if let DiscreteKind::Building { width, length, height } = d.kind {
            place_building(&mut dem, &mut landcover, d.position, width, length, height);
        }
    }
    let patches = build_patch_grid(&dem, &landcover, t.patch_size)?;
    let table = match &s.scattering_table {
        Some(p) => ScatteringTable::parse(&std::fs::read_to_string(resolve(p, base))?)?,
        None => ScatteringTable::default_constant_gamma(),
    };
    let band = Band::from_carrier(s.radar.carrier)?;
    Ok(Scene { dem, landcover, patches, table, band })
}

/// Raise every cell whose centre lies in the footprint and mark it as building.
fn place_building(dem: &mut ElevationGrid, lc: &mut LandCoverGrid, c: Vec3, width: f64, length: f64, height: f64) {
    let (nrows, ncols) = (dem.nrows, dem.ncols);
    let mut cells = Vec::new();
    for r in 0..nrows {
        for col in 0..ncols {
            let (x, y) = dem.cell_center(r, col);
            if (x - c.x).abs() < width / 2.0 && (y - c.y).abs() < length / 2.0 {
                cells.push((r, col));
            }
        }
    }
    let ncols = dem.ncols;
    let heights = dem.heights_mut();
    for &(r, col) in &cells {
        heights[r * ncols + col] += height;
        lc.set(r, col, LandCover::Building);
    }
}

pub fn rx_array(s: &Scenario) -> Result<ArrayGeometry> {
    let lambda = s.radar.wavelength();
    let spacing = s.antenna.spacing.unwrap_or(lambda / 2.0);
    let mut a = ArrayGeometry::ula(s.radar.channels, spacing, s.antenna.axis, Vec3::zeros(), lambda, s.antenna.boresight)?;
    a.cos_exponent = s.antenna.cos_exponent;
    Ok(a)
}

pub fn tx_array(s: &Scenario) -> Result<ArrayGeometry> {
    let lambda = s.radar.wavelength();
    let spacing = s.antenna.spacing.unwrap_or(lambda / 2.0);
    let mut a = ArrayGeometry::ula(s.antenna.tx_elements, spacing, s.antenna.axis, Vec3::zeros(), lambda, s.antenna.boresight)?;
    a.cos_exponent = s.antenna.cos_exponent;
    Ok(a)
}

/// Unit-norm weights steering an array towards `direction`.
pub fn steering_weights<T: Real>(array: &ArrayGeometry, direction: &Vec3) -> Result<Vec<Complex<T>>> {
    let a = spatial_steering::<T>(array, &direction.normalize())?;
    let k = T::lit(1.0 / (array.len() as f64).sqrt());
    Ok(a.entries.into_iter().map(|z| z * k).collect())
}

/// Receive-beam weights towards the transmit beam centre.
pub fn beam_weights<T: Real>(s: &Scenario) -> Result<Vec<Complex<T>>> {
    steering_weights(&rx_array(s)?, &s.antenna.beam.unwrap_or(s.antenna.boresight))
}

/// Platforms at the start of CPI `k`.
pub fn platforms_at(s: &Scenario, cpi: usize) -> (PlatformState, PlatformState) {
    let t = cpi as f64 * s.radar.cpi_interval;
    (s.tx.advanced(t), s.rx_platform().advanced(t))
}

/// Receive window for CPI `k`.
pub fn timing(s: &Scenario, scene: &Scene) -> Result<RadarTiming> {
    let r = &s.radar;
    let near = match r.near_range {
        Some(n) => n,
        None => {
            let (tx, rx) = platforms_at(s, 0);
            let min = scene
                .patches
                .iter()
                .map(|p| ((p.center - tx.position).norm() + (p.center - rx.position).norm()) / 2.0)
                .fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                (min - 2.0 * SPEED_OF_LIGHT / (2.0 * r.sample_rate)).max(0.0)
            } else {
                0.0
            }
        }
    };
    RadarTiming::from_swath(r.prf, r.sample_rate, 2.0 * near / SPEED_OF_LIGHT, 2.0 * r.swath / SPEED_OF_LIGHT, r.pulses)
}

pub fn waveform<T: Real>(s: &Scenario) -> Result<Waveform<T>> {
    let r = &s.radar;
    match r.waveform {
        WaveformKind::Lfm => lfm(r.bandwidth, r.pulse_width, r.sample_rate, ChirpDirection::Up),
        WaveformKind::PhaseCode => phase_code(r.chips, r.sample_rate, seed::derive(s.seed, &[seed::tag::PHASE_CODE])),
    }
}

/// Per-patch clutter map entry for one CPI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterCell {
    pub patch_id: usize,
    pub center: Vec3,
    pub landcover: LandCover,
    pub visible_tx: bool,
    pub visible_rx: bool,
    /// Effective bistatic grazing angle (rad); zero when back-facing.
    pub grazing: f64,
    pub sigma0: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub power_scale: f64,
}

fn unit(v: Vec3) -> Vec3 {
    v / v.norm()
}

#[derive(Clone)]
struct Gains {
    tx: ArrayGeometry,
    tx_weights: Vec<Complex<f64>>,
    rx: ArrayGeometry,
    tx_scale: f64,
    rx_scale: f64,
}

impl Gains {
    fn new(s: &Scenario) -> Result<Self> {
        let tx = tx_array(s)?;
        let tx_weights = steering_weights(&tx, &s.antenna.beam.unwrap_or(s.antenna.boresight))?;
        Ok(Gains { tx, tx_weights, rx: rx_array(s)?, tx_scale: s.radar.tx_power * s.radar.tx_gain, rx_scale: s.radar.rx_gain })
    }

    fn tx_gain(&self, dir: &Vec3) -> Result<f64> {
        Ok(self.tx_scale * pattern_gain(&self.tx, &self.tx_weights, dir)?)
    }

    fn rx_gain(&self, dir: &Vec3) -> f64 {
        self.rx_scale * self.rx.element_factor(dir)
    }
}

/// Line of sight, grazing angle, σ⁰ and received power of every patch.
///
/// The bistatic grazing angle is `asin(√(sin ψ_tx · sin ψ_rx))`, which
/// reduces to the monostatic angle when the platforms coincide.
pub fn clutter_map(s: &Scenario, scene: &Scene, cpi: usize) -> Result<Vec<ClutterCell>> {
    let (tx, rx) = platforms_at(s, cpi);
    let gains = Gains::new(s)?;
    let monostatic = s.rx.is_none();
    let lambda = s.radar.wavelength();
    scene
        .patches
        .par_iter()
        .map(|p| {
            let to_tx = tx.position - p.center;
            let to_rx = rx.position - p.center;
            let visible_tx = line_of_sight_clipped(&scene.dem, &tx.position, &p.center);
            let visible_rx = if monostatic { visible_tx } else { line_of_sight_clipped(&scene.dem, &rx.position, &p.center) };
            let st = to_tx.dot(&p.normal) / to_tx.norm();
            let sr = to_rx.dot(&p.normal) / to_rx.norm();
            let grazing = if st > 0.0 && sr > 0.0 { (st * sr).sqrt().min(1.0).asin() } else { 0.0 };
            let sigma0 = scene.table.sigma0(p.landcover, scene.band, grazing)?;
            let tx_gain = gains.tx_gain(&unit(-to_tx))?;
            let rx_gain = gains.rx_gain(&unit(-to_rx));
            let power_scale = patch_power_scale(&LinkBudget {
                sigma0,
                area: p.area,
                tx_gain,
                rx_gain,
                wavelength: lambda,
                range_tx: to_tx.norm(),
                range_rx: to_rx.norm(),
                shadowed: !(visible_tx && visible_rx) || grazing == 0.0,
            })?;
            Ok(ClutterCell { patch_id: p.patch_id, center: p.center, landcover: p.landcover, visible_tx, visible_rx, grazing, sigma0, tx_gain, rx_gain, power_scale })
        })
        .collect()
}

/// Ocean modulation addressed by response index.
struct SeaModulation {
    sea_index: Vec<Option<usize>>,
    ocean: Option<OceanModulation>,
}

impl PulseModulation for SeaModulation {
    fn modulation(&self, response_index: usize, pulse: usize) -> (f64, f64) {
        match (&self.ocean, self.sea_index.get(response_index).copied().flatten()) {
            (Some(o), Some(k)) => o.modulation(k, pulse),
            _ => (0.0, 1.0),
        }
    }
}

/// Truth impulse responses of one CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct CpiChannels<T: Real> {
    pub clutter: ImpulseResponse<T>,
    pub target: ImpulseResponse<T>,
    pub dropped: usize,
}

fn point_responses(points: &[PointTarget], first_id: usize, link: &Link, dem: &ElevationGrid, gains: &Gains, t: f64) -> Result<Vec<PatchResponse>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let moved = PointTarget { position: p.position + p.velocity * t, ..*p };
            let visible = line_of_sight_clipped(dem, &link.tx.position, &moved.position) && line_of_sight_clipped(dem, &link.rx.position, &moved.position);
            let tg = if visible { gains.tx_gain(&unit(moved.position - link.tx.position))? } else { 0.0 };
            let rg = gains.rx_gain(&unit(moved.position - link.rx.position));
            target_response(first_id + i, &moved, link, tg, rg)
        })
        .collect()
}

/// Clutter (terrain, sea and point discretes) and target impulse responses
/// for CPI `cpi`.
pub fn synthesize_cpi<T: Real>(s: &Scenario, scene: &Scene, timing: &RadarTiming, cpi: usize) -> Result<CpiChannels<T>> {
    let (tx, rx) = platforms_at(s, cpi);
    let link = Link { tx, rx, wavelength: s.radar.wavelength() };
    let gains = Gains::new(s)?;
    let map = clutter_map(s, scene, cpi)?;
    let stochastic = StochasticModel::new(s.clutter.doppler_jitter, s.seed, s.clutter.phase_mode)?;

    let lit: Vec<&ClutterCell> = map.iter().filter(|c| c.power_scale > 0.0).collect();
    let mut responses: Vec<PatchResponse> = lit
        .par_iter()
        .map(|c| patch_response(c.patch_id, &c.center, c.power_scale, &link, &stochastic, cpi as u64))
        .collect::<Result<_>>()?;
    let mut sea_index: Vec<Option<usize>> = Vec::with_capacity(responses.len());
    let mut sea = Vec::new();
    for c in &lit {
        if c.landcover == LandCover::Water {
            sea_index.push(Some(sea.len()));
            sea.push(scene.patches[c.patch_id].clone());
        } else {
            sea_index.push(None);
        }
    }
    let ocean = if s.ocean.wind_speed > 0.0 && !sea.is_empty() {
        let state = OceanState::new(s.ocean.clone(), link.wavelength, sea)?;
        Some(OceanModulation::build(&state, s.radar.pulses, s.radar.prf, seed::derive(s.seed, &[seed::tag::OCEAN, cpi as u64]))?)
    } else {
        None
    };

    let t = cpi as f64 * s.radar.cpi_interval;
    let discretes: Vec<PointTarget> = s
        .discretes
        .iter()
        .filter_map(|d| match d.kind {
            DiscreteKind::Point { rcs } => Some(PointTarget { position: d.position, velocity: Vec3::zeros(), rcs }),
            DiscreteKind::Building { .. } => None,
        })
        .collect();
    responses.extend(point_responses(&discretes, scene.patches.len(), &link, &scene.dem, &gains, 0.0)?);

    let modulation = SeaModulation { sea_index, ocean };
    let (clutter, report_c) = synthesize_ir_modulated::<T>(&responses, timing, &gains.rx, ChannelKind::Clutter, &modulation)?;

    let targets: Vec<PointTarget> = s.targets.iter().map(|tg| PointTarget { position: tg.position, velocity: tg.velocity, rcs: tg.rcs }).collect();
    let target_responses = point_responses(&targets, 0, &link, &scene.dem, &gains, t)?;
    let (target, report_t) = synthesize_ir_modulated::<T>(&target_responses, timing, &gains.rx, ChannelKind::Target, &crate::channel::Static)?;
    Ok(CpiChannels { clutter, target, dropped: report_c.dropped + report_t.dropped })
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct Simulation<T: Real> {
    pub timing: RadarTiming,
    pub waveform: Waveform<T>,
    pub channels: Vec<CpiChannels<T>>,
    pub cube: DataCube<T>,
}

/// Full scenario run. Impulse responses are rounded to the f32 precision of
/// the exported files before convolution, so an exported cube is exactly
/// the convolution of the exported responses.
pub fn simulate<T: Real>(s: &Scenario, scene: &Scene) -> Result<Simulation<T>> {
    let timing = timing(s, scene)?;
    let waveform = waveform::<T>(s)?;
    simulate_with(s, scene, &timing, &waveform)
}

pub fn simulate_with<T: Real>(s: &Scenario, scene: &Scene, timing: &RadarTiming, waveform: &Waveform<T>) -> Result<Simulation<T>> {
    let mut channels = Vec::with_capacity(s.radar.cpis);
    let mut cubes = Vec::with_capacity(s.radar.cpis);
    for k in 0..s.radar.cpis {
        let ch = synthesize_cpi::<T>(s, scene, timing, k)?;
        let ch = CpiChannels { clutter: ch.clutter.quantized::<f32>(), target: ch.target.quantized::<f32>(), dropped: ch.dropped };
        cubes.push(simulate_cube(&ch.clutter, &ch.target, std::slice::from_ref(waveform), s.radar.noise_power, s.seed, k, s.radar.carrier)?);
        channels.push(ch);
    }
    Ok(Simulation { timing: *timing, waveform: waveform.clone(), channels, cube: DataCube::stack(&cubes)? })
}
