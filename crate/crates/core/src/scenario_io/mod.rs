//! Scenario configuration, synthetic scene generation, the end-to-end
//! simulation pipeline and challenge-style dataset export.
//!
//! Scenario files are line-oriented `section.key = value` text. `#` starts a
//! comment. Vectors are three whitespace-separated numbers. Targets and
//! discretes are indexed: `target.0.position = ...`.

pub mod challenge;
pub mod generate;
pub mod regen;
pub mod scene;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::channel::{PhaseMode, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::ocean::OceanParams;
use crate::terrain::{GeoPoint, LandCover, PlatformState, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformKind {
    Lfm,
    PhaseCode,
}

impl WaveformKind {
    pub fn name(self) -> &'static str {
        match self {
            WaveformKind::Lfm => "lfm",
            WaveformKind::PhaseCode => "phase_code",
        }
    }
}

impl FromStr for WaveformKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lfm" => Ok(WaveformKind::Lfm),
            "phase_code" => Ok(WaveformKind::PhaseCode),
            _ => Err(format!("expected `lfm` or `phase_code`, found `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarParams {
    pub carrier: f64,
    pub bandwidth: f64,
    pub sample_rate: f64,
    pub prf: f64,
    pub pulses: usize,
    pub channels: usize,
    pub cpis: usize,
    /// Start-to-start time between CPIs (s).
    pub cpi_interval: f64,
    /// Range swath (m); the receive window is `ceil(2·swath/c·fs)` samples.
    pub swath: f64,
    /// One-way range of the first range bin (m); `None` places it just
    /// before the nearest scatterer.
    pub near_range: Option<f64>,
    pub pulse_width: f64,
    pub waveform: WaveformKind,
    pub chips: usize,
    /// Transmit power (W); multiplies the transmit gain.
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Receiver noise variance per complex sample.
    pub noise_power: f64,
}

impl RadarParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    pub fn range_bins(&self) -> usize {
        crate::channel::swath_taps(2.0 * self.swath / SPEED_OF_LIGHT, self.sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaParams {
    /// Element spacing (m); `None` means half a wavelength.
    pub spacing: Option<f64>,
    pub axis: Vec3,
    pub boresight: Vec3,
    pub cos_exponent: f64,
    /// Transmit aperture: uniform line of this many elements along `axis`.
    pub tx_elements: usize,
    /// Transmit beam pointing direction; `None` means boresight.
    pub beam: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RasterSource {
    /// `synthetic:<flat|peak|ridge|littoral>`
    Synthetic(String),
    /// `uniform:<class>` (landcover only)
    Uniform(LandCover),
    File(PathBuf),
}

impl RasterSource {
    fn text(&self) -> String {
        match self {
            RasterSource::Synthetic(k) => format!("synthetic:{k}"),
            RasterSource::Uniform(c) => format!("uniform:{}", c.name()),
            RasterSource::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerrainParams {
    pub dem: RasterSource,
    pub landcover: RasterSource,
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
    pub patch_size: f64,
    /// Height scale of synthetic DEMs (m).
    pub relief: f64,
    pub origin: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub position: Vec3,
    pub velocity: Vec3,
    pub rcs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteKind {
    Point { rcs: f64 },
    /// Raises the DEM by `height` over a `width × length` footprint centred
    /// on the position and marks it as building landcover.
    Building { width: f64, length: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpec {
    pub position: Vec3,
    pub kind: DiscreteKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClutterParams {
    pub phase_mode: PhaseMode,
    pub doppler_jitter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub radar: RadarParams,
    pub antenna: AntennaParams,
    pub tx: PlatformState,
    /// `None` for monostatic operation.
    pub rx: Option<PlatformState>,
    pub terrain: TerrainParams,
    pub scattering_table: Option<PathBuf>,
    pub clutter: ClutterParams,
    pub ocean: OceanParams,
    pub targets: Vec<TargetSpec>,
    pub discretes: Vec<DiscreteSpec>,
}

impl Scenario {
    pub fn rx_platform(&self) -> PlatformState {
        self.rx.unwrap_or(self.tx)
    }

    /// `(cpis, channels, pulses, range bins)` of the data cube.
    pub fn cube_dims(&self) -> (usize, usize, usize, usize) {
        (self.radar.cpis, self.radar.channels, self.radar.pulses, self.radar.range_bins())
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Canonical text form. Parsing it yields an equal scenario.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let r = &self.radar;
        let v = |p: &Vec3| format!("{} {} {}", p.x, p.y, p.z);
        let mut kv = |k: &str, val: String| {
            let _ = writeln!(o, "{k} = {val}");
        };
        kv("scenario.name", self.name.clone());
        kv("seed.master", self.seed.to_string());
        kv("radar.carrier", r.carrier.to_string());
        kv("radar.bandwidth", r.bandwidth.to_string());
        kv("radar.sample_rate", r.sample_rate.to_string());
        kv("radar.prf", r.prf.to_string());
        kv("radar.pulses", r.pulses.to_string());
        kv("radar.channels", r.channels.to_string());
        kv("radar.cpis", r.cpis.to_string());
        kv("radar.cpi_interval", r.cpi_interval.to_string());
        kv("radar.swath", r.swath.to_string());
        if let Some(n) = r.near_range {
            kv("radar.near_range", n.to_string());
        }
        kv("radar.pulse_width", r.pulse_width.to_string());
        kv("radar.waveform", r.waveform.name().to_string());
        kv("radar.chips", r.chips.to_string());
        kv("radar.tx_power", r.tx_power.to_string());
        kv("radar.tx_gain", r.tx_gain.to_string());
        kv("radar.rx_gain", r.rx_gain.to_string());
        kv("radar.noise_power", r.noise_power.to_string());
        let a = &self.antenna;
        if let Some(s) = a.spacing {
            kv("antenna.spacing", s.to_string());
        }
        kv("antenna.axis", v(&a.axis));
        kv("antenna.boresight", v(&a.boresight));
        kv("antenna.cos_exponent", a.cos_exponent.to_string());
        kv("antenna.tx_elements", a.tx_elements.to_string());
        if let Some(b) = &a.beam {
            kv("antenna.beam", v(b));
        }
        kv("tx.position", v(&self.tx.position));
        kv("tx.velocity", v(&self.tx.velocity));
        if let Some(rx) = &self.rx {
            kv("rx.position", v(&rx.position));
            kv("rx.velocity", v(&rx.velocity));
        }
        let t = &self.terrain;
        kv("terrain.dem", t.dem.text());
        kv("terrain.landcover", t.landcover.text());
        kv("terrain.rows", t.rows.to_string());
        kv("terrain.cols", t.cols.to_string());
        kv("terrain.cell_size", t.cell_size.to_string());
        kv("terrain.patch_size", t.patch_size.to_string());
        kv("terrain.relief", t.relief.to_string());
        kv("terrain.origin", format!("{} {}", t.origin.lat_deg, t.origin.lon_deg));
        if let Some(p) = &self.scattering_table {
            kv("scattering.table", p.display().to_string());
        }
        kv("clutter.phase_mode", match self.clutter.phase_mode {
            PhaseMode::Random => "random".into(),
            PhaseMode::Deterministic => "deterministic".into(),
        });
        kv("clutter.doppler_jitter", self.clutter.doppler_jitter.to_string());
        let oc = &self.ocean;
        kv("ocean.wind_speed", oc.wind_speed.to_string());
        kv("ocean.wind_direction", oc.wind_direction.to_string());
        kv("ocean.kappa", oc.kappa.to_string());
        kv("ocean.correlation_time", oc.correlation_time.to_string());
        kv("ocean.amplitude_sigma", oc.amplitude_sigma_per_wind.to_string());
        for (i, tg) in self.targets.iter().enumerate() {
            kv(&format!("target.{i}.position"), v(&tg.position));
            kv(&format!("target.{i}.velocity"), v(&tg.velocity));
            kv(&format!("target.{i}.rcs"), tg.rcs.to_string());
        }
        for (i, d) in self.discretes.iter().enumerate() {
            kv(&format!("discrete.{i}.position"), v(&d.position));
            match d.kind {
                DiscreteKind::Point { rcs } => kv(&format!("discrete.{i}.rcs"), rcs.to_string()),
                DiscreteKind::Building { width, length, height } => kv(&format!("discrete.{i}.building"), format!("{width} {length} {height}")),
            }
        }
        o
    }
}

const SCALAR_KEYS: &[&str] = &[
    "scenario.name",
    "seed.master",
    "radar.carrier",
    "radar.bandwidth",
    "radar.sample_rate",
    "radar.prf",
    "radar.pulses",
    "radar.channels",
    "radar.cpis",
    "radar.cpi_interval",
    "radar.swath",
    "radar.near_range",
    "radar.pulse_width",
    "radar.waveform",
    "radar.chips",
    "radar.tx_power",
    "radar.tx_gain",
    "radar.rx_gain",
    "radar.noise_power",
    "antenna.spacing",
    "antenna.axis",
    "antenna.boresight",
    "antenna.cos_exponent",
    "antenna.tx_elements",
    "antenna.beam",
    "tx.position",
    "tx.velocity",
    "rx.position",
    "rx.velocity",
    "terrain.dem",
    "terrain.landcover",
    "terrain.rows",
    "terrain.cols",
    "terrain.cell_size",
    "terrain.patch_size",
    "terrain.relief",
    "terrain.origin",
    "scattering.table",
    "clutter.phase_mode",
    "clutter.doppler_jitter",
    "ocean.wind_speed",
    "ocean.wind_direction",
    "ocean.kappa",
    "ocean.correlation_time",
    "ocean.amplitude_sigma",
];

const TARGET_FIELDS: &[&str] = &["position", "velocity", "rcs"];
const DISCRETE_FIELDS: &[&str] = &["position", "rcs", "building"];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    targets: BTreeMap<u64, ()>,
    discretes: BTreeMap<u64, ()>,
    base: PathBuf,
}

fn err<T>(line: usize, key: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Scenario { line, key: key.into(), message: message.into() })
}

impl Entries {
    fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut e = Entries { map: BTreeMap::new(), targets: BTreeMap::new(), discretes: BTreeMap::new(), base: base.to_path_buf() };
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return err(line, content, "expected `key = value`");
            };
            let key = key.trim();
            let value = value.trim();
            let parts: Vec<&str> = key.split('.').collect();
            let known = match parts.as_slice() {
                ["target", i, f] => i.parse::<u64>().map(|i| e.targets.insert(i, ())).is_ok() && TARGET_FIELDS.contains(f),
                ["discrete", i, f] => i.parse::<u64>().map(|i| e.discretes.insert(i, ())).is_ok() && DISCRETE_FIELDS.contains(f),
                _ => SCALAR_KEYS.contains(&key),
            };
            if !known {
                return err(line, key, "unknown key");
            }
            if let Some((first, _)) = e.map.get(key) {
                return err(line, key, format!("duplicate key (first set on line {first})"));
            }
            e.map.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(e)
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn get<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).or_else(|_| err(line, key, format!("expected {what}, found `{v}`"))),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return err(self.line(key), key, "value must be finite");
            }
        }
        Ok(v)
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.map_or_else(|| err(0, key, "missing required key"), Ok)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key, "a non-negative integer")
    }

    fn req_usize(&self, key: &str) -> Result<usize> {
        self.usize(key)?.map_or_else(|| err(0, key, "missing required key"), Ok)
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        let nums: Vec<f64> = v.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(str::parse).collect::<std::result::Result<_, _>>().or_else(|_| err(line, key, format!("expected three numbers, found `{v}`")))?;
        if nums.len() != 3 || nums.iter().any(|x| !x.is_finite()) {
            return err(line, key, format!("expected three finite numbers, found `{v}`"));
        }
        Ok(Some(Vec3::new(nums[0], nums[1], nums[2])))
    }

    fn req_vec3(&self, key: &str) -> Result<Vec3> {
        self.vec3(key)?.map_or_else(|| err(0, key, "missing required key"), Ok)
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        let p = PathBuf::from(v);
        let full = if p.is_absolute() { p.clone() } else { self.base.join(&p) };
        if !full.exists() {
            return err(line, key, format!("file not found: {}", full.display()));
        }
        Ok(Some(p))
    }

    fn raster(&self, key: &str, default: RasterSource, landcover: bool) -> Result<RasterSource> {
        let Some((line, v)) = self.raw(key) else { return Ok(default) };
        if let Some(kind) = v.strip_prefix("synthetic:") {
            let ok = ["flat", "peak", "ridge", "littoral"];
            if !ok.contains(&kind) || (landcover && kind != "littoral") {
                return err(line, key, format!("unknown synthetic raster `{kind}`"));
            }
            return Ok(RasterSource::Synthetic(kind.to_string()));
        }
        if let Some(class) = v.strip_prefix("uniform:") {
            if !landcover {
                return err(line, key, "uniform rasters are landcover only");
            }
            return class.parse::<LandCover>().map(RasterSource::Uniform).or_else(|_| err(line, key, format!("unknown landcover class `{class}`")));
        }
        Ok(RasterSource::File(self.path(key)?.expect("present")))
    }

    fn positive(&self, key: &str, v: f64) -> Result<f64> {
        if v > 0.0 {
            Ok(v)
        } else {
            err(self.line(key), key, format!("must be positive, got {v}"))
        }
    }

    fn non_negative(&self, key: &str, v: f64) -> Result<f64> {
        if v >= 0.0 {
            Ok(v)
        } else {
            err(self.line(key), key, format!("must be non-negative, got {v}"))
        }
    }

    fn at_least_one(&self, key: &str, v: usize) -> Result<usize> {
        if v >= 1 {
            Ok(v)
        } else {
            err(self.line(key), key, "must be at least 1")
        }
    }

    fn unit(&self, key: &str, v: Vec3) -> Result<Vec3> {
        if v.norm() > 0.0 {
            Ok(v.normalize())
        } else {
            err(self.line(key), key, "direction must be non-zero")
        }
    }

    fn platform(&self, prefix: &str) -> Result<Option<PlatformState>> {
        let pk = format!("{prefix}.position");
        let vk = format!("{prefix}.velocity");
        let Some(p) = self.vec3(&pk)? else {
            if self.raw(&vk).is_some() {
                return err(self.line(&vk), &vk, format!("requires {pk}"));
            }
            return Ok(None);
        };
        let v = self.vec3(&vk)?.unwrap_or_else(Vec3::zeros);
        PlatformState::new(p, v).map(Some).or_else(|e| err(self.line(&pk), &pk, e.to_string()))
    }
}

/// Parse scenario text. Relative file references resolve against `base`
/// and must exist.
pub fn parse_scenario_in(text: &str, base: &Path) -> Result<Scenario> {
    let e = Entries::parse(text, base)?;

    let carrier = e.positive("radar.carrier", e.req_f64("radar.carrier")?)?;
    let bandwidth = e.positive("radar.bandwidth", e.req_f64("radar.bandwidth")?)?;
    let sample_rate = e.positive("radar.sample_rate", e.f64("radar.sample_rate")?.unwrap_or(2.0 * bandwidth))?;
    if sample_rate < bandwidth {
        return err(e.line("radar.sample_rate"), "radar.sample_rate", "must be at least the bandwidth");
    }
    let prf = e.positive("radar.prf", e.req_f64("radar.prf")?)?;
    let pulses = e.at_least_one("radar.pulses", e.req_usize("radar.pulses")?)?;
    let channels = e.at_least_one("radar.channels", e.usize("radar.channels")?.unwrap_or(1))?;
    let cpis = e.at_least_one("radar.cpis", e.usize("radar.cpis")?.unwrap_or(1))?;
    let cpi_interval = e.positive("radar.cpi_interval", e.f64("radar.cpi_interval")?.unwrap_or(pulses as f64 / prf))?;
    let swath = e.positive("radar.swath", e.f64("radar.swath")?.unwrap_or(20_000.0))?;
    let near_range = match e.f64("radar.near_range")? {
        Some(v) => Some(e.non_negative("radar.near_range", v)?),
        None => None,
    };
    let pulse_width = e.positive("radar.pulse_width", e.f64("radar.pulse_width")?.unwrap_or(20e-6))?;
    let waveform: WaveformKind = match e.raw("radar.waveform") {
        None => WaveformKind::Lfm,
        Some((line, v)) => v.parse().or_else(|m: String| err(line, "radar.waveform", m))?,
    };
    let chips = e.at_least_one("radar.chips", e.usize("radar.chips")?.unwrap_or(64))?;
    let tx_power = e.positive("radar.tx_power", e.f64("radar.tx_power")?.unwrap_or(1.0))?;
    let tx_gain = e.non_negative("radar.tx_gain", e.f64("radar.tx_gain")?.unwrap_or(1.0))?;
    let rx_gain = e.non_negative("radar.rx_gain", e.f64("radar.rx_gain")?.unwrap_or(1.0))?;
    let noise_power = e.non_negative("radar.noise_power", e.f64("radar.noise_power")?.unwrap_or(0.0))?;
    let radar = RadarParams {
        carrier,
        bandwidth,
        sample_rate,
        prf,
        pulses,
        channels,
        cpis,
        cpi_interval,
        swath,
        near_range,
        pulse_width,
        waveform,
        chips,
        tx_power,
        tx_gain,
        rx_gain,
        noise_power,
    };

    let tx = e.platform("tx")?.map_or_else(|| err(0, "tx.position", "missing required key"), Ok)?;
    let rx = e.platform("rx")?;

    let spacing = match e.f64("antenna.spacing")? {
        Some(v) => Some(e.positive("antenna.spacing", v)?),
        None => None,
    };
    let default_axis = if tx.velocity.norm() > 0.0 { tx.velocity } else { Vec3::x() };
    let axis = e.unit("antenna.axis", e.vec3("antenna.axis")?.unwrap_or(default_axis))?;
    let boresight = e.unit("antenna.boresight", e.vec3("antenna.boresight")?.unwrap_or(Vec3::y()))?;
    let beam = match e.vec3("antenna.beam")? {
        Some(b) => Some(e.unit("antenna.beam", b)?),
        None => None,
    };
    let antenna = AntennaParams {
        spacing,
        axis,
        boresight,
        cos_exponent: e.non_negative("antenna.cos_exponent", e.f64("antenna.cos_exponent")?.unwrap_or(1.0))?,
        tx_elements: e.at_least_one("antenna.tx_elements", e.usize("antenna.tx_elements")?.unwrap_or(1))?,
        beam,
    };

    let cell_size = e.positive("terrain.cell_size", e.f64("terrain.cell_size")?.unwrap_or(30.0))?;
    let patch_size = e.positive("terrain.patch_size", e.f64("terrain.patch_size")?.unwrap_or(cell_size))?;
    if patch_size < cell_size {
        return err(e.line("terrain.patch_size"), "terrain.patch_size", "must be at least terrain.cell_size");
    }
    let origin = match e.raw("terrain.origin") {
        None => GeoPoint { lat_deg: 0.0, lon_deg: 0.0 },
        Some((line, v)) => {
            let nums: Vec<f64> = v.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().or_else(|_| err(line, "terrain.origin", "expected LAT LON"))?;
            if nums.len() != 2 {
                return err(line, "terrain.origin", "expected LAT LON");
            }
            GeoPoint { lat_deg: nums[0], lon_deg: nums[1] }
        }
    };
    let terrain = TerrainParams {
        dem: e.raster("terrain.dem", RasterSource::Synthetic("flat".into()), false)?,
        landcover: e.raster("terrain.landcover", RasterSource::Uniform(LandCover::Grass), true)?,
        rows: e.at_least_one("terrain.rows", e.usize("terrain.rows")?.unwrap_or(64))?,
        cols: e.at_least_one("terrain.cols", e.usize("terrain.cols")?.unwrap_or(64))?,
        cell_size,
        patch_size,
        relief: e.non_negative("terrain.relief", e.f64("terrain.relief")?.unwrap_or(100.0))?,
        origin,
    };

    let scattering_table = e.path("scattering.table")?;
    let phase_mode = match e.raw("clutter.phase_mode") {
        None | Some((_, "random")) => PhaseMode::Random,
        Some((_, "deterministic")) => PhaseMode::Deterministic,
        Some((line, v)) => return err(line, "clutter.phase_mode", format!("expected `random` or `deterministic`, found `{v}`")),
    };
    let clutter = ClutterParams {
        phase_mode,
        doppler_jitter: e.non_negative("clutter.doppler_jitter", e.f64("clutter.doppler_jitter")?.unwrap_or(0.0))?,
    };
    let d = OceanParams::default();
    let ocean = OceanParams {
        wind_speed: e.non_negative("ocean.wind_speed", e.f64("ocean.wind_speed")?.unwrap_or(d.wind_speed))?,
        wind_direction: e.f64("ocean.wind_direction")?.unwrap_or(d.wind_direction),
        kappa: e.non_negative("ocean.kappa", e.f64("ocean.kappa")?.unwrap_or(d.kappa))?,
        correlation_time: e.positive("ocean.correlation_time", e.f64("ocean.correlation_time")?.unwrap_or(d.correlation_time))?,
        amplitude_sigma_per_wind: e.non_negative("ocean.amplitude_sigma", e.f64("ocean.amplitude_sigma")?.unwrap_or(d.amplitude_sigma_per_wind))?,
    };

    let mut targets = Vec::new();
    for i in e.targets.keys() {
        let pk = format!("target.{i}.position");
        let rk = format!("target.{i}.rcs");
        let vk = format!("target.{i}.velocity");
        let position = e.req_vec3(&pk)?;
        let rcs = e.non_negative(&rk, e.req_f64(&rk)?)?;
        targets.push(TargetSpec { position, velocity: e.vec3(&vk)?.unwrap_or_else(Vec3::zeros), rcs });
    }
    let mut discretes = Vec::new();
    for i in e.discretes.keys() {
        let pk = format!("discrete.{i}.position");
        let rk = format!("discrete.{i}.rcs");
        let bk = format!("discrete.{i}.building");
        let position = e.req_vec3(&pk)?;
        let kind = match (e.f64(&rk)?, e.vec3(&bk)?) {
            (Some(rcs), None) => DiscreteKind::Point { rcs: e.non_negative(&rk, rcs)? },
            (None, Some(b)) => {
                if b.iter().any(|x| *x <= 0.0) {
                    return err(e.line(&bk), &bk, "building dimensions must be positive");
                }
                DiscreteKind::Building { width: b.x, length: b.y, height: b.z }
            }
            (Some(_), Some(_)) => return err(e.line(&bk), &bk, format!("set only one of {rk} and {bk}")),
            (None, None) => return err(e.line(&pk), &rk, "discrete needs rcs or building"),
        };
        discretes.push(DiscreteSpec { position, kind });
    }

    Ok(Scenario {
        name: e.raw("scenario.name").map_or("scenario".to_string(), |(_, v)| v.to_string()),
        seed: e.get("seed.master", "an unsigned integer")?.unwrap_or(0),
        radar,
        antenna,
        tx,
        rx,
        terrain,
        scattering_table,
        clutter,
        ocean,
        targets,
        discretes,
    })
}

/// Parse scenario text with file references relative to the working directory.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_in(text, Path::new("."))
}

/// Load a scenario file; file references resolve against its directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario_in(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "radar.carrier = 1e10\nradar.bandwidth = 5e6\nradar.prf = 2100\nradar.pulses = 65\ntx.position = 0 0 1000\n";

    #[test]
    fn minimal_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.radar.sample_rate, 1e7);
        assert_eq!(s.radar.channels, 1);
        assert_eq!(s.radar.cpis, 1);
        assert_eq!(s.radar.swath, 20_000.0);
        assert_eq!(s.rx, None);
        assert_eq!(s.terrain.landcover, RasterSource::Uniform(LandCover::Grass));
        assert!(s.targets.is_empty());
    }

    #[test]
    fn errors_name_key_and_line() {
        let text = MINIMAL.replace("radar.prf = 2100", "radar.prf = -5");
        match parse_scenario(&text) {
            Err(Error::Scenario { line, key, .. }) => {
                assert_eq!(key, "radar.prf");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}radar.colour = red\n");
        assert!(matches!(parse_scenario(&text), Err(Error::Scenario { line: 6, .. })));
        let text = MINIMAL.replace("radar.pulses = 65", "radar.pulses = many");
        assert!(matches!(parse_scenario(&text), Err(Error::Scenario { ref key, .. }) if key == "radar.pulses"));
        let text = MINIMAL.replace("radar.carrier = 1e10\n", "");
        assert!(matches!(parse_scenario(&text), Err(Error::Scenario { ref key, .. }) if key == "radar.carrier"));
        let text = format!("{MINIMAL}terrain.dem = /no/such/file.dem\n");
        assert!(matches!(parse_scenario(&text), Err(Error::Scenario { ref key, .. }) if key == "terrain.dem"));
    }

    #[test]
    fn canonical_round_trip_and_hash() {
        let text = format!("{MINIMAL}tx.velocity = 125 0 0\ntarget.3.position = 10 20 0\ntarget.3.rcs = 5\ndiscrete.1.position = 0 1 0\ndiscrete.1.building = 30 30 6\n");
        let s = parse_scenario(&text).unwrap();
        let canon = s.to_text();
        let again = parse_scenario(&canon).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_text(), canon);
        let spaced = text.replace(" = ", "   =   ").replace('\n', "\n\n");
        assert_eq!(parse_scenario(&spaced).unwrap().hash(), s.hash());
        let changed = text.replace("target.3.rcs = 5", "target.3.rcs = 5.5");
        assert_ne!(parse_scenario(&changed).unwrap().hash(), s.hash());
    }
}
