//! Challenge-style dataset export: one cube and one pair of truth impulse
//! responses per CPI, the waveform, the scenario text and a manifest with a
//! SHA-256 digest of every payload file.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::channel::{ChannelKind, ImpulseResponse};
use crate::error::{Error, Result};
use crate::formats;
use crate::num::Real;
use crate::rxsim::DataCube;
use crate::waveform::Waveform;

use super::scene::Simulation;
use super::Scenario;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MANIFEST_FORMAT: &str = "rfclutter-challenge-1";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub scenario_name: String,
    pub scenario_hash: String,
    pub seed: u64,
    /// `(cpis, channels, pulses, range bins)`
    pub dims: (usize, usize, usize, usize),
    pub sample_rate: f64,
    pub prf: f64,
    pub delay_origin: f64,
    pub carrier: f64,
    pub noise_power: f64,
    /// `(file name, sha256 hex)` in write order.
    pub files: Vec<(String, String)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let (k, n, m, r) = self.dims;
        let mut o = format!(
            "format = {MANIFEST_FORMAT}\nscenario = {}\nscenario_hash = {}\nseed = {}\ndims = {k} {n} {m} {r}\nsample_rate = {}\nprf = {}\ndelay_origin = {}\ncarrier = {}\nnoise_power = {}\n",
            self.scenario_name, self.scenario_hash, self.seed, self.sample_rate, self.prf, self.delay_origin, self.carrier, self.noise_power
        );
        for (name, digest) in &self.files {
            o.push_str(&format!("file.{name} = {digest}\n"));
        }
        o
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |m: String| Error::Format { path: path.to_path_buf(), message: m };
        let mut kv = std::collections::BTreeMap::new();
        let mut files = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad manifest line `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(name) = k.strip_prefix("file.") {
                files.push((name.to_string(), v.to_string()));
            } else {
                kv.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| kv.get(k).cloned().ok_or_else(|| bad(format!("manifest lacks `{k}`")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| bad(format!("bad `{k}`"))) };
        if get("format")? != MANIFEST_FORMAT {
            return Err(bad("unsupported manifest format".into()));
        }
        let dims: Vec<usize> = get("dims")?.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad("bad `dims`".into()))?;
        if dims.len() != 4 {
            return Err(bad("`dims` needs four values".into()));
        }
        Ok(Manifest {
            scenario_name: get("scenario")?,
            scenario_hash: get("scenario_hash")?,
            seed: get("seed")?.parse().map_err(|_| bad("bad `seed`".into()))?,
            dims: (dims[0], dims[1], dims[2], dims[3]),
            sample_rate: num("sample_rate")?,
            prf: num("prf")?,
            delay_origin: num("delay_origin")?,
            carrier: num("carrier")?,
            noise_power: num("noise_power")?,
            files,
        })
    }
}

/// In-memory contents of an exported challenge directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Challenge {
    pub manifest: Manifest,
    pub scenario_text: String,
    pub waveform: Waveform<f32>,
    /// One single-CPI cube per CPI.
    pub cubes: Vec<DataCube<f32>>,
    pub clutter: Vec<ImpulseResponse<f32>>,
    pub target: Vec<ImpulseResponse<f32>>,
}

impl Challenge {
    /// Convert a finished simulation into the exported representation.
    pub fn from_simulation<T: Real>(scenario: &Scenario, sim: &Simulation<T>) -> Result<Self> {
        let (k, n, m, r) = sim.cube.dims();
        let cube = sim.cube.cast::<f32>();
        let cubes = (0..k)
            .map(|i| DataCube { samples: cube.samples.slice(ndarray::s![i..i + 1, .., .., ..]).to_owned(), ..cube.clone() })
            .collect();
        Ok(Challenge {
            manifest: Manifest {
                scenario_name: scenario.name.clone(),
                scenario_hash: scenario.hash(),
                seed: scenario.seed,
                dims: (k, n, m, r),
                sample_rate: sim.timing.sample_rate,
                prf: sim.timing.prf,
                delay_origin: sim.timing.delay_origin,
                carrier: scenario.radar.carrier,
                noise_power: scenario.radar.noise_power,
                files: Vec::new(),
            },
            scenario_text: scenario.to_text(),
            waveform: sim.waveform.cast(),
            cubes,
            clutter: sim.channels.iter().map(|c| c.clutter.cast()).collect(),
            target: sim.channels.iter().map(|c| c.target.cast()).collect(),
        })
    }

    /// Full cube `[cpi][channel][pulse][range]`.
    pub fn stacked_cube(&self) -> Result<DataCube<f32>> {
        DataCube::stack(&self.cubes)
    }
}

fn cube_name(k: usize) -> String {
    format!("cube_{k:03}.rfcube")
}
fn clutter_name(k: usize) -> String {
    format!("clutter_ir_{k:03}.rfgir")
}
fn target_name(k: usize) -> String {
    format!("target_ir_{k:03}.rfgir")
}
const SCENARIO_FILE: &str = "scenario.txt";
const WAVEFORM_FILE: &str = "waveform.rfwav";

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Planned manifest dimensions of a scenario, without simulating it.
pub fn planned_dims(s: &Scenario) -> (usize, usize, usize, usize) {
    s.cube_dims()
}

/// Write a challenge directory; returns the manifest that was written.
pub fn write_challenge(dir: &Path, ch: &Challenge) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut payloads: Vec<(String, Vec<u8>)> = Vec::new();
    payloads.push((SCENARIO_FILE.into(), ch.scenario_text.as_bytes().to_vec()));
    let mut buf = Vec::new();
    formats::write_waveform(&ch.waveform, &mut buf)?;
    payloads.push((WAVEFORM_FILE.into(), buf));
    for (k, cube) in ch.cubes.iter().enumerate() {
        let mut buf = Vec::new();
        formats::write_cube(cube, &mut buf)?;
        payloads.push((cube_name(k), buf));
        let mut buf = Vec::new();
        formats::write_ir(&ch.clutter[k], &mut buf)?;
        payloads.push((clutter_name(k), buf));
        let mut buf = Vec::new();
        formats::write_ir(&ch.target[k], &mut buf)?;
        payloads.push((target_name(k), buf));
    }
    let mut manifest = ch.manifest.clone();
    manifest.files = payloads.iter().map(|(n, b)| (n.clone(), digest(b))).collect();
    for (name, bytes) in &payloads {
        fs::write(dir.join(name), bytes)?;
    }
    fs::write(dir.join(MANIFEST_FILE), manifest.to_text())?;
    Ok(manifest)
}

/// Simulate-and-export convenience.
pub fn export_challenge<T: Real>(dir: &Path, scenario: &Scenario, sim: &Simulation<T>) -> Result<Manifest> {
    write_challenge(dir, &Challenge::from_simulation(scenario, sim)?)
}

fn verified(dir: &Path, manifest: &Manifest, name: &str) -> Result<Vec<u8>> {
    let expected = manifest
        .files
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, d)| d.clone())
        .ok_or_else(|| Error::Format { path: dir.join(MANIFEST_FILE), message: format!("manifest does not list {name}") })?;
    let path: PathBuf = dir.join(name);
    let bytes = fs::read(&path)?;
    let actual = digest(&bytes);
    if actual != expected {
        return Err(Error::HashMismatch { path, expected, actual });
    }
    Ok(bytes)
}

/// Read and verify a challenge directory.
pub fn read_challenge(dir: &Path) -> Result<Challenge> {
    let mpath = dir.join(MANIFEST_FILE);
    let manifest = Manifest::parse(&fs::read_to_string(&mpath)?, &mpath)?;
    let scenario_text = String::from_utf8(verified(dir, &manifest, SCENARIO_FILE)?).map_err(|_| Error::Format { path: dir.join(SCENARIO_FILE), message: "not UTF-8".into() })?;
    let waveform = formats::read_waveform(verified(dir, &manifest, WAVEFORM_FILE)?.as_slice(), WAVEFORM_FILE)?;
    let (k, n, m, r) = manifest.dims;
    let mut cubes = Vec::with_capacity(k);
    let mut clutter = Vec::with_capacity(k);
    let mut target = Vec::with_capacity(k);
    for i in 0..k {
        let cube = formats::read_cube(verified(dir, &manifest, &cube_name(i))?.as_slice(), &cube_name(i))?;
        if cube.dims() != (1, n, m, r) {
            return Err(Error::Format { path: dir.join(cube_name(i)), message: format!("dims {:?} disagree with manifest", cube.dims()) });
        }
        cubes.push(cube);
        clutter.push(formats::read_ir(verified(dir, &manifest, &clutter_name(i))?.as_slice(), &clutter_name(i), ChannelKind::Clutter)?);
        target.push(formats::read_ir(verified(dir, &manifest, &target_name(i))?.as_slice(), &target_name(i), ChannelKind::Target)?);
    }
    let mut manifest = manifest;
    manifest.files.clear();
    Ok(Challenge { manifest, scenario_text, waveform, cubes, clutter, target })
}
