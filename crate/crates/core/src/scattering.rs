//! Normalized backscatter per land-cover class and band, and the per-patch
//! received power scale of the radar range equation.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::terrain::LandCover;

/// Radar frequency band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    L,
    S,
    C,
    X,
    Ku,
    Ka,
}

impl Band {
    pub const ALL: [Band; 6] = [Band::L, Band::S, Band::C, Band::X, Band::Ku, Band::Ka];

    /// Band containing the carrier frequency (IEEE letter designations).
    pub fn from_carrier(hz: f64) -> Result<Band> {
        let ghz = hz / 1e9;
        Ok(match ghz {
            g if (1.0..2.0).contains(&g) => Band::L,
            g if (2.0..4.0).contains(&g) => Band::S,
            g if (4.0..8.0).contains(&g) => Band::C,
            g if (8.0..12.0).contains(&g) => Band::X,
            g if (12.0..18.0).contains(&g) => Band::Ku,
            g if (26.5..40.0).contains(&g) => Band::Ka,
            _ => return domain(format!("no band table for carrier {hz} Hz")),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::L => "L",
            Band::S => "S",
            Band::C => "C",
            Band::X => "X",
            Band::Ku => "Ku",
            Band::Ka => "Ka",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Band> {
        Band::ALL
            .iter()
            .copied()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown band `{s}`")))
    }
}

/// One table row. When `poly` is non-empty σ⁰ in dB is `Σ poly[k]·ψᵏ`
/// (ψ the grazing angle in radians) and `gamma_db` is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringEntry {
    pub gamma_db: f64,
    pub poly: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScatteringTable {
    entries: BTreeMap<(LandCover, Band), ScatteringEntry>,
}

/// Shipped constant-γ values in dB. Configuration defaults, not measurements.
const DEFAULT_GAMMA_DB: [(LandCover, f64); 7] = [
    (LandCover::Water, -35.0),
    (LandCover::Bare, -20.0),
    (LandCover::Grass, -15.0),
    (LandCover::Shrub, -13.0),
    (LandCover::Forest, -10.0),
    (LandCover::Urban, -5.0),
    (LandCover::Building, 5.0),
];

impl ScatteringTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Constant-γ defaults for every class, identical in every band.
    pub fn default_constant_gamma() -> Self {
        let mut t = Self::new();
        for band in Band::ALL {
            for (class, g) in DEFAULT_GAMMA_DB {
                t.insert(class, band, ScatteringEntry { gamma_db: g, poly: Vec::new() });
            }
        }
        t
    }

    pub fn insert(&mut self, class: LandCover, band: Band, entry: ScatteringEntry) {
        self.entries.insert((class, band), entry);
    }

    pub fn entry(&self, class: LandCover, band: Band) -> Result<&ScatteringEntry> {
        self.entries
            .get(&(class, band))
            .ok_or_else(|| Error::Config(format!("no scattering entry for class {class} in band {band}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse `class band gamma_db [p0 p1 ...]` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: String| Error::Config(format!("scattering table line {}: {msg}", no + 1));
            if fields.len() < 3 {
                return Err(bad("expected `class band gamma_db [coefficients]`".into()));
            }
            let class: LandCover = fields[0].parse().map_err(|e: Error| bad(e.to_string()))?;
            let band: Band = fields[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let nums = fields[2..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(format!("`{f}` is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite value".into()));
            }
            t.insert(class, band, ScatteringEntry { gamma_db: nums[0], poly: nums[1..].to_vec() });
        }
        Ok(t)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((class, band), e) in &self.entries {
            out.push_str(&format!("{class} {band} {}", e.gamma_db));
            for p in &e.poly {
                out.push_str(&format!(" {p}"));
            }
            out.push('\n');
        }
        out
    }

    /// Normalized backscatter σ⁰ (linear) at grazing angle `grazing` (rad).
    pub fn sigma0(&self, class: LandCover, band: Band, grazing: f64) -> Result<f64> {
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&grazing) {
            return domain(format!("grazing angle {grazing} outside [0, π/2]"));
        }
        let e = self.entry(class, band)?;
        if e.poly.is_empty() {
            Ok((db_to_linear(e.gamma_db) * grazing.sin()).max(0.0))
        } else {
            let db = e.poly.iter().rev().fold(0.0, |acc, &p| acc * grazing + p);
            Ok(db_to_linear(db))
        }
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Reflectivity realized for one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchReflectivity {
    pub patch_id: usize,
    pub sigma0: f64,
    pub rcs: f64,
    pub power_scale: f64,
}

impl PatchReflectivity {
    pub fn amplitude_std(&self) -> f64 {
        self.power_scale.sqrt()
    }
}

/// Inputs to [`patch_power_scale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub sigma0: f64,
    pub area: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub wavelength: f64,
    pub range_tx: f64,
    pub range_rx: f64,
    pub shadowed: bool,
}

/// Bistatic range equation `Gt·Gr·λ²·σ⁰·A / ((4π)³·Rt²·Rr²)`; zero when shadowed.
pub fn patch_power_scale(link: &LinkBudget) -> Result<f64> {
    if !(link.range_tx > 0.0) || !(link.range_rx > 0.0) {
        return domain("ranges must be positive");
    }
    if link.tx_gain < 0.0 || link.rx_gain < 0.0 {
        return domain("antenna gains must be non-negative");
    }
    if link.shadowed {
        return Ok(0.0);
    }
    let four_pi_cubed = (4.0 * PI).powi(3);
    let rest = link.rx_gain * link.wavelength * link.wavelength * link.sigma0 * link.area
        / (four_pi_cubed * link.range_tx.powi(2) * link.range_rx.powi(2));
    Ok(link.tx_gain * rest)
}
