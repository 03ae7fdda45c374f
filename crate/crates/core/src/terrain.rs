//! Scene geometry: elevation rasters, patch grids, grazing angles and
//! terrain line-of-sight.
//!
//! Local coordinates are east-north-up metres with the origin at the
//! south-west corner of the raster. Row 0 of every raster is the northern
//! edge. Cell `(r, c)` is centred at `((c + ½)·cell, (nrows − r − ½)·cell)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{config, domain, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Mean earth radius used by the equirectangular projection (m).
pub const EARTH_RADIUS: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    /// Equirectangular projection of `p` into this point's local east/north plane.
    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        let east = EARTH_RADIUS * (p.lon_deg - self.lon_deg).to_radians() * self.lat_deg.to_radians().cos();
        let north = EARTH_RADIUS * (p.lat_deg - self.lat_deg).to_radians();
        (east, north)
    }

    pub fn from_local(&self, east: f64, north: f64) -> GeoPoint {
        GeoPoint {
            lat_deg: self.lat_deg + (north / EARTH_RADIUS).to_degrees(),
            lon_deg: self.lon_deg + (east / (EARTH_RADIUS * self.lat_deg.to_radians().cos())).to_degrees(),
        }
    }
}

/// Land-cover classes carried by the scene rasters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LandCover {
    Water = 0,
    Bare = 1,
    Grass = 2,
    Shrub = 3,
    Forest = 4,
    Urban = 5,
    Building = 6,
}

impl LandCover {
    pub const ALL: [LandCover; 7] = [
        LandCover::Water,
        LandCover::Bare,
        LandCover::Grass,
        LandCover::Shrub,
        LandCover::Forest,
        LandCover::Urban,
        LandCover::Building,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Result<Self> {
        LandCover::ALL
            .iter()
            .copied()
            .find(|c| i64::from(c.code()) == code)
            .ok_or_else(|| Error::Config(format!("unknown land-cover code {code}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            LandCover::Water => "water",
            LandCover::Bare => "bare",
            LandCover::Grass => "grass",
            LandCover::Shrub => "shrub",
            LandCover::Forest => "forest",
            LandCover::Urban => "urban",
            LandCover::Building => "building",
        }
    }
}

impl fmt::Display for LandCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LandCover {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(code) = s.parse::<i64>() {
            return LandCover::from_code(code);
        }
        LandCover::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown land-cover class `{s}`")))
    }
}

/// Regular height raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    pub origin: GeoPoint,
    pub cell_size: f64,
    pub nrows: usize,
    pub ncols: usize,
    heights: Vec<f64>,
}

impl ElevationGrid {
    pub fn new(origin: GeoPoint, cell_size: f64, nrows: usize, ncols: usize, heights: Vec<f64>) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return config("elevation grid needs at least one row and column");
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return config(format!("cell size must be positive, got {cell_size}"));
        }
        if heights.len() != nrows * ncols {
            return config(format!("expected {} heights, got {}", nrows * ncols, heights.len()));
        }
        if let Some(i) = heights.iter().position(|h| !h.is_finite()) {
            return config(format!("non-finite height at index {i}"));
        }
        Ok(ElevationGrid { origin, cell_size, nrows, ncols, heights })
    }

    pub fn flat(cell_size: f64, nrows: usize, ncols: usize, height: f64) -> Result<Self> {
        Self::from_fn(cell_size, nrows, ncols, |_, _| height)
    }

    /// Build a grid from a height function of the cell-centre coordinates (x, y).
    pub fn from_fn(cell_size: f64, nrows: usize, ncols: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut heights = Vec::with_capacity(nrows * ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                let x = (c as f64 + 0.5) * cell_size;
                let y = (nrows as f64 - r as f64 - 0.5) * cell_size;
                heights.push(f(x, y));
            }
        }
        Self::new(GeoPoint { lat_deg: 0.0, lon_deg: 0.0 }, cell_size, nrows, ncols, heights)
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn heights_mut(&mut self) -> &mut [f64] {
        &mut self.heights
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.ncols + col]
    }

    /// East and north extent in metres.
    pub fn extent(&self) -> (f64, f64) {
        (self.ncols as f64 * self.cell_size, self.nrows as f64 * self.cell_size)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.cell_size,
            (self.nrows as f64 - row as f64 - 0.5) * self.cell_size,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (w, h) = self.extent();
        let tol = 1e-9 * self.cell_size;
        x >= -tol && x <= w + tol && y >= -tol && y <= h + tol
    }

    /// Cell containing `(x, y)`, clamped to the raster.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let col = ((x / self.cell_size).floor().max(0.0) as usize).min(self.ncols - 1);
        let row_from_south = ((y / self.cell_size).floor().max(0.0) as usize).min(self.nrows - 1);
        (self.nrows - 1 - row_from_south, col)
    }

    /// Bilinear height between cell centres; the outer half-cell border
    /// holds the edge value.
    pub fn height(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return domain(format!("point ({x:.3}, {y:.3}) outside the elevation grid"));
        }
        Ok(self.height_unchecked(x, y))
    }

    pub(crate) fn height_unchecked(&self, x: f64, y: f64) -> f64 {
        let u = x / self.cell_size - 0.5;
        let v = (self.nrows as f64 * self.cell_size - y) / self.cell_size - 0.5;
        let (c0, tu) = lattice(u, self.ncols);
        let (r0, tv) = lattice(v, self.nrows);
        let c1 = (c0 + 1).min(self.ncols - 1);
        let r1 = (r0 + 1).min(self.nrows - 1);
        let top = self.at(r0, c0) * (1.0 - tu) + self.at(r0, c1) * tu;
        let bottom = self.at(r1, c0) * (1.0 - tu) + self.at(r1, c1) * tu;
        top * (1.0 - tv) + bottom * tv
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Lower lattice index and fractional offset along one axis.
#[inline]
fn lattice(u: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let u = u.clamp(0.0, (n - 1) as f64);
    let i = (u.floor() as usize).min(n - 2);
    (i, u - i as f64)
}

/// Land-cover raster co-registered with an [`ElevationGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct LandCoverGrid {
    pub nrows: usize,
    pub ncols: usize,
    pub cell_size: f64,
    classes: Vec<LandCover>,
}

impl LandCoverGrid {
    pub fn new(cell_size: f64, nrows: usize, ncols: usize, classes: Vec<LandCover>) -> Result<Self> {
        if classes.len() != nrows * ncols {
            return config(format!("expected {} land-cover cells, got {}", nrows * ncols, classes.len()));
        }
        Ok(LandCoverGrid { nrows, ncols, cell_size, classes })
    }

    pub fn uniform(dem: &ElevationGrid, class: LandCover) -> Self {
        LandCoverGrid {
            nrows: dem.nrows,
            ncols: dem.ncols,
            cell_size: dem.cell_size,
            classes: vec![class; dem.nrows * dem.ncols],
        }
    }

    pub fn from_fn(dem: &ElevationGrid, f: impl Fn(f64, f64) -> LandCover) -> Self {
        let mut classes = Vec::with_capacity(dem.nrows * dem.ncols);
        for r in 0..dem.nrows {
            for c in 0..dem.ncols {
                let (x, y) = dem.cell_center(r, c);
                classes.push(f(x, y));
            }
        }
        LandCoverGrid { nrows: dem.nrows, ncols: dem.ncols, cell_size: dem.cell_size, classes }
    }

    pub fn at(&self, row: usize, col: usize) -> LandCover {
        self.classes[row * self.ncols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, class: LandCover) {
        self.classes[row * self.ncols + col] = class;
    }

    pub fn classes(&self) -> &[LandCover] {
        &self.classes
    }
}

/// One terrain cell of the scene (or an aggregate of cells).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePatch {
    pub patch_id: usize,
    pub center: Vec3,
    pub normal: Vec3,
    pub area: f64,
    pub landcover: LandCover,
}

impl ScenePatch {
    pub fn new(patch_id: usize, center: Vec3, normal: Vec3, area: f64, landcover: LandCover) -> Result<Self> {
        if ((normal.norm() - 1.0).abs()) > 1e-9 {
            return domain(format!("patch {patch_id}: normal is not unit length"));
        }
        if !(area > 0.0) {
            return domain(format!("patch {patch_id}: area must be positive"));
        }
        Ok(ScenePatch { patch_id, center, normal, area, landcover })
    }

    /// Flat horizontal patch.
    pub fn flat(patch_id: usize, center: Vec3, area: f64, landcover: LandCover) -> Self {
        ScenePatch { patch_id, center, normal: Vec3::z(), area, landcover }
    }
}

/// Position and velocity of a radar platform (or any mover).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl PlatformState {
    pub fn new(position: Vec3, velocity: Vec3) -> Result<Self> {
        if position.z < 0.0 {
            return domain("platform altitude must be non-negative");
        }
        Ok(PlatformState { position, velocity })
    }

    pub fn stationary(position: Vec3) -> Self {
        PlatformState { position, velocity: Vec3::zeros() }
    }

    /// State after moving for `dt` seconds at constant velocity.
    pub fn advanced(&self, dt: f64) -> Self {
        PlatformState { position: self.position + self.velocity * dt, velocity: self.velocity }
    }
}

/// Number of patches along an axis of length `extent`.
pub fn patch_count(extent: f64, patch_size: f64) -> usize {
    ((extent / patch_size) - 1e-9).ceil().max(1.0) as usize
}

/// Aggregate the rasters into square patches of side `patch_size`.
///
/// Heights are sampled bilinearly at patch centres; normals come from
/// central differences over the patch lattice (one-sided on the border).
/// The last patch along an axis may be partial; its footprint is clipped to
/// the raster extent.
pub fn build_patch_grid(dem: &ElevationGrid, landcover: &LandCoverGrid, patch_size: f64) -> Result<Vec<ScenePatch>> {
    if landcover.nrows != dem.nrows || landcover.ncols != dem.ncols {
        return config(format!(
            "land-cover raster is {}x{}, elevation raster is {}x{}",
            landcover.nrows, landcover.ncols, dem.nrows, dem.ncols
        ));
    }
    if !(patch_size >= dem.cell_size * (1.0 - 1e-12)) {
        return config(format!("patch size {patch_size} is smaller than the cell size {}", dem.cell_size));
    }
    let (width, height) = dem.extent();
    let ncols = patch_count(width, patch_size);
    let nrows = patch_count(height, patch_size);

    // Column spans west to east, row spans north to south.
    let cols: Vec<(f64, f64)> = (0..ncols)
        .map(|j| (j as f64 * patch_size, ((j + 1) as f64 * patch_size).min(width)))
        .collect();
    let rows: Vec<(f64, f64)> = (0..nrows)
        .map(|i| ((height - ((i + 1) as f64 * patch_size)).max(0.0), height - i as f64 * patch_size))
        .collect();
    let xc: Vec<f64> = cols.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let yc: Vec<f64> = rows.iter().map(|(a, b)| 0.5 * (a + b)).collect();

    let z: Vec<f64> = (0..nrows * ncols)
        .into_par_iter()
        .map(|k| dem.height_unchecked(xc[k % ncols], yc[k / ncols]))
        .collect();

    let patches = (0..nrows * ncols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / ncols, k % ncols);
            let (jl, jr) = (j.saturating_sub(1), (j + 1).min(ncols - 1));
            let (iu, id) = (i.saturating_sub(1), (i + 1).min(nrows - 1));
            let dzdx = if jr > jl { (z[i * ncols + jr] - z[i * ncols + jl]) / (xc[jr] - xc[jl]) } else { 0.0 };
            let dzdy = if id > iu { (z[iu * ncols + j] - z[id * ncols + j]) / (yc[iu] - yc[id]) } else { 0.0 };
            let normal = Vec3::new(-dzdx, -dzdy, 1.0).normalize();
            let footprint = (cols[j].1 - cols[j].0) * (rows[i].1 - rows[i].0);
            let (r, c) = dem.cell_of(xc[j], yc[i]);
            ScenePatch {
                patch_id: k,
                center: Vec3::new(xc[j], yc[i], z[k]),
                normal,
                area: footprint / normal.z,
                landcover: landcover.at(r, c),
            }
        })
        .collect();
    Ok(patches)
}

/// Angle between the patch→observer line of sight and the patch's local
/// horizontal plane, in `[−π/2, π/2]`.
pub fn grazing_angle(patch: &ScenePatch, observer: &Vec3) -> Result<f64> {
    let los = observer - patch.center;
    let range = los.norm();
    if range <= 0.0 {
        return domain(format!("observer coincides with patch {}", patch.patch_id));
    }
    Ok((los.dot(&patch.normal) / range).clamp(-1.0, 1.0).asin())
}

/// Heights along the ground projection of `a → b`, as `(distance, height)`.
///
/// The segment is split into `⌈d/step⌉` equal intervals so that the sample
/// spacing never exceeds `step` and both endpoints are included.
pub fn terrain_profile(dem: &ElevationGrid, a: &Vec3, b: &Vec3, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0) {
        return domain(format!("profile step must be positive, got {step}"));
    }
    for p in [a, b] {
        if !dem.contains(p.x, p.y) {
            return domain(format!("point ({:.3}, {:.3}) outside the elevation grid", p.x, p.y));
        }
    }
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let dist = dx.hypot(dy);
    let n = intervals(dist, step);
    Ok((0..=n)
        .map(|k| {
            let t = if n == 0 { 0.0 } else { k as f64 / n as f64 };
            (t * dist, dem.height_unchecked(a.x + t * dx, a.y + t * dy))
        })
        .collect())
}

#[inline]
fn intervals(dist: f64, step: f64) -> usize {
    if dist <= 0.0 {
        0
    } else {
        (dist / step - 1e-12).ceil().max(1.0) as usize
    }
}

/// Terrain samples exceeding the ray by more than this are blocking.
const LOS_TOLERANCE: f64 = 1e-9;

/// True when no interior terrain sample (spacing `cell_size/2`) rises above
/// the straight ray from the observer to the patch centre.
pub fn line_of_sight(dem: &ElevationGrid, observer: &Vec3, patch: &ScenePatch) -> Result<bool> {
    line_of_sight_between(dem, observer, &patch.center)
}

/// Point-to-point form of [`line_of_sight`]. Both points must lie inside the
/// raster extent.
pub fn line_of_sight_between(dem: &ElevationGrid, a: &Vec3, b: &Vec3) -> Result<bool> {
    for p in [a, b] {
        if !dem.contains(p.x, p.y) {
            return domain(format!("point ({:.3}, {:.3}) outside the elevation grid", p.x, p.y));
        }
    }
    Ok(segment_clear(dem, a, b))
}

/// Like [`line_of_sight_between`], but terrain outside the raster never
/// blocks; the ground track is clipped to the raster before sampling.
pub fn line_of_sight_clipped(dem: &ElevationGrid, a: &Vec3, b: &Vec3) -> bool {
    segment_clear(dem, a, b)
}

fn segment_clear(dem: &ElevationGrid, a: &Vec3, b: &Vec3) -> bool {
    // Canonical endpoint order makes the test exactly symmetric.
    let (a, b) = if (a.x, a.y, a.z) <= (b.x, b.y, b.z) { (a, b) } else { (b, a) };
    let (w, h) = dem.extent();
    let d = b - a;
    let Some((t0, t1)) = clip_unit_segment(a.x, a.y, d.x, d.y, w, h) else {
        return true;
    };
    let dist = d.x.hypot(d.y);
    let step = dem.cell_size / 2.0;
    let n = intervals(dist * (t1 - t0), step);
    if n == 0 {
        return true;
    }
    (0..=n).all(|k| {
        let t = t0 + (t1 - t0) * (k as f64 / n as f64);
        if t <= 0.0 || t >= 1.0 {
            return true;
        }
        let ray = a.z + d.z * t;
        dem.height_unchecked(a.x + d.x * t, a.y + d.y * t) <= ray + LOS_TOLERANCE
    })
}

/// Liang–Barsky clip of `p + t·d, t ∈ [0, 1]` against `[0, w] × [0, h]`.
fn clip_unit_segment(px: f64, py: f64, dx: f64, dy: f64, w: f64, h: f64) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, px), (dx, w - px), (-dy, py), (dy, h - py)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Line-of-sight flag for every patch, in patch order.
pub fn los_map(dem: &ElevationGrid, observer: &Vec3, patches: &[ScenePatch]) -> Vec<bool> {
    patches
        .par_iter()
        .map(|p| line_of_sight_clipped(dem, observer, &p.center))
        .collect()
}
