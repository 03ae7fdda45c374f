//! File formats: ASCII terrain rasters and the little-endian binary
//! containers for data cubes (`RFCUBE01`), impulse responses (`RFGIR001`)
//! and waveforms (`RFWAV001`). Complex samples are stored as f32 I/Q pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array3, Array4};
use num_complex::Complex;

use crate::channel::{ChannelKind, ImpulseResponse};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rxsim::DataCube;
use crate::terrain::{ElevationGrid, GeoPoint, LandCover, LandCoverGrid};
use crate::waveform::Waveform;

pub const CUBE_MAGIC: &[u8; 8] = b"RFCUBE01";
pub const IR_MAGIC: &[u8; 8] = b"RFGIR001";
pub const WAVEFORM_MAGIC: &[u8; 8] = b"RFWAV001";

fn format_err(path: &str, message: impl Into<String>) -> Error {
    Error::Format { path: path.into(), message: message.into() }
}

struct Reader<R: Read> {
    inner: R,
    name: String,
}

impl<R: Read> Reader<R> {
    fn exact(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|_| format_err(&self.name, "unexpected end of file"))?;
        Ok(buf)
    }
    fn magic(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.exact(8)? != magic {
            return Err(format_err(&self.name, format!("expected magic {}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.exact(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.exact(8)?.try_into().unwrap()))
    }
    fn iq(&mut self, count: usize) -> Result<Vec<Complex<f32>>> {
        let raw = self.exact(count.checked_mul(8).ok_or_else(|| format_err(&self.name, "dimensions overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| Complex::new(f32::from_le_bytes(c[..4].try_into().unwrap()), f32::from_le_bytes(c[4..].try_into().unwrap())))
            .collect())
    }
    fn end(&mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b)? {
            0 => Ok(()),
            _ => Err(format_err(&self.name, "trailing bytes after payload")),
        }
    }
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Config(format!("dimension {v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_iq<'a, T: Real + 'a, W: Write>(w: &mut W, it: impl Iterator<Item = &'a Complex<T>>) -> Result<()> {
    let mut buf = Vec::with_capacity(1 << 16);
    for z in it {
        buf.extend_from_slice(&(z.re.to_f64_lossy() as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im.to_f64_lossy() as f32).to_le_bytes());
        if buf.len() >= 1 << 16 {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_cube<T: Real, W: Write>(cube: &DataCube<T>, mut w: W) -> Result<()> {
    let (k, n, m, r) = cube.dims();
    w.write_all(CUBE_MAGIC)?;
    for d in [k, n, m, r] {
        put_u32(&mut w, d)?;
    }
    for v in [cube.sample_rate, cube.prf, cube.noise_power, cube.carrier] {
        put_f64(&mut w, v)?;
    }
    put_iq(&mut w, cube.samples.as_standard_layout().iter())?;
    w.flush()?;
    Ok(())
}

pub fn read_cube<R: Read>(r: R, name: &str) -> Result<DataCube<f32>> {
    let mut rd = Reader { inner: r, name: name.into() };
    rd.magic(CUBE_MAGIC)?;
    let dims = (rd.u32()?, rd.u32()?, rd.u32()?, rd.u32()?);
    let (sample_rate, prf, noise_power, carrier) = (rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?);
    let data = rd.iq(dims.0 * dims.1 * dims.2 * dims.3)?;
    rd.end()?;
    let samples = Array4::from_shape_vec(dims, data).map_err(|e| format_err(name, e.to_string()))?;
    Ok(DataCube { samples, sample_rate, prf, noise_power, carrier })
}

pub fn write_ir<T: Real, W: Write>(ir: &ImpulseResponse<T>, mut w: W) -> Result<()> {
    let (n, m, l) = ir.taps.dim();
    w.write_all(IR_MAGIC)?;
    for d in [n, m, l] {
        put_u32(&mut w, d)?;
    }
    for v in [ir.sample_rate, ir.delay_origin, ir.prf] {
        put_f64(&mut w, v)?;
    }
    put_iq(&mut w, ir.taps.as_standard_layout().iter())?;
    w.flush()?;
    Ok(())
}

pub fn read_ir<R: Read>(r: R, name: &str, kind: ChannelKind) -> Result<ImpulseResponse<f32>> {
    let mut rd = Reader { inner: r, name: name.into() };
    rd.magic(IR_MAGIC)?;
    let dims = (rd.u32()?, rd.u32()?, rd.u32()?);
    let (sample_rate, delay_origin, prf) = (rd.f64()?, rd.f64()?, rd.f64()?);
    let data = rd.iq(dims.0 * dims.1 * dims.2)?;
    rd.end()?;
    let taps = Array3::from_shape_vec(dims, data).map_err(|e| format_err(name, e.to_string()))?;
    Ok(ImpulseResponse { taps, sample_rate, delay_origin, prf, kind })
}

pub fn write_waveform<T: Real, W: Write>(wf: &Waveform<T>, mut w: W) -> Result<()> {
    w.write_all(WAVEFORM_MAGIC)?;
    put_u32(&mut w, wf.len())?;
    put_f64(&mut w, wf.sample_rate)?;
    put_iq(&mut w, wf.samples.iter())?;
    w.flush()?;
    Ok(())
}

pub fn read_waveform<R: Read>(r: R, name: &str) -> Result<Waveform<f32>> {
    let mut rd = Reader { inner: r, name: name.into() };
    rd.magic(WAVEFORM_MAGIC)?;
    let p = rd.u32()?;
    let fs = rd.f64()?;
    let data = rd.iq(p)?;
    rd.end()?;
    Waveform::new(data, fs, name.to_string())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_cube<T: Real>(cube: &DataCube<T>, path: &Path) -> Result<()> {
    write_cube(cube, create(path)?)
}

pub fn load_cube(path: &Path) -> Result<DataCube<f32>> {
    read_cube(open(path)?, &path.display().to_string())
}

pub fn save_ir<T: Real>(ir: &ImpulseResponse<T>, path: &Path) -> Result<()> {
    write_ir(ir, create(path)?)
}

pub fn load_ir(path: &Path, kind: ChannelKind) -> Result<ImpulseResponse<f32>> {
    read_ir(open(path)?, &path.display().to_string(), kind)
}

pub fn save_waveform<T: Real>(wf: &Waveform<T>, path: &Path) -> Result<()> {
    write_waveform(wf, create(path)?)
}

pub fn load_waveform(path: &Path) -> Result<Waveform<f32>> {
    read_waveform(open(path)?, &path.display().to_string())
}

/// Raster header: `nrows`, `ncols`, `cellsize`, `origin LAT LON`, then
/// `nrows` lines of `ncols` whitespace-separated values, north row first.
struct RasterHeader {
    nrows: usize,
    ncols: usize,
    cell_size: f64,
    origin: GeoPoint,
}

fn write_header<W: Write>(w: &mut W, h: &RasterHeader) -> Result<()> {
    writeln!(w, "nrows {}", h.nrows)?;
    writeln!(w, "ncols {}", h.ncols)?;
    writeln!(w, "cellsize {}", h.cell_size)?;
    writeln!(w, "origin {} {}", h.origin.lat_deg, h.origin.lon_deg)?;
    Ok(())
}

fn parse_raster(text: &str, name: &str) -> Result<(RasterHeader, Vec<String>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let mut field = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| format_err(name, format!("missing `{key}` header")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(format_err(name, format!("expected `{key}` header, found `{line}`")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let num = |v: &[String], key: &str| -> Result<f64> { v.first().and_then(|s| s.parse().ok()).ok_or_else(|| format_err(name, format!("bad `{key}` value"))) };
    let nrows = field("nrows")?;
    let nrows = num(&nrows, "nrows")? as usize;
    let ncols = field("ncols")?;
    let ncols = num(&ncols, "ncols")? as usize;
    let cs = field("cellsize")?;
    let cell_size = num(&cs, "cellsize")?;
    let origin = field("origin")?;
    if origin.len() != 2 {
        return Err(format_err(name, "`origin` needs LAT LON"));
    }
    let origin = GeoPoint { lat_deg: num(&origin[..1], "origin")?, lon_deg: num(&origin[1..], "origin")? };
    let values: Vec<String> = lines.flat_map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>()).collect();
    if values.len() != nrows * ncols {
        return Err(format_err(name, format!("expected {} values, found {}", nrows * ncols, values.len())));
    }
    Ok((RasterHeader { nrows, ncols, cell_size, origin }, values))
}

pub fn write_dem<W: Write>(dem: &ElevationGrid, mut w: W) -> Result<()> {
    write_header(&mut w, &RasterHeader { nrows: dem.nrows, ncols: dem.ncols, cell_size: dem.cell_size, origin: dem.origin })?;
    for row in dem.heights().chunks(dem.ncols) {
        let line: Vec<String> = row.iter().map(|h| h.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn parse_dem(text: &str, name: &str) -> Result<ElevationGrid> {
    let (h, values) = parse_raster(text, name)?;
    let heights = values.iter().map(|v| v.parse::<f64>().map_err(|_| format_err(name, format!("bad height `{v}`")))).collect::<Result<Vec<_>>>()?;
    ElevationGrid::new(h.origin, h.cell_size, h.nrows, h.ncols, heights)
}

pub fn write_landcover<W: Write>(lc: &LandCoverGrid, origin: GeoPoint, mut w: W) -> Result<()> {
    write_header(&mut w, &RasterHeader { nrows: lc.nrows, ncols: lc.ncols, cell_size: lc.cell_size, origin })?;
    for row in lc.classes().chunks(lc.ncols) {
        let line: Vec<String> = row.iter().map(|c| c.code().to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn parse_landcover(text: &str, name: &str) -> Result<LandCoverGrid> {
    let (h, values) = parse_raster(text, name)?;
    let classes = values.iter().map(|v| v.parse::<LandCover>().map_err(|_| format_err(name, format!("bad class `{v}`")))).collect::<Result<Vec<_>>>()?;
    LandCoverGrid::new(h.cell_size, h.nrows, h.ncols, classes)
}

pub fn load_dem(path: &Path) -> Result<ElevationGrid> {
    parse_dem(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn load_landcover(path: &Path) -> Result<LandCoverGrid> {
    parse_landcover(&std::fs::read_to_string(path)?, &path.display().to_string())
}
