use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;

use rfclutter::channel::{ChannelKind, ImpulseResponse, SPEED_OF_LIGHT};
use rfclutter::cofar::{solve_regions, split_regions, Redesign, TargetModel};
use rfclutter::covtrad::{read_covariance, COVARIANCE_MAGIC};
use rfclutter::dsp::{doppler_bin_frequency, range_doppler_map, write_map_csv, write_map_pgm, MapConfig, RangeDopplerMap, Window};
use rfclutter::formats::{self, CUBE_MAGIC, IR_MAGIC, WAVEFORM_MAGIC};
use rfclutter::mimo::{cross_channel_leakage, enumerate_pairs, simulate_mimo_cube, Node};
use rfclutter::rxsim::{receive, DataCube, ReceiveConfig, Source};
use rfclutter::scenario_io::challenge::{export_challenge, read_challenge, MANIFEST_FILE};
use rfclutter::scenario_io::generate::{generate_scenario1, generate_scenario2};
use rfclutter::scenario_io::scene::{self, Scene, Simulation};
use rfclutter::scenario_io::{load_scenario, parse_scenario, Scenario};
use rfclutter::terrain::Vec3;
use rfclutter::waveform::{lfm, phase_code, ChirpDirection, Waveform};
use rfclutter::Real;

use crate::{Global, MapArgs, TargetArg, WaveArg, WindowArg};

/// Scenario plus the directory its file references resolve against.
struct Loaded {
    scenario: Scenario,
    base: PathBuf,
}

fn load(g: &Global) -> Result<Loaded> {
    let (mut scenario, base) = match g.scenario.as_str() {
        "scenario1" => (generate_scenario1(g.scale)?, PathBuf::from(".")),
        "scenario2" => (generate_scenario2(g.scale)?, PathBuf::from(".")),
        path => {
            let p = Path::new(path);
            let s = load_scenario(p).with_context(|| format!("loading scenario {}", p.display()))?;
            (s, p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")))
        }
    };
    if let Some(seed) = g.seed {
        scenario.seed = seed;
    }
    info!("scenario `{}`: dims {:?}", scenario.name, scenario.cube_dims());
    Ok(Loaded { scenario, base })
}

impl Loaded {
    fn scene(&self) -> Result<Scene> {
        let scene = scene::build_scene(&self.scenario, &self.base)?;
        info!("{} patches", scene.patches.len());
        Ok(scene)
    }
}

fn out_dir(g: &Global) -> Result<&Path> {
    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    Ok(&g.out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Built-in name or RFWAV001 file, at the scenario sample rate.
fn resolve_waveform(spec: &str, s: &Scenario) -> Result<Waveform<f64>> {
    let r = &s.radar;
    let w = match spec {
        "scenario" => scene::waveform(s)?,
        "lfm" => lfm(r.bandwidth, r.pulse_width, r.sample_rate, ChirpDirection::Up)?,
        "lfm-down" => lfm(r.bandwidth, r.pulse_width, r.sample_rate, ChirpDirection::Down)?,
        "phase_code" => phase_code(r.chips, r.sample_rate, s.seed)?,
        other => match other.strip_prefix("phase_code:") {
            Some(seed) => phase_code(r.chips, r.sample_rate, seed.parse().with_context(|| format!("bad phase code seed `{seed}`"))?)?,
            None => formats::load_waveform(Path::new(other)).with_context(|| format!("loading waveform {other}"))?.cast(),
        },
    };
    if (w.sample_rate - r.sample_rate).abs() > 1e-9 * r.sample_rate {
        bail!("waveform `{spec}` is sampled at {} Hz but the scenario uses {} Hz", w.sample_rate, r.sample_rate);
    }
    Ok(w)
}

fn map_config(m: &MapArgs) -> MapConfig {
    let window = match m.window {
        WindowArg::None => Window::None,
        WindowArg::Hann => Window::Hann,
    };
    MapConfig { window, dynamic_range_db: m.dynamic_range, peak_offset_db: m.peak_offset }
}

fn check_cpi(s: &Scenario, cpi: usize) -> Result<()> {
    if cpi >= s.radar.cpis {
        bail!("CPI {cpi} out of range (scenario has {})", s.radar.cpis);
    }
    Ok(())
}

fn run_simulation(l: &Loaded, scene: &Scene, wave: &WaveArg) -> Result<Simulation<f64>> {
    let timing = scene::timing(&l.scenario, scene)?;
    let wf = resolve_waveform(&wave.waveform, &l.scenario)?;
    info!("{} range bins from {:.1} m, waveform {} ({} samples)", timing.num_taps, timing.delay_origin * SPEED_OF_LIGHT / 2.0, wf.label, wf.len());
    Ok(scene::simulate_with(&l.scenario, scene, &timing, &wf)?)
}

pub fn simulate(g: &Global, wave: &WaveArg) -> Result<()> {
    let l = load(g)?;
    let scene = l.scene()?;
    let sim = run_simulation(&l, &scene, wave)?;
    let dir = out_dir(g)?;
    formats::save_cube(&sim.cube, &dir.join("cube.rfcube"))?;
    formats::save_waveform(&sim.waveform, &dir.join("waveform.rfwav"))?;
    for (k, ch) in sim.channels.iter().enumerate() {
        formats::save_ir(&ch.clutter, &dir.join(format!("clutter_ir_{k:03}.rfgir")))?;
        formats::save_ir(&ch.target, &dir.join(format!("target_ir_{k:03}.rfgir")))?;
        if ch.dropped > 0 {
            info!("CPI {k}: {} scatterers fell outside the receive window", ch.dropped);
        }
    }
    fs::write(dir.join("scenario.txt"), l.scenario.to_text())?;
    let (k, n, m, r) = sim.cube.dims();
    println!("cube {k}x{n}x{m}x{r} written to {}", dir.display());
    Ok(())
}

pub fn clutter_map(g: &Global, cpi: usize) -> Result<()> {
    let l = load(g)?;
    check_cpi(&l.scenario, cpi)?;
    let scene = l.scene()?;
    let cells = scene::clutter_map(&l.scenario, &scene, cpi)?;
    let path = out_dir(g)?.join(format!("clutter_map_cpi{cpi:03}.csv"));
    let mut w = create(&path)?;
    writeln!(w, "patch_id,x,y,z,landcover,visible_tx,visible_rx,grazing_deg,sigma0,tx_gain,rx_gain,power")?;
    for c in &cells {
        writeln!(
            w,
            "{},{:.2},{:.2},{:.2},{},{},{},{:.4},{:.6e},{:.6e},{:.6e},{:.6e}",
            c.patch_id,
            c.center.x,
            c.center.y,
            c.center.z,
            c.landcover.name(),
            u8::from(c.visible_tx),
            u8::from(c.visible_rx),
            c.grazing.to_degrees(),
            c.sigma0,
            c.tx_gain,
            c.rx_gain,
            c.power_scale
        )?;
    }
    w.flush()?;
    let lit = cells.iter().filter(|c| c.power_scale > 0.0).count();
    println!("{} patches, {lit} illuminated, written to {}", cells.len(), path.display());
    Ok(())
}

pub fn los_map(g: &Global, cpi: usize) -> Result<()> {
    let l = load(g)?;
    check_cpi(&l.scenario, cpi)?;
    let scene = l.scene()?;
    let (tx, _) = scene::platforms_at(&l.scenario, cpi);
    let visible = rfclutter::terrain::los_map(&scene.dem, &tx.position, &scene.patches);
    let dir = out_dir(g)?;
    let mut w = create(&dir.join(format!("los_map_cpi{cpi:03}.csv")))?;
    writeln!(w, "patch_id,x,y,z,visible")?;
    for (p, v) in scene.patches.iter().zip(&visible) {
        writeln!(w, "{},{:.2},{:.2},{:.2},{}", p.patch_id, p.center.x, p.center.y, p.center.z, u8::from(*v))?;
    }
    w.flush()?;

    // Raster on the patch grid, north up, visible patches white.
    let size = l.scenario.terrain.patch_size;
    let (width, height) = scene.dem.extent();
    let (cols, rows) = ((width / size - 1e-9).ceil() as usize, (height / size - 1e-9).ceil() as usize);
    let mut pixels = vec![0u8; rows * cols];
    for (p, v) in scene.patches.iter().zip(&visible) {
        let c = ((p.center.x / size) as usize).min(cols - 1);
        let r = rows - 1 - ((p.center.y / size) as usize).min(rows - 1);
        pixels[r * cols + c] = if *v { 255 } else { 0 };
    }
    let mut w = create(&dir.join(format!("los_map_cpi{cpi:03}.pgm")))?;
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    w.write_all(&pixels)?;
    w.flush()?;
    let n = visible.iter().filter(|v| **v).count();
    println!("{n}/{} patches visible from the transmitter at CPI {cpi}", visible.len());
    Ok(())
}

fn write_maps(dir: &Path, stem: &str, map: &RangeDopplerMap, cfg: &MapConfig) -> Result<()> {
    let mut w = create(&dir.join(format!("{stem}.csv")))?;
    write_map_csv(map, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}.pgm")))?;
    write_map_pgm(map, cfg.dynamic_range_db, &mut w)?;
    w.flush()?;
    let mut w = create(&dir.join(format!("{stem}_peaks.csv")))?;
    writeln!(w, "doppler_bin,range_bin,doppler_hz,db")?;
    let pulses = map.db.dim().0;
    for p in &map.peaks {
        writeln!(w, "{},{},{:.3},{:.3}", p.doppler_bin, p.range_bin, doppler_bin_frequency(p.doppler_bin, pulses, map.prf), p.db)?;
    }
    w.flush()?;
    Ok(())
}

fn maps_for_cube<T: Real>(dir: &Path, cube: &DataCube<T>, waveform: &Waveform<T>, weights: &[num_complex::Complex<T>], cpis: &[usize], cfg: &MapConfig) -> Result<()> {
    for &k in cpis {
        let map = range_doppler_map(cube, k, waveform, weights, cfg)?;
        write_maps(dir, &format!("rd_cpi{k:03}"), &map, cfg)?;
        println!("CPI {k}: {} peaks, reference {:.1} dB", map.peaks.len(), map.reference_db);
    }
    Ok(())
}

pub fn range_doppler(g: &Global, cube: Option<&Path>, cpi: Option<usize>, m: &MapArgs, wave: &WaveArg) -> Result<()> {
    let l = load(g)?;
    let cfg = map_config(m);
    let dir = out_dir(g)?.to_path_buf();
    match cube {
        Some(path) => {
            let cube = formats::load_cube(path).with_context(|| format!("loading {}", path.display()))?;
            let cpis = cpi_list(cpi, cube.dims().0)?;
            let wf = resolve_waveform(&wave.waveform, &l.scenario)?.cast::<f32>();
            let weights = scene::beam_weights::<f32>(&l.scenario)?;
            if weights.len() != cube.dims().1 {
                bail!("cube has {} channels but the scenario array has {}", cube.dims().1, weights.len());
            }
            maps_for_cube(&dir, &cube, &wf, &weights, &cpis, &cfg)
        }
        None => {
            let scene = l.scene()?;
            let sim = run_simulation(&l, &scene, wave)?;
            let cpis = cpi_list(cpi, sim.cube.dims().0)?;
            maps_for_cube(&dir, &sim.cube, &sim.waveform, &scene::beam_weights::<f64>(&l.scenario)?, &cpis, &cfg)
        }
    }
}

fn cpi_list(cpi: Option<usize>, cpis: usize) -> Result<Vec<usize>> {
    match cpi {
        Some(k) if k >= cpis => bail!("CPI {k} out of range (cube has {cpis})"),
        Some(k) => Ok(vec![k]),
        None => Ok((0..cpis).collect()),
    }
}

pub fn cofar_optimize(g: &Global, length: usize, regions: usize, per_pulse: bool, target: TargetArg, noise: Option<f64>) -> Result<()> {
    let l = load(g)?;
    let s = &l.scenario;
    let scene = l.scene()?;
    let timing = scene::timing(s, &scene)?;
    let noise = noise.unwrap_or(s.radar.noise_power);
    let model = match target {
        TargetArg::Delta => TargetModel::Delta,
        TargetArg::Response => TargetModel::FromResponse,
    };
    let dir = out_dir(g)?;
    let mut csv = create(&dir.join("cofar.csv"))?;
    writeln!(csv, "cpi,pulse,region,range_start,range_end,realizations,lambda,max_gain_db,waveform")?;
    let bounds = split_regions(timing.num_taps, regions);
    for k in 0..s.radar.cpis {
        let ch = scene::synthesize_cpi::<f64>(s, &scene, &timing, k)?;
        let modes: Vec<(Redesign, String)> =
            if per_pulse { (0..s.radar.pulses).map(|p| (Redesign::PerPulse(p), p.to_string())).collect() } else { vec![(Redesign::PerCpi, "all".into())] };
        for (mode, pulse) in modes {
            let sols = solve_regions(&ch.clutter, &ch.target, &bounds, length, noise, model, mode, k)
                .with_context(|| format!("CPI {k}, pulse {pulse} (try a larger --noise)"))?;
            for (r, sol) in sols.iter().enumerate() {
                let name = match mode {
                    Redesign::PerCpi => format!("cofar_cpi{k:03}_r{r:02}.rfwav"),
                    Redesign::PerPulse(p) => format!("cofar_cpi{k:03}_p{p:03}_r{r:02}.rfwav"),
                };
                let wf = Waveform::new(sol.waveform.clone(), timing.sample_rate, "cofar")?;
                formats::save_waveform(&wf, &dir.join(&name))?;
                writeln!(csv, "{k},{pulse},{r},{},{},{},{:.6e},{:.4},{name}", sol.range_start, sol.range_end, sol.realizations, sol.lambda, sol.max_gain_db)?;
            }
            if !per_pulse {
                let gains: Vec<String> = sols.iter().map(|s| format!("{:.2}", s.max_gain_db)).collect();
                println!("CPI {k}: max gain per region [{}] dB", gains.join(", "));
            }
        }
    }
    csv.flush()?;
    println!("solutions written to {}", dir.join("cofar.csv").display());
    Ok(())
}

pub fn mimo_sim(g: &Global, specs: &[String], spacing: f64, cpi: usize, m: &MapArgs) -> Result<()> {
    let l = load(g)?;
    let s = &l.scenario;
    check_cpi(s, cpi)?;
    let scene = l.scene()?;
    let timing = scene::timing(s, &scene)?;
    let waveforms: Vec<Waveform<f64>> = specs.iter().map(|w| resolve_waveform(w, s)).collect::<Result<_>>()?;
    let rx_platform = s.rx_platform();
    let along = if s.tx.velocity.norm() > 0.0 { s.tx.velocity.normalize() } else { Vec3::x() };

    let mut tx_nodes = Vec::new();
    let mut irs = Vec::new();
    for t in 0..waveforms.len() {
        let mut st = s.clone();
        st.tx.position += along * (spacing * t as f64);
        st.rx = Some(rx_platform);
        let ch = scene::synthesize_cpi::<f64>(&st, &scene, &timing, cpi)?;
        irs.push(ch.clutter.add(&ch.target)?.quantized::<f32>());
        tx_nodes.push(Node { platform: st.tx, array: scene::tx_array(s)? });
    }
    let rx_nodes = vec![Node { platform: rx_platform, array: scene::rx_array(s)? }];
    let pairs = enumerate_pairs(&tx_nodes, &rx_nodes)?;
    let sets: Vec<Vec<Waveform<f64>>> = waveforms.iter().map(|w| vec![w.clone()]).collect();
    let base = ReceiveConfig::new(s.radar.noise_power, s.seed, cpi, s.radar.carrier);
    let cubes = simulate_mimo_cube(&pairs, &irs, &sets, &base)?;

    let cfg = map_config(m);
    let dir = out_dir(g)?;
    let weights = scene::beam_weights::<f64>(s)?;
    for (a, wf) in waveforms.iter().enumerate() {
        let map = range_doppler_map(&cubes[0], 0, wf, &weights, &cfg)?;
        write_maps(dir, &format!("mimo_cpi{cpi:03}_mf{a}"), &map, &cfg)?;
        println!("matched filter {a} ({}): {} peaks", specs[a], map.peaks.len());
    }
    if waveforms.len() >= 2 {
        let quiet = ReceiveConfig { noise_power: 0.0, ..base };
        let single: Vec<DataCube<f64>> = irs
            .iter()
            .zip(&sets)
            .map(|(ir, w)| receive(&[Source { ir, waveforms: w }], &quiet))
            .collect::<rfclutter::Result<_>>()?;
        let leak = cross_channel_leakage(&single, &waveforms, 0..timing.num_taps)?;
        let mut w = create(&dir.join(format!("mimo_cpi{cpi:03}_leakage.csv")))?;
        writeln!(w, "filter,transmitter,leakage_db")?;
        for ((a, b), v) in leak.indexed_iter() {
            writeln!(w, "{a},{b},{v:.3}")?;
        }
        w.flush()?;
        for a in 0..waveforms.len() {
            let row: Vec<String> = (0..waveforms.len()).map(|b| format!("{:8.2}", leak[[a, b]])).collect();
            println!("leakage dB, filter {a}: {}", row.join(" "));
        }
    }
    Ok(())
}

pub fn dataset_gen(g: &Global) -> Result<()> {
    let l = load(g)?;
    let scene = l.scene()?;
    let sim = scene::simulate::<f64>(&l.scenario, &scene)?;
    let dir = out_dir(g)?;
    let manifest = export_challenge(dir, &l.scenario, &sim)?;
    println!("{} files, dims {:?}, scenario hash {}", manifest.files.len() + 1, manifest.dims, manifest.scenario_hash);
    Ok(())
}

fn describe_ir(ir: &ImpulseResponse<f32>) -> String {
    let (n, m, l) = ir.taps.dim();
    format!("{n} channels x {m} pulses x {l} taps, fs {} Hz, PRF {} Hz, delay origin {:.4e} s, energy {:.4e}", ir.sample_rate, ir.prf, ir.delay_origin, ir.energy())
}

fn mean_power(cube: &DataCube<f32>) -> f64 {
    let n = cube.samples.len().max(1) as f64;
    cube.samples.iter().map(|z| z.norm_sqr() as f64).sum::<f64>() / n
}

pub fn inspect(path: &Path) -> Result<()> {
    if path.is_dir() {
        if !path.join(MANIFEST_FILE).exists() {
            bail!("{} has no {MANIFEST_FILE}", path.display());
        }
        let ch = read_challenge(path)?;
        let m = &ch.manifest;
        println!("challenge dataset `{}` (all payload digests verified)", m.scenario_name);
        println!("scenario hash {}", m.scenario_hash);
        println!("dims {:?}, fs {} Hz, PRF {} Hz, carrier {} Hz, noise {:e}", m.dims, m.sample_rate, m.prf, m.carrier, m.noise_power);
        println!("waveform {} samples", ch.waveform.len());
        for (k, cube) in ch.cubes.iter().enumerate() {
            println!("CPI {k}: mean power {:.4e}, clutter IR energy {:.4e}, target IR energy {:.4e}", mean_power(cube), ch.clutter[k].energy(), ch.target[k].energy());
        }
        return Ok(());
    }
    let mut magic = [0u8; 8];
    let short = File::open(path).with_context(|| format!("opening {}", path.display()))?.read_exact(&mut magic).is_err();
    match &magic {
        _ if short => inspect_text(path),
        m if m == CUBE_MAGIC => {
            let cube = formats::load_cube(path)?;
            let (k, n, p, r) = cube.dims();
            println!("data cube {k} CPIs x {n} channels x {p} pulses x {r} range bins");
            println!("fs {} Hz, PRF {} Hz, carrier {} Hz, noise {:e}, mean power {:.4e}", cube.sample_rate, cube.prf, cube.carrier, cube.noise_power, mean_power(&cube));
            Ok(())
        }
        m if m == IR_MAGIC => {
            println!("impulse response {}", describe_ir(&formats::load_ir(path, ChannelKind::Clutter)?));
            Ok(())
        }
        m if m == WAVEFORM_MAGIC => {
            let w = formats::load_waveform(path)?;
            println!("waveform {} samples at {} Hz, energy {:.6}", w.len(), w.sample_rate, w.energy());
            Ok(())
        }
        m if m == COVARIANCE_MAGIC => {
            let cov = read_covariance(File::open(path)?)?;
            println!("covariance {} channels x {} pulses, trace {:.4e}", cov.channels, cov.pulses, cov.trace());
            Ok(())
        }
        _ => inspect_text(path),
    }
}

fn inspect_text(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("{} is neither a known binary format nor text", path.display()))?;
    let s = parse_scenario(&text).with_context(|| format!("parsing {} as a scenario", path.display()))?;
    println!("scenario `{}`: dims {:?}, {} targets, {} discretes", s.name, s.cube_dims(), s.targets.len(), s.discretes.len());
    println!("hash {}", s.hash());
    Ok(())
}
