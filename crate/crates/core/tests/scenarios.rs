mod common;

use std::path::Path;
use std::sync::OnceLock;

use common::{small_scenario, SMALL_SCENARIO};
use rfclutter::channel::{bistatic_geometry, Link, RadarTiming};
use rfclutter::dsp::{doppler_bin_of, range_doppler_map, MapConfig, RangeDopplerMap};
use rfclutter::scenario_io::challenge::{export_challenge, planned_dims, read_challenge, MANIFEST_FILE};
use rfclutter::scenario_io::generate::{generate_scenario1, generate_scenario2, BUILDING_GRID, DESK_SCALE};
use rfclutter::scenario_io::scene::{beam_weights, build_scene, platforms_at, simulate, Simulation};
use rfclutter::scenario_io::{load_scenario, parse_scenario, DiscreteKind, Scenario};
use rfclutter::terrain::{LandCover, Vec3};
use rfclutter::Error;

fn scenario_error(text: &str) -> (usize, String, String) {
    match parse_scenario(text) {
        Err(Error::Scenario { line, key, message }) => (line, key, message),
        other => panic!("expected a scenario error, got {other:?}"),
    }
}

#[test]
fn parse_errors_name_the_key_and_line() {
    let (line, key, _) = scenario_error(&SMALL_SCENARIO.replace("radar.pulses = 16", "radar.pulses = sixteen"));
    assert_eq!((line, key.as_str()), (7, "radar.pulses"));
    let (line, key, msg) = scenario_error(&format!("{SMALL_SCENARIO}radar.prf = 100\n"));
    assert_eq!((line, key.as_str()), (24, "radar.prf"));
    assert!(msg.contains("line 6"), "{msg}");
    let (_, key, _) = scenario_error(&SMALL_SCENARIO.replace("tx.position = 600 -1500 800", "tx.position = 600 -1500"));
    assert_eq!(key, "tx.position");
    let (_, key, msg) = scenario_error(&SMALL_SCENARIO.replace("terrain.dem = synthetic:peak", "terrain.dem = missing.asc"));
    assert_eq!(key, "terrain.dem");
    assert!(msg.contains("not found"));
    let (_, key, _) = scenario_error(&SMALL_SCENARIO.replace("radar.carrier = 1e10\n", ""));
    assert_eq!(key, "radar.carrier");
    let (line, key, _) = scenario_error("radar.carrier = 1e10\nno equals sign here\n");
    assert_eq!((line, key.as_str()), (2, "no equals sign here"));
}

#[test]
fn canonical_text_round_trips() {
    let s = small_scenario();
    let text = s.to_text();
    let again = parse_scenario(&text).unwrap();
    assert_eq!(again, s);
    assert_eq!(again.to_text(), text);
    assert_eq!(again.hash(), s.hash());
    assert_eq!(s.hash().len(), 64);
    let renamed = parse_scenario(&SMALL_SCENARIO.replace("seed.master = 7", "seed.master = 8")).unwrap();
    assert_ne!(renamed.hash(), s.hash());
    // Comments and blank lines do not change the scenario.
    let noisy = SMALL_SCENARIO.replace("radar.prf = 2000", "\n# timing\nradar.prf = 2000   # Hz");
    assert_eq!(parse_scenario(&noisy).unwrap(), s);
}

#[test]
fn files_resolve_against_the_scenario_directory() {
    let dir = tempfile::tempdir().unwrap();
    let scene = build_scene(&small_scenario(), Path::new(".")).unwrap();
    let mut buf = Vec::new();
    rfclutter::formats::write_dem(&scene.dem, &mut buf).unwrap();
    std::fs::write(dir.path().join("hills.asc"), &buf).unwrap();
    let text = SMALL_SCENARIO.replace("synthetic:peak", "hills.asc");
    std::fs::write(dir.path().join("s.txt"), &text).unwrap();
    let s = load_scenario(&dir.path().join("s.txt")).unwrap();
    let from_file = build_scene(&s, dir.path()).unwrap();
    assert_eq!(from_file.dem.heights(), scene.dem.heights());
}

#[test]
fn generated_dims_follow_the_scale() {
    let full = generate_scenario1(1.0).unwrap();
    assert_eq!(planned_dims(&full), (30, 32, 64, 2334));
    assert_eq!(generate_scenario1(DESK_SCALE).unwrap().cube_dims(), (4, 4, 64, 292));
    assert_eq!(generate_scenario2(0.5).unwrap().cube_dims(), (15, 16, 64, 1167));
    let s1 = generate_scenario1(DESK_SCALE).unwrap();
    assert_eq!(s1.targets.len(), 4);
    assert_eq!(s1.discretes.iter().filter(|d| matches!(d.kind, DiscreteKind::Point { .. })).count(), 2);
    let scene = build_scene(&s1, Path::new(".")).unwrap();
    let classes: Vec<LandCover> = scene.patches.iter().map(|p| p.landcover).collect();
    assert!(classes.contains(&LandCover::Water));
    assert!(classes.iter().any(|c| *c != LandCover::Water));
}

#[test]
fn buildings_raise_the_terrain() {
    let s1 = generate_scenario1(DESK_SCALE).unwrap();
    let s2 = generate_scenario2(DESK_SCALE).unwrap();
    let b: Vec<_> = s2.discretes.iter().filter(|d| matches!(d.kind, DiscreteKind::Building { .. })).collect();
    assert_eq!(b.len(), BUILDING_GRID.0 * BUILDING_GRID.1);
    let (d1, d2) = (build_scene(&s1, Path::new(".")).unwrap(), build_scene(&s2, Path::new(".")).unwrap());
    let p = b[0].position;
    let raised = d2.dem.height(p.x, p.y).unwrap() - d1.dem.height(p.x, p.y).unwrap();
    assert!((raised - 6.0).abs() < 1e-9);
    let buildings = d2.patches.iter().filter(|p| p.landcover == LandCover::Building).count();
    assert_eq!(buildings, 150);
}

struct Run {
    scenario: Scenario,
    sim: Simulation<f64>,
}

impl Run {
    fn new(scenario: Scenario) -> Self {
        let scene = build_scene(&scenario, Path::new(".")).unwrap();
        let sim = simulate::<f64>(&scenario, &scene).unwrap();
        Run { scenario, sim }
    }

    fn map(&self, cpi: usize) -> RangeDopplerMap {
        range_doppler_map(&self.sim.cube, cpi, &self.sim.waveform, &beam_weights(&self.scenario).unwrap(), &MapConfig::default()).unwrap()
    }

    /// Predicted (range bin, Doppler bin) of a scatterer at CPI `cpi`.
    fn predicted(&self, position: Vec3, velocity: Vec3, cpi: usize) -> (usize, usize) {
        let s = &self.scenario;
        let (tx, rx) = platforms_at(s, cpi);
        let p = position + velocity * (cpi as f64 * s.radar.cpi_interval);
        let (delay, doppler, _, _) = bistatic_geometry(&Link { tx, rx, wavelength: s.radar.wavelength() }, &p, &velocity).unwrap();
        let t: &RadarTiming = &self.sim.timing;
        (((delay - t.delay_origin) * t.sample_rate).round() as usize, doppler_bin_of(doppler, s.radar.pulses, s.radar.prf))
    }
}

fn scenario1_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| Run::new(generate_scenario1(DESK_SCALE).unwrap()))
}

fn near(map: &RangeDopplerMap, at: (usize, usize)) -> bool {
    let m = map.db.dim().0 as i64;
    map.peaks.iter().any(|p| {
        let dd = (p.doppler_bin as i64 - at.1 as i64).rem_euclid(m);
        (p.range_bin as i64 - at.0 as i64).abs() <= 1 && (dd <= 1 || dd >= m - 1)
    })
}

#[test]
fn weak_target_appears_only_in_later_cpis() {
    let run = scenario1_run();
    let weak = &run.scenario.targets[3];
    let last = run.scenario.radar.cpis - 1;
    let first = run.map(0);
    let final_map = run.map(last);
    assert!(!near(&first, run.predicted(weak.position, weak.velocity, 0)), "weak target already detected at CPI 0");
    assert!(near(&final_map, run.predicted(weak.position, weak.velocity, last)), "weak target missed at CPI {last}");
    // The strongest target is found from the first CPI there is line of sight to it.
    let strong = &run.scenario.targets[2];
    assert!(near(&run.map(1), run.predicted(strong.position, strong.velocity, 1)));
}

fn window_max(map: &RangeDopplerMap, at: (usize, usize)) -> f64 {
    let (m, r) = map.db.dim();
    let mut best = f64::NEG_INFINITY;
    for db in [m - 1, 0, 1] {
        for dr in [-1i64, 0, 1] {
            let j = at.0 as i64 + dr;
            if j >= 0 && (j as usize) < r {
                best = best.max(map.db[[(at.1 + db) % m, j as usize]]);
            }
        }
    }
    best
}

#[test]
fn building_cluster_outshines_target_one() {
    let run = Run::new(generate_scenario2(DESK_SCALE).unwrap());
    let t1 = &run.scenario.targets[0];
    let buildings: Vec<Vec3> = run.scenario.discretes.iter().filter(|d| matches!(d.kind, DiscreteKind::Building { .. })).map(|d| d.position).collect();
    let mut compared = 0;
    for cpi in 0..run.scenario.radar.cpis {
        let map = run.map(cpi);
        let target = window_max(&map, run.predicted(t1.position, t1.velocity, cpi));
        let cluster = buildings.iter().map(|b| window_max(&map, run.predicted(*b, Vec3::zeros(), cpi))).fold(f64::NEG_INFINITY, f64::max);
        assert!(cluster > target, "CPI {cpi}: buildings {cluster:.1} dB vs target {target:.1} dB");
        compared += 1;
    }
    assert_eq!(compared, 4);
}

#[test]
fn challenge_detects_damage() {
    let s = small_scenario();
    let scene = build_scene(&s, Path::new(".")).unwrap();
    let sim = simulate::<f64>(&s, &scene).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = export_challenge(dir.path(), &s, &sim).unwrap();
    assert_eq!(manifest.dims, (1, 3, 16, sim.cube.dims().3));
    let ch = read_challenge(dir.path()).unwrap();
    assert_eq!(ch.stacked_cube().unwrap(), sim.cube.cast::<f32>());
    assert_eq!(parse_scenario(&ch.scenario_text).unwrap(), s);

    let cube = dir.path().join("cube_000.rfcube");
    let mut bytes = std::fs::read(&cube).unwrap();
    let n = bytes.len();
    bytes[n / 2] ^= 1;
    std::fs::write(&cube, &bytes).unwrap();
    assert!(matches!(read_challenge(dir.path()), Err(Error::HashMismatch { .. })));
    bytes[n / 2] ^= 1;
    std::fs::write(&cube, &bytes[..n - 8]).unwrap();
    assert!(matches!(read_challenge(dir.path()), Err(Error::HashMismatch { .. })));
    std::fs::write(&cube, &bytes).unwrap();
    assert!(read_challenge(dir.path()).is_ok());
    std::fs::remove_file(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(read_challenge(dir.path()).is_err());
}
