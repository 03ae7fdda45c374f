//! `rfclutter` command-line front end.

mod commands;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rfclutter", version, about = "Physics-based RF clutter simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Scenario file, or `scenario1` / `scenario2` for the built-in generators.
    #[arg(long, global = true, default_value = "scenario1")]
    pub scenario: String,
    /// Override the scenario's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Scale of the built-in scenarios, in (0, 1].
    #[arg(long, global = true, default_value_t = rfclutter::scenario_io::generate::DESK_SCALE)]
    pub scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate every CPI and write the cube, truth responses and waveform.
    Simulate {
        #[command(flatten)]
        wave: WaveArg,
    },
    /// Per-patch LOS, grazing angle, σ⁰ and received power for one CPI.
    ClutterMap {
        #[arg(long, default_value_t = 0)]
        cpi: usize,
    },
    /// Transmitter visibility of every patch.
    LosMap {
        #[arg(long, default_value_t = 0)]
        cpi: usize,
    },
    /// Beamformed range-Doppler maps (CSV, PGM and peak list) per CPI.
    RangeDoppler {
        /// Process an existing cube instead of simulating.
        #[arg(long)]
        cube: Option<PathBuf>,
        /// Only this CPI (default: all).
        #[arg(long)]
        cpi: Option<usize>,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        wave: WaveArg,
    },
    /// Optimal transmit waveform per range region from the truth responses.
    CofarOptimize {
        /// Waveform length in samples.
        #[arg(long, default_value_t = 16)]
        length: usize,
        /// Number of equal range regions.
        #[arg(long, default_value_t = 4)]
        regions: usize,
        /// Redesign every pulse instead of every CPI.
        #[arg(long)]
        per_pulse: bool,
        #[arg(long, value_enum, default_value_t = TargetArg::Delta)]
        target: TargetArg,
        /// Noise variance added to the clutter moment (default: scenario noise power).
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Co-located MIMO: one transmitter per waveform, matched-filter maps and leakage.
    MimoSim {
        /// Transmit waveform per transmitter: built-in name or RFWAV001 file.
        #[arg(long = "tx-waveform", required = true, num_args = 1..)]
        tx_waveforms: Vec<String>,
        /// Along-track spacing between transmitters (m).
        #[arg(long, default_value_t = 0.0)]
        tx_spacing: f64,
        #[arg(long, default_value_t = 0)]
        cpi: usize,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Export a challenge-style dataset directory with manifest.
    DatasetGen,
    /// Summarize a dataset directory or a binary file.
    Inspect { path: PathBuf },
}

#[derive(Args, Debug, Clone)]
pub struct WaveArg {
    /// Built-in waveform (`scenario`, `lfm`, `lfm-down`, `phase_code[:SEED]`) or RFWAV001 file.
    #[arg(long, default_value = "scenario")]
    pub waveform: String,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    #[arg(long, value_enum, default_value_t = WindowArg::None)]
    pub window: WindowArg,
    /// Clip the map this many dB below its peak.
    #[arg(long, default_value_t = 60.0)]
    pub dynamic_range: f64,
    /// Peak threshold above the map median (dB).
    #[arg(long, default_value_t = 20.0)]
    pub peak_offset: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum WindowArg {
    None,
    Hann,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum TargetArg {
    Delta,
    Response,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Simulate { wave } => commands::simulate(g, &wave),
        Command::ClutterMap { cpi } => commands::clutter_map(g, cpi),
        Command::LosMap { cpi } => commands::los_map(g, cpi),
        Command::RangeDoppler { cube, cpi, map, wave } => commands::range_doppler(g, cube.as_deref(), cpi, &map, &wave),
        Command::CofarOptimize { length, regions, per_pulse, target, noise } => commands::cofar_optimize(g, length, regions, per_pulse, target, noise),
        Command::MimoSim { tx_waveforms, tx_spacing, cpi, map } => commands::mimo_sim(g, &tx_waveforms, tx_spacing, cpi, &map),
        Command::DatasetGen => commands::dataset_gen(g),
        Command::Inspect { path } => commands::inspect(&path),
    }
}
