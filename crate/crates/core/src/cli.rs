//! Command-line front end: `map`, `train`, `baseline` and `calibrate-n0`.
//!
//! Every command is a pure function of the config file, flags and seed.
//! Results go to `--out` as CSV next to a `*_metadata.toml` that records
//! the noise floor and every parameter the numbers depend on.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::agent::{self, QTable, TrainOptions};
use crate::baseline;
use crate::calibrate::{self, CalibrationFile, N0Sweep, TargetRow};
use crate::config::ExperimentConfig;
use crate::env::{EpisodeOrder, VcselEnv};
use crate::radio_map::CoverageModel;
use crate::{Error, Result};

/// Calibrations whose best RMS error is at or above this are rejected.
pub const MAX_CALIBRATION_RMS_PP: f64 = 15.0;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_CALIBRATION: i32 = 4;

pub const CALIBRATION_FILE: &str = "calibration.toml";

/// Version string with the git description baked in at build time.
pub fn version() -> String {
    match option_env!("OWC_GIT_DESCRIBE") {
        Some(d) if !d.is_empty() => format!("{}+{d}", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(name = "owc", version, about = "VCSEL downlink coverage simulator and divergence learner")]
pub struct Cli {
    /// Experiment config file; missing keys take built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Noise power in watts; overrides the calibration file and the config.
    #[arg(long, global = true)]
    pub n0: Option<f64>,

    /// Calibration file to read n0 from (default: <out>/calibration.toml if present).
    #[arg(long, global = true)]
    pub calibration: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SINR map for one receiver height and divergence.
    Map(MapArgs),
    /// Train the Q-learning divergence controller.
    Train(TrainArgs),
    /// Exhaustive search over all divergences for every height.
    Baseline,
    /// Fit the noise floor against a table of target coverages.
    #[command(name = "calibrate-n0")]
    CalibrateN0(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Receiver plane height, m.
    #[arg(long)]
    pub height: f64,
    /// Divergence half-angle, degrees.
    #[arg(long)]
    pub theta: f64,
    /// Override the per-emitter optical power, W.
    #[arg(long)]
    pub pt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Override the episode budget from the config.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Stop once Q stops moving instead of spending the whole budget.
    #[arg(long)]
    pub early_stop: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with `height_m,theta_deg,coverage_pct`; defaults to the built-in
    /// exhaustive-search reference rows.
    #[arg(long)]
    pub target_table: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    pub n0_lo: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub n0_hi: f64,
    #[arg(long, default_value_t = 9)]
    pub per_decade: usize,
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Csv(_) => EXIT_CONFIG,
        Error::Geometry(_) => EXIT_GEOMETRY,
        Error::Contract(_) | Error::Io(_) => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum N0Source {
    Flag,
    Calibration,
    Config,
    Default,
}

struct Resolved {
    cfg: ExperimentConfig,
    n0_source: N0Source,
}

fn load(cli: &Cli) -> Result<Resolved> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let default_cal = cli.out.join(CALIBRATION_FILE);
    let cal_path = cli
        .calibration
        .clone()
        .or_else(|| default_cal.exists().then_some(default_cal));

    let n0_source = if let Some(n0) = cli.n0 {
        cfg.scene.n0 = n0;
        N0Source::Flag
    } else if let Some(path) = cal_path {
        cfg.scene.n0 = CalibrationFile::load(&path)?.n0;
        N0Source::Calibration
    } else if cfg.n0_from_file {
        N0Source::Config
    } else {
        N0Source::Default
    };
    cfg.scene.validate()?;
    Ok(Resolved { cfg, n0_source })
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: String,
    seed: u64,
    n0: f64,
    n0_source: N0Source,
    room_l: f64,
    room_w: f64,
    room_h: f64,
    grid_step: f64,
    n_tx_side: usize,
    p_t: f64,
    a_d: f64,
    fov_deg: f64,
    n_conc: f64,
    gamma_th_db: f64,
    emitter_pitch: f64,
    target_plane_z: f64,
    heights: Vec<f64>,
    divergences_deg: Vec<f64>,
    alpha: f64,
    gamma: f64,
    episodes: usize,
    eps_max: f64,
    eps_min: f64,
    lambda: f64,
    episode_order: EpisodeOrder,
    early_stop: bool,
    coverage_evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    map_height_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    map_theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage_pct: Option<f64>,
}

impl<'a> Metadata<'a> {
    fn new(command: &'a str, cli: &Cli, r: &Resolved) -> Self {
        let s = &r.cfg.scene;
        let l = &r.cfg.learning;
        Self {
            command,
            version: version(),
            seed: cli.seed,
            n0: s.n0,
            n0_source: r.n0_source,
            room_l: s.room_l,
            room_w: s.room_w,
            room_h: s.room_h,
            grid_step: s.grid_step,
            n_tx_side: s.n_tx_side,
            p_t: s.p_t,
            a_d: s.a_d,
            fov_deg: s.fov.to_degrees(),
            n_conc: s.n_conc,
            gamma_th_db: s.gamma_th_db,
            emitter_pitch: s.emitter_pitch,
            target_plane_z: s.target_plane_z,
            heights: r.cfg.spaces.heights.clone(),
            divergences_deg: r.cfg.spaces.divergences.iter().map(|d| d.to_degrees()).collect(),
            alpha: l.alpha,
            gamma: l.gamma,
            episodes: l.episodes,
            eps_max: l.schedule.eps_max,
            eps_min: l.schedule.eps_min,
            lambda: l.schedule.lambda,
            episode_order: l.episode_order,
            early_stop: l.early_stop,
            coverage_evaluations: 0,
            map_height_m: None,
            map_theta_deg: None,
            coverage_pct: None,
        }
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs a parsed command line. Returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Map(args) => cmd_map(cli, args),
        Command::Train(args) => cmd_train(cli, args),
        Command::Baseline => cmd_baseline(cli),
        Command::CalibrateN0(args) => cmd_calibrate(cli, args),
    }
}

fn cmd_map(cli: &Cli, args: &MapArgs) -> Result<i32> {
    let mut r = load(cli)?;
    if let Some(pt) = args.pt {
        r.cfg.scene.p_t = pt;
    }
    let room_h = r.cfg.scene.room_h;
    if !(args.height > 0.0 && args.height < room_h) {
        return Err(Error::geometry(format!("--height must lie in (0, {room_h}) m")));
    }
    if !(args.theta > 0.0 && args.theta < 90.0) {
        return Err(Error::geometry("--theta must lie in (0, 90) degrees"));
    }
    let model = CoverageModel::new(r.cfg.scene.clone())?;
    let grid = model.grid(args.height)?;
    let map = model.evaluate(args.height, args.theta.to_radians())?;
    map.write_csv(&grid, create(&cli.out.join("sinr_map.csv"))?)?;

    let mut meta = Metadata::new("map", cli, &r);
    meta.coverage_evaluations = 1;
    meta.map_height_m = Some(args.height);
    meta.map_theta_deg = Some(args.theta);
    meta.coverage_pct = Some(map.coverage_pct);
    meta.write(&cli.out.join("map_metadata.toml"))?;
    println!("coverage={:.2}", map.coverage_pct);
    Ok(0)
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<i32> {
    let mut r = load(cli)?;
    if let Some(n) = args.episodes {
        r.cfg.learning.episodes = n;
    }
    r.cfg.learning.early_stop |= args.early_stop;
    r.cfg.learning.validate()?;
    let hp = r.cfg.learning;

    let mut env = VcselEnv::new(r.cfg.scene.clone(), r.cfg.spaces.clone())?
        .with_order(hp.episode_order, cli.seed);
    let mut q = QTable::new(env.n_states(), env.n_actions(), hp.alpha, hp.gamma);
    let opts = TrainOptions { episodes: hp.episodes, seed: cli.seed, early_stop: hp.early_stop };
    let (policy, log) = agent::train(&mut env, &mut q, &hp.schedule, opts)?;

    policy.write_csv(create(&cli.out.join("policy.csv"))?)?;
    log.write_csv(create(&cli.out.join("trainlog.csv"))?)?;
    let mut meta = Metadata::new("train", cli, &r);
    meta.coverage_evaluations = env.evaluations();
    meta.write(&cli.out.join("run_metadata.toml"))?;

    let last = log.records.last().expect("at least one episode");
    println!(
        "episodes={} final_ma50={:.2} coverage_evaluations={}",
        log.len(),
        last.ma50,
        env.evaluations()
    );
    for e in &policy.entries {
        println!("h={} theta={} coverage={:.2}", e.height_m, e.theta_deg.round(), e.coverage_pct);
    }
    Ok(0)
}

fn cmd_baseline(cli: &Cli) -> Result<i32> {
    let r = load(cli)?;
    let mut env = VcselEnv::new(r.cfg.scene.clone(), r.cfg.spaces.clone())?;
    let res = baseline::exhaustive_policy(&mut env)?;
    res.policy.write_csv(create(&cli.out.join("baseline_policy.csv"))?)?;
    let mut meta = Metadata::new("baseline", cli, &r);
    meta.coverage_evaluations = res.evaluations;
    meta.write(&cli.out.join("baseline_metadata.toml"))?;

    println!("coverage_evaluations={}", res.evaluations);
    for e in &res.policy.entries {
        println!("h={} theta={} coverage={:.2}", e.height_m, e.theta_deg.round(), e.coverage_pct);
    }
    Ok(0)
}

fn cmd_calibrate(cli: &Cli, args: &CalibrateArgs) -> Result<i32> {
    let r = load(cli)?;
    let targets: Vec<TargetRow> = match &args.target_table {
        Some(p) => calibrate::read_targets(File::open(p).map_err(|e| Error::config(format!("{}: {e}", p.display())))?)?,
        None => calibrate::reference_targets(),
    };
    let sweep = N0Sweep { lo: args.n0_lo, hi: args.n0_hi, per_decade: args.per_decade };
    let cal = calibrate::calibrate_n0(&r.cfg.scene, &targets, sweep)?;
    cal.write_report(create(&cli.out.join("calibration_report.csv"))?)?;

    let best = cal.best();
    println!("n0={:e} rms_pp={:.3}", best.n0, best.rms_pp);
    for (t, p) in targets.iter().zip(&best.predicted) {
        println!(
            "h={} theta={} target={:.2} model={:.2}",
            t.height_m, t.theta_deg, t.coverage_pct, p
        );
    }
    if best.rms_pp >= MAX_CALIBRATION_RMS_PP {
        eprintln!(
            "error: best RMS error {:.2} pp is not below {MAX_CALIBRATION_RMS_PP} pp; \
             the model does not fit the target table, no calibration written",
            best.rms_pp
        );
        return Ok(EXIT_CALIBRATION);
    }
    CalibrationFile { n0: best.n0, rms_pp: best.rms_pp }.save(&cli.out.join(CALIBRATION_FILE))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["owc", "map", "--height", "0.5", "--theta", "15", "--seed", "3"]).unwrap();
        assert_eq!(cli.seed, 3);
        assert!(matches!(cli.command, Command::Map(MapArgs { height, .. }) if height == 0.5));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Geometry("x".into())), EXIT_GEOMETRY);
    }

    #[test]
    fn version_starts_with_package_version() {
        assert!(version().starts_with(env!("CARGO_PKG_VERSION")));
    }
}
