//! Command implementations for `aoa-bench`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use aoa_core::calibration::{estimate_offsets, reference_frames, CalibrationTable, DEFAULT_CALIBRATION_FRAMES};
use aoa_core::channel::{synthesize_snapshot, trace_paths, write_cir, CirMetadata, ImpairmentModel, LinkTruth, Scenario};
use aoa_core::estimators::{
    esprit_estimate, hermitian_eig, music_estimate, music_spectrum, sample_covariance, write_spectrum_csv, Method,
    DEFAULT_GRID_STEP_DEG, DEFAULT_SHIFT,
};
use aoa_core::evaluation::{
    aggregate, load_trajectory, read_records, run_campaign, write_records, CampaignConfig, Trajectory,
};
use aoa_core::geometry::{cylindrical_correction, ground_truth_angles};
use aoa_core::srs::{srs_sequence, SrsConfig};
use aoa_core::Error;

pub const SEED_ENV: &str = "AOA_BENCH_SEED";
pub const DEFAULT_MAX_SPREAD_RAD: f64 = 0.2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("calibration quality gate: residual spread {spread:.4} rad exceeds {limit} rad")]
    QualityGate { spread: f64, limit: f64 },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 0 success, 2 configuration, 3 I/O, 4 calibration quality gate, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::File { .. } => 3,
            CliError::QualityGate { .. } => 4,
            CliError::Core(e) => match e {
                Error::Io(_) => 3,
                Error::Config { .. }
                | Error::Json(_)
                | Error::Parse { .. }
                | Error::OutOfBounds(_)
                | Error::DegenerateGeometry(_)
                | Error::CalibrationUsage(_)
                | Error::Shape(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "aoa-bench", version, about = "Uplink SRS angle-of-arrival benchmark")]
pub struct Cli {
    /// Cap on worker threads used by campaigns.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate per-port phase offsets from a boresight reference UE.
    Calibrate(CalibrateArgs),
    /// Single-shot estimate for one UE position.
    Estimate(EstimateArgs),
    /// Run a trajectory campaign and write records, report and manifest.
    Campaign(CampaignArgs),
    /// Re-aggregate an existing records CSV.
    Report(ReportArgs),
    /// Write a straight-line trajectory CSV.
    Trajectory(TrajectoryArgs),
    /// Export per-step channel impulse responses for a trajectory.
    Cir(CirArgs),
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Scenario preset name or path to a scenario JSON file.
    #[arg(long, default_value = "canyon_o5")]
    pub scenario: String,
    /// Noise seed.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the hardware phase offsets; omit for an ideal receiver.
    #[arg(long)]
    pub impairment_seed: Option<u64>,
    /// SNR in dB; `inf` disables noise.
    #[arg(long, default_value_t = 30.0)]
    pub snr: f64,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_FRAMES)]
    pub frames: usize,
    /// Boresight distance of the reference UE in metres.
    #[arg(long, default_value_t = 20.0)]
    pub distance: f64,
    /// Reject the table when its residual spread exceeds this many radians.
    #[arg(long, default_value_t = DEFAULT_MAX_SPREAD_RAD)]
    pub max_spread: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// UE position as `x,y,z` in metres.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub ue: [f64; 3],
    #[arg(long, default_value = "music")]
    pub method: Method,
    /// Reflection order override for the scenario.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, conflicts_with = "no_calib", required_unless_present = "no_calib")]
    pub calib: Option<PathBuf>,
    /// Skip phase correction.
    #[arg(long)]
    pub no_calib: bool,
    /// Write the MUSIC pseudospectrum as CSV.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long, conflicts_with = "no_calib", required_unless_present = "no_calib")]
    pub calib: Option<PathBuf>,
    /// Negative control: run without phase correction.
    #[arg(long)]
    pub no_calib: bool,
    /// Overrides the config's base seed.
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub from: [f64; 3],
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub to: [f64; 3],
    #[arg(long, default_value_t = 901)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CirArgs {
    #[arg(long, default_value = "canyon_o5")]
    pub scenario: String,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got '{s}'"));
    }
    let mut p = [0.0; 3];
    for (slot, part) in p.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| format!("'{part}' is not a number"))?;
    }
    Ok(p)
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the effective configuration as JSON.
    pub config_sha256: String,
    pub base_seed: u64,
    pub config: serde_json::Value,
    /// Input path → SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value, base_seed: u64) -> Self {
        let canonical = serde_json::to_vec(&config).expect("JSON values always serialize");
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_sha256: sha256_hex(&canonical),
            base_seed,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = read_bytes(path)?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(Error::from)?;
        write_file(path, (text + "\n").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Preset name, or a path to a scenario JSON file.
pub fn load_scenario(spec: &str) -> CliResult<(Scenario, Option<PathBuf>)> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") {
        let bytes = read_bytes(path)?;
        let scenario: Scenario = serde_json::from_slice(&bytes).map_err(Error::from)?;
        scenario.validate()?;
        return Ok((scenario, Some(path.to_path_buf())));
    }
    Ok((Scenario::preset(spec)?, None))
}

fn load_calibration(calib: &Option<PathBuf>) -> CliResult<Option<CalibrationTable>> {
    match calib {
        None => Ok(None),
        Some(path) => {
            let text = String::from_utf8_lossy(&read_bytes(path)?).into_owned();
            Ok(Some(CalibrationTable::from_json(&text)?))
        }
    }
}

fn impairment(session: &SessionArgs, ports: usize) -> ImpairmentModel {
    match session.impairment_seed {
        Some(seed) => ImpairmentModel::random(ports, seed),
        None => ImpairmentModel::none(ports),
    }
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<CalibrationTable> {
    let (scenario, scenario_file) = load_scenario(&args.session.scenario)?;
    if args.frames == 0 {
        return Err(Error::config("frames", "must be at least 1").into());
    }
    if !(args.max_spread >= 0.0) {
        return Err(Error::config("max_spread", "must be non-negative").into());
    }
    let ula = &scenario.ula;
    let srs = srs_sequence(&SrsConfig::default())?;
    let imp = impairment(&args.session, ula.num_elements);
    let frames = reference_frames(ula, &srs, args.frames, args.session.snr, &imp, args.session.seed, args.distance)?;
    let table = estimate_offsets(&frames, &srs)?;
    if table.residual_spread_rad > args.max_spread {
        return Err(CliError::QualityGate {
            spread: table.residual_spread_rad,
            limit: args.max_spread,
        });
    }
    write_file(&args.out, (table.to_json()? + "\n").as_bytes())?;

    let config = serde_json::json!({
        "scenario": args.session.scenario,
        "frames": args.frames,
        "snr_db": json_number(args.session.snr),
        "distance_m": args.distance,
        "impairment_seed": args.session.impairment_seed,
        "max_spread_rad": args.max_spread,
    });
    let mut manifest = RunManifest::new("calibrate", config, args.session.seed);
    if let Some(p) = scenario_file {
        manifest.input(&p)?;
    }
    manifest.outputs.push(args.out.display().to_string());
    manifest.write(&manifest_path(&args.out))?;
    Ok(table)
}

fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub method: Method,
    pub theta_deg: f64,
    pub theta_xy_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_warning: Option<f64>,
    pub truth: LinkTruth,
    pub path_count: usize,
}

pub fn cmd_estimate(args: &EstimateArgs) -> CliResult<EstimateOutput> {
    let (mut scenario, scenario_file) = load_scenario(&args.session.scenario)?;
    if let Some(order) = args.order {
        scenario = scenario.with_order(order);
    }
    let table = if args.no_calib { None } else { load_calibration(&args.calib)? };
    let ula = &scenario.ula;
    let srs = srs_sequence(&SrsConfig::default())?;
    let paths = trace_paths(&scenario, args.ue)?;
    if paths.is_empty() {
        return Err(Error::LinkFailure.into());
    }
    let truth = ground_truth_angles(ula.origin, ula.boresight_azimuth_deg, args.ue)?;
    let is_nlos = !paths.iter().any(|p| p.is_los);
    let imp = impairment(&args.session, ula.num_elements);
    let mut snapshot = synthesize_snapshot(&paths, ula, &srs, args.session.snr, &imp, args.session.seed)?
        .with_truth(LinkTruth::from_geometry(truth, is_nlos));
    if let Some(t) = &table {
        snapshot = aoa_core::apply_correction(&snapshot, t)?;
    }
    let decomp = hermitian_eig(&sample_covariance(&snapshot)?);

    if let Some(path) = &args.spectrum {
        let spectrum = music_spectrum(&decomp, ula, DEFAULT_GRID_STEP_DEG)?;
        let mut buf = Vec::new();
        write_spectrum_csv(&spectrum, &mut buf)?;
        write_file(path, &buf)?;
        let config = serde_json::json!({
            "scenario": args.session.scenario,
            "ue": args.ue,
            "order": args.order,
            "method": args.method,
            "snr_db": json_number(args.session.snr),
            "impairment_seed": args.session.impairment_seed,
            "calibration": !args.no_calib,
        });
        let mut manifest = RunManifest::new("estimate", config, args.session.seed);
        if let Some(p) = &scenario_file {
            manifest.input(p)?;
        }
        if let Some(c) = args.calib.as_ref().filter(|_| !args.no_calib) {
            manifest.input(c)?;
        }
        manifest.outputs.push(path.display().to_string());
        manifest.write(&manifest_path(path))?;
    }
    let estimate = match args.method {
        Method::Music => music_estimate(&music_spectrum(&decomp, ula, DEFAULT_GRID_STEP_DEG)?)?,
        Method::Esprit => esprit_estimate(&decomp, ula, DEFAULT_SHIFT)?,
    };
    let corrected = cylindrical_correction(estimate.theta_deg, &truth.context())?;
    Ok(EstimateOutput {
        method: args.method,
        theta_deg: estimate.theta_deg,
        theta_xy_deg: corrected.theta_xy_deg,
        range_warning: corrected.range_warning,
        truth: LinkTruth::from_geometry(truth, is_nlos),
        path_count: paths.len(),
    })
}

pub const RECORDS_FILE: &str = "records.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn cmd_campaign(args: &CampaignArgs) -> CliResult<PathBuf> {
    let config_text = String::from_utf8_lossy(&read_bytes(&args.config)?).into_owned();
    let mut cfg = CampaignConfig::from_json(&config_text)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    let traj = load_trajectory(&args.trajectory).map_err(|e| match e {
        Error::Io(source) => CliError::File { path: args.trajectory.clone(), source },
        other => other.into(),
    })?;
    let table = if args.no_calib { None } else { load_calibration(&args.calib)? };
    let records = run_campaign(&cfg, &traj, table.as_ref())?;

    let records_path = args.out.join(RECORDS_FILE);
    let report_path = args.out.join(REPORT_FILE);
    let mut buf = Vec::new();
    write_records(&records, &mut buf)?;
    write_file(&records_path, &buf)?;
    let report = aggregate(&records)?;
    write_file(&report_path, (report.to_json()? + "\n").as_bytes())?;

    let effective = serde_json::json!({
        "campaign": serde_json::to_value(&cfg).map_err(Error::from)?,
        "calibration": !args.no_calib,
    });
    let mut manifest = RunManifest::new("campaign", effective, cfg.base_seed);
    manifest.input(&args.config)?;
    manifest.input(&args.trajectory)?;
    if let Some(c) = &args.calib {
        manifest.input(c)?;
    }
    manifest.outputs = vec![records_path.display().to_string(), report_path.display().to_string()];
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    Ok(args.out.clone())
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let bytes = read_bytes(&args.records)?;
    let records = read_records(bytes.as_slice())?;
    let report = aggregate(&records)?;
    write_file(&args.out, (report.to_json()? + "\n").as_bytes())?;
    let mut manifest = RunManifest::new("report", serde_json::json!({}), 0);
    manifest.input(&args.records)?;
    manifest.outputs.push(args.out.display().to_string());
    manifest.write(&manifest_path(&args.out))
}

pub fn cmd_trajectory(args: &TrajectoryArgs) -> CliResult<()> {
    if args.steps == 0 {
        return Err(Error::config("steps", "must be at least 1").into());
    }
    let traj = Trajectory::straight_line(args.from, args.to, args.steps);
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    write_file(&args.out, &buf)?;
    let config = serde_json::json!({"from": args.from, "to": args.to, "steps": args.steps});
    let mut manifest = RunManifest::new("trajectory", config, 0);
    manifest.outputs.push(args.out.display().to_string());
    manifest.write(&manifest_path(&args.out))
}

pub fn cmd_cir(args: &CirArgs) -> CliResult<usize> {
    let (mut scenario, scenario_file) = load_scenario(&args.scenario)?;
    if let Some(order) = args.order {
        scenario = scenario.with_order(order);
    }
    let traj = load_trajectory(&args.trajectory)?;
    let mut manifest = RunManifest::new("cir", serde_json::json!({"scenario": args.scenario, "order": args.order}), 0);
    manifest.input(&args.trajectory)?;
    if let Some(p) = &scenario_file {
        manifest.input(p)?;
    }
    fs::create_dir_all(&args.out).map_err(|source| CliError::File { path: args.out.clone(), source })?;
    for step in &traj.steps {
        let paths = trace_paths(&scenario, step.position)?;
        let meta = CirMetadata {
            carrier_hz: scenario.ula.carrier_hz,
            step: step.k as usize,
            delta_z_m: scenario.ula.origin[2] - step.position[2],
        };
        manifest.outputs.push(write_cir(&args.out, &paths, &meta)?.display().to_string());
    }
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    Ok(traj.len())
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Calibrate(args) => {
            let table = cmd_calibrate(args)?;
            println!(
                "wrote {} (residual spread {:.4} rad over {} frames)",
                args.out.display(),
                table.residual_spread_rad,
                table.num_frames_averaged
            );
        }
        Command::Estimate(args) => {
            let out = cmd_estimate(args)?;
            println!("{}", serde_json::to_string(&out).map_err(Error::from)?);
        }
        Command::Campaign(args) => {
            let dir = cmd_campaign(args)?;
            println!("wrote {RECORDS_FILE}, {REPORT_FILE} and {MANIFEST_FILE} to {}", dir.display());
        }
        Command::Report(args) => {
            cmd_report(args)?;
            println!("wrote {}", args.out.display());
        }
        Command::Trajectory(args) => {
            cmd_trajectory(args)?;
            println!("wrote {}", args.out.display());
        }
        Command::Cir(args) => {
            let n = cmd_cir(args)?;
            println!("wrote {n} impulse responses to {}", args.out.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("1, -2.5,3").unwrap(), [1.0, -2.5, 3.0]);
        assert!(parse_point("1,2").is_err());
        assert!(parse_point("a,b,c").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::config("x", "y")).exit_code(), 2);
        assert_eq!(CliError::QualityGate { spread: 1.0, limit: 0.2 }.exit_code(), 4);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::File { path: "a".into(), source: io }.exit_code(), 3);
        assert_eq!(CliError::from(Error::LinkFailure).exit_code(), 1);
    }

    #[test]
    fn manifest_hash_tracks_config() {
        let a = RunManifest::new("x", serde_json::json!({"a": 1}), 3);
        let b = RunManifest::new("x", serde_json::json!({"a": 1}), 3);
        let c = RunManifest::new("x", serde_json::json!({"a": 2}), 3);
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/calib.json")), Path::new("out/calib.json.manifest.json"));
    }
}
