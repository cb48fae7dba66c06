//! The `optosim` command line: one subcommand per experiment, TOML config
//! files, CSV/JSON results and a `manifest.json` per run.
//!
//! Values resolve as flags, then config file, then built-in defaults. Every
//! result file is written atomically; the manifest echoes the resolved
//! config and is the only file carrying a timestamp.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, Hydrophone, Interpolation, SourceLevelTable};
use crate::cloud::{self, CloudError, CloudParams};
use crate::codec::{self, Scheme, SlotStream};
use crate::linksim::{self, ExperimentConfig, LinkBudget, OokBaseline, SimError};
use crate::output::write_atomic;
use crate::rates::{self, RateError};

pub const SCHEMA_VERSION: u32 = 1;
pub const SAMPLE_CORPUS: &str = include_str!("../data/sample_corpus.txt");
pub const SAMPLE_SOURCE_LEVELS: &str = include_str!("../data/source_levels.csv");
pub const THREADS_ENV: &str = "OPTOSIM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "optosim",
    version,
    about = "Vapor-cloud-aware pulse modulation and underwater link simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bit rate, padding, rate limit and power efficiency sweep.
    Rates(RatesArgs),
    /// Run a repeating 0/1 pattern through the vapor-cloud model.
    Cloud(CloudArgs),
    /// Text throughput of every scheme on a corpus.
    Textsim(TextsimArgs),
    /// Monte Carlo BER over distances and receiver angles.
    Ber(BerArgs),
    /// Convert a source-level or hydrophone-voltage CSV into a table.
    CalibrateSl(CalibrateSlArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write only this format; both when omitted where both exist.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    /// Vapor-cloud decay time, seconds.
    #[arg(long)]
    pub t_v: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CloudArgs {
    #[command(flatten)]
    pub common: Common,
    /// Chip pattern such as `11000`.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Chip rate, Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub t_v: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TextsimArgs {
    #[command(flatten)]
    pub common: Common,
    /// Plain-text corpus; the bundled sample when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub ook_baseline: Option<OokBaselineArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OokBaselineArg {
    RMax,
    SameRate,
}

impl From<OokBaselineArg> for OokBaseline {
    fn from(a: OokBaselineArg) -> Self {
        match a {
            OokBaselineArg::RMax => OokBaseline::RMax,
            OokBaselineArg::SameRate => OokBaseline::SameRate,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Run only this scheme instead of the configured list.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub order_m: Option<u32>,
    /// Laser rate, Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub angles: Option<Vec<f64>>,
    /// Fixed per-slot SNR instead of the link budget.
    #[arg(long, conflicts_with = "noiseless", allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub noiseless: bool,
    /// Source-level CSV for the link budget.
    #[arg(long)]
    pub source_levels: Option<PathBuf>,
    #[arg(long)]
    pub no_cloud: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateSlArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with `energy_mj,angle_deg` and either `sl_db` or `vpp_volts`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Hydrophone sensitivity, dB re 1 V/uPa.
    #[arg(long, allow_negative_numbers = true)]
    pub sensitivity_db: Option<f64>,
    /// Source-to-hydrophone distance of the measurement, metres.
    #[arg(long)]
    pub hydrophone_distance_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub timestamp: String,
}

#[derive(Serialize)]
struct Records<'a, T> {
    schema_version: u32,
    kind: &'a str,
    records: &'a [T],
}

fn records_json<T: Serialize>(kind: &str, records: &[T]) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(&Records {
        schema_version: SCHEMA_VERSION,
        kind,
        records,
    })
    .expect("results serialize");
    v.push(b'\n');
    v
}

fn read_toml(path: &Path) -> Result<toml::Table, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.parse::<toml::Table>().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn from_table<T: DeserializeOwned>(table: toml::Table, path: &Path) -> Result<T, CliError> {
    T::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_or_default<T: DeserializeOwned + Default>(config: &Option<PathBuf>) -> Result<T, CliError> {
    match config {
        Some(p) => from_table(read_toml(p)?, p),
        None => Ok(T::default()),
    }
}

/// Relative paths in a config file are taken from the file's directory.
fn relative_to(config: &Option<PathBuf>, p: &Path) -> PathBuf {
    match config.as_ref().and_then(|c| c.parent()) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    fn finish<C: Serialize>(self, subcommand: &str, config: &C) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            outputs: self.written,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(io_err(&path))?;
        Ok(manifest)
    }
}

fn wants(format: Option<Format>, f: Format) -> bool {
    format.is_none_or(|x| x == f)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesConfig {
    pub orders: Vec<u32>,
    pub rates_hz: Vec<f64>,
    pub cloud: CloudParams,
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            orders: (1..=8).collect(),
            rates_hz: vec![16.0, 32.0, 40.0, 300.0],
            cloud: CloudParams::default(),
        }
    }
}

pub fn cmd_rates(args: &RatesArgs) -> Result<RunManifest, CliError> {
    let mut cfg: RatesConfig = load_or_default(&args.common.config)?;
    if let Some(o) = &args.orders {
        cfg.orders = o.clone();
    }
    if let Some(r) = &args.rates {
        cfg.rates_hz = r.clone();
    }
    if let Some(t) = args.t_v {
        cfg.cloud.t_v_s = t;
    }
    if cfg.orders.is_empty() || cfg.rates_hz.is_empty() {
        return Err(CliError::Usage("orders and rates must be non-empty".into()));
    }
    if let Some(m) = cfg.orders.iter().find(|&&m| m == 0 || m > codec::MAX_ORDER) {
        return Err(CliError::Usage(format!(
            "order {m} outside 1..={}",
            codec::MAX_ORDER
        )));
    }
    if let Some(r) = cfg.rates_hz.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(CliError::Usage(format!("rate {r} must be positive")));
    }
    cfg.cloud
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let rows = rates::rate_sweep(&cfg.orders, &cfg.rates_hz, &cfg.cloud)?;
    let mut out = Outputs::new(&args.common.out);
    if wants(args.common.format, Format::Csv) {
        let mut buf = Vec::new();
        rates::write_sweep_csv(&rows, &mut buf).expect("writing to memory");
        out.write("rates.csv", &buf)?;
    }
    if wants(args.common.format, Format::Json) {
        out.write("rates.json", &records_json("rates", &rows))?;
    }
    out.finish("rates", &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudConfig {
    pub pattern: Option<String>,
    pub rate_hz: f64,
    pub repeats: usize,
    pub cloud: CloudParams,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig {
            pattern: None,
            rate_hz: 16.0,
            repeats: 1,
            cloud: CloudParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CloudSummary {
    pub pattern: String,
    pub rate_hz: f64,
    pub pulses: usize,
    pub suppressed: usize,
    pub first_suppression: Option<usize>,
}

pub fn cmd_cloud(args: &CloudArgs) -> Result<RunManifest, CliError> {
    let mut cfg: CloudConfig = load_or_default(&args.common.config)?;
    if let Some(p) = &args.pattern {
        cfg.pattern = Some(p.clone());
    }
    if let Some(r) = args.rate {
        cfg.rate_hz = r;
    }
    if let Some(n) = args.repeats {
        cfg.repeats = n;
    }
    if let Some(t) = args.t_v {
        cfg.cloud.t_v_s = t;
    }
    let pattern = cfg
        .pattern
        .clone()
        .ok_or_else(|| CliError::Usage("a pattern is required".into()))?;
    if cfg.repeats == 0 {
        return Err(CliError::Usage("repeats must be positive".into()));
    }
    let stream = SlotStream::from_pattern(&pattern, cfg.repeats, cfg.rate_hz)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let trace = cloud::simulate_train(&stream, &cfg.cloud)?;
    let summary = CloudSummary {
        pattern: pattern.clone(),
        rate_hz: cfg.rate_hz,
        pulses: trace.pulses(),
        suppressed: trace.suppressed(),
        first_suppression: trace.first_suppression(),
    };
    println!(
        "pulses={} suppressed={} first_suppression={}",
        summary.pulses,
        summary.suppressed,
        summary
            .first_suppression
            .map_or_else(|| "none".to_string(), |i| i.to_string())
    );

    let mut out = Outputs::new(&args.common.out);
    if wants(args.common.format, Format::Csv) {
        out.write("cloud_trace.csv", trace.to_csv().as_bytes())?;
    }
    if wants(args.common.format, Format::Json) {
        out.write("cloud_summary.json", &records_json("cloud", &[summary]))?;
    }
    out.finish("cloud", &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextsimConfig {
    /// Bundled sample corpus when absent.
    pub corpus: Option<PathBuf>,
    pub rates_hz: Vec<f64>,
    pub ook_baseline: OokBaseline,
    pub cloud: CloudParams,
}

impl Default for TextsimConfig {
    fn default() -> Self {
        TextsimConfig {
            corpus: None,
            rates_hz: vec![40.0, 10_000.0],
            ook_baseline: OokBaseline::RMax,
            cloud: CloudParams::default(),
        }
    }
}

pub fn cmd_textsim(args: &TextsimArgs) -> Result<RunManifest, CliError> {
    let mut cfg: TextsimConfig = load_or_default(&args.common.config)?;
    if let Some(p) = &cfg.corpus {
        cfg.corpus = Some(relative_to(&args.common.config, p));
    }
    if let Some(p) = &args.corpus {
        cfg.corpus = Some(p.clone());
    }
    if let Some(r) = &args.rates {
        cfg.rates_hz = r.clone();
    }
    if let Some(b) = args.ook_baseline {
        cfg.ook_baseline = b.into();
    }
    if cfg.rates_hz.is_empty() {
        return Err(CliError::Usage("rates must be non-empty".into()));
    }
    let corpus = match &cfg.corpus {
        Some(p) => codec::latin1_to_string(&fs::read(p).map_err(io_err(p))?),
        None => SAMPLE_CORPUS.to_string(),
    };

    let pool = thread_pool()?;
    let results = pool.install(|| {
        cfg.rates_hz
            .par_iter()
            .map(|&r| {
                let mut e = ExperimentConfig::new(Scheme::VcdDppm, 1, r);
                e.cloud = cfg.cloud;
                e.ook_baseline = cfg.ook_baseline;
                linksim::run_text_sim(&e, &corpus)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut out = Outputs::new(&args.common.out);
    if wants(args.common.format, Format::Csv) {
        let mut buf = Vec::new();
        linksim::write_textsim_csv(&results, &mut buf).expect("writing to memory");
        out.write("textsim.csv", &buf)?;
    }
    if wants(args.common.format, Format::Json) {
        out.write("textsim.json", &records_json("textsim", &results))?;
    }
    out.finish("textsim", &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSweep {
    pub schemes: Vec<Scheme>,
    pub distances_m: Vec<f64>,
    pub angles_deg: Vec<f64>,
    /// Run each scheme at the lower of the laser rate and its cloud limit.
    pub clamp_to_limit: bool,
}

impl Default for BerSweep {
    fn default() -> Self {
        BerSweep {
            schemes: vec![Scheme::Ook, Scheme::VcdDppm],
            distances_m: vec![100.0, 250.0, 500.0],
            angles_deg: vec![0.0, 45.0, 90.0],
            clamp_to_limit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerConfig {
    pub experiment: ExperimentConfig,
    pub sweep: BerSweep,
}

fn default_experiment() -> ExperimentConfig {
    let mut e = ExperimentConfig::new(Scheme::VcdDppm, 4, 40.0);
    e.seed = 1;
    e.link = LinkBudget::Calibrated {
        source_levels: SourceLevelTable::from_csv(SAMPLE_SOURCE_LEVELS.as_bytes(), None)
            .expect("bundled table is valid"),
        interpolation: Interpolation::Exact,
    };
    e
}

/// Merges a config file over the defaults. `laser`, `cloud` and `channel`
/// merge key by key; `link` and everything else replace. A
/// `link.source_levels_csv` path is read into the table.
fn resolve_ber_file(path: &Path, mut file: toml::Table) -> Result<BerConfig, CliError> {
    let sweep = match file.remove("sweep") {
        Some(toml::Value::Table(t)) => from_table(t, path)?,
        Some(_) => {
            return Err(CliError::Config {
                path: path.to_path_buf(),
                message: "sweep must be a table".into(),
            })
        }
        None => BerSweep::default(),
    };
    if let Some(toml::Value::Table(link)) = file.get_mut("link") {
        if let Some(v) = link.remove("source_levels_csv") {
            let rel = v.as_str().ok_or_else(|| CliError::Config {
                path: path.to_path_buf(),
                message: "link.source_levels_csv must be a path".into(),
            })?;
            let csv_path = relative_to(&Some(path.to_path_buf()), Path::new(rel));
            let text = fs::read(&csv_path).map_err(io_err(&csv_path))?;
            let table = SourceLevelTable::from_csv(text.as_slice(), None)?;
            link.insert(
                "source_levels".into(),
                toml::Value::try_from(table).expect("table serializes"),
            );
        }
    }
    let toml::Value::Table(mut merged) =
        toml::Value::try_from(default_experiment()).expect("defaults serialize")
    else {
        unreachable!("struct serializes to a table")
    };
    for (k, v) in file {
        match (merged.get_mut(&k), v) {
            (Some(toml::Value::Table(base)), toml::Value::Table(over))
                if matches!(k.as_str(), "laser" | "cloud" | "channel") =>
            {
                base.extend(over);
            }
            (_, v) => {
                merged.insert(k, v);
            }
        }
    }
    Ok(BerConfig {
        experiment: from_table(merged, path)?,
        sweep,
    })
}

pub fn cmd_ber(args: &BerArgs) -> Result<RunManifest, CliError> {
    let mut cfg = match &args.common.config {
        Some(p) => resolve_ber_file(p, read_toml(p)?)?,
        None => BerConfig {
            experiment: default_experiment(),
            sweep: BerSweep::default(),
        },
    };
    let e = &mut cfg.experiment;
    if let Some(s) = args.common.seed {
        e.seed = s;
    }
    if let Some(s) = args.scheme {
        cfg.sweep.schemes = vec![s];
    }
    if let Some(m) = args.order_m {
        e.order_m = m;
    }
    if let Some(r) = args.rate {
        e.laser.r_l_hz = r;
    }
    if let Some(n) = args.bits {
        e.n_data_bits = n;
    }
    if let Some(d) = &args.distances {
        cfg.sweep.distances_m = d.clone();
    }
    if let Some(a) = &args.angles {
        cfg.sweep.angles_deg = a.clone();
    }
    if let Some(p) = &args.source_levels {
        let text = fs::read(p).map_err(io_err(p))?;
        e.link = LinkBudget::Calibrated {
            source_levels: SourceLevelTable::from_csv(text.as_slice(), None)?,
            interpolation: Interpolation::Exact,
        };
    }
    if let Some(snr_db) = args.snr_db {
        e.link = LinkBudget::FixedSnr { snr_db };
    }
    if args.noiseless {
        e.link = LinkBudget::Noiseless;
    }
    if args.no_cloud {
        e.cloud_gating = false;
    }
    let sw = &cfg.sweep;
    if sw.schemes.is_empty() || sw.distances_m.is_empty() || sw.angles_deg.is_empty() {
        return Err(CliError::Usage(
            "schemes, distances and angles must be non-empty".into(),
        ));
    }

    let mut points = Vec::new();
    for &scheme in &sw.schemes {
        for &d in &sw.distances_m {
            for &a in &sw.angles_deg {
                let mut p = cfg.experiment.clone();
                p.scheme = scheme;
                p.channel.distance_m = d;
                p.channel.angle_deg = a;
                if scheme != Scheme::VcdDppm {
                    p.padding_n0 = None;
                }
                if sw.clamp_to_limit {
                    let limit = rates::max_allowed_rate(scheme, &p.cloud, p.order_m)?.rate_hz;
                    p.laser.r_l_hz = p.laser.r_l_hz.min(limit);
                }
                p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                points.push(p);
            }
        }
    }
    let pool = thread_pool()?;
    let results = pool.install(|| {
        points
            .par_iter()
            .map(linksim::run_ber)
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut out = Outputs::new(&args.common.out);
    if wants(args.common.format, Format::Csv) {
        let mut buf = Vec::new();
        linksim::write_ber_csv(&results, &mut buf).expect("writing to memory");
        out.write("ber.csv", &buf)?;
    }
    if wants(args.common.format, Format::Json) {
        out.write("ber.json", &records_json("ber", &results))?;
    }
    out.finish("ber", &cfg)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSlConfig {
    pub input: Option<PathBuf>,
    pub hydrophone: Option<Hydrophone>,
}

pub fn cmd_calibrate_sl(args: &CalibrateSlArgs) -> Result<RunManifest, CliError> {
    let mut cfg: CalibrateSlConfig = load_or_default(&args.common.config)?;
    if let Some(p) = &cfg.input {
        cfg.input = Some(relative_to(&args.common.config, p));
    }
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    match (args.sensitivity_db, args.hydrophone_distance_m) {
        (Some(sensitivity_db), Some(distance_m)) => {
            cfg.hydrophone = Some(Hydrophone {
                sensitivity_db,
                distance_m,
            })
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Usage(
                "--sensitivity-db and --hydrophone-distance-m go together".into(),
            ))
        }
    }
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Usage("an input CSV is required".into()))?;
    let bytes = fs::read(&input).map_err(io_err(&input))?;
    let table = SourceLevelTable::from_csv(bytes.as_slice(), cfg.hydrophone.as_ref())?;

    let mut out = Outputs::new(&args.common.out);
    if wants(args.common.format, Format::Csv) {
        out.write("source_levels.csv", table.to_csv().as_bytes())?;
    }
    if wants(args.common.format, Format::Json) {
        out.write(
            "source_levels.json",
            &records_json("source-levels", table.rows()),
        )?;
    }
    out.finish("calibrate-sl", &cfg)
}

pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    match &cli.command {
        Command::Rates(a) => cmd_rates(a),
        Command::Cloud(a) => cmd_cloud(a),
        Command::Textsim(a) => cmd_textsim(a),
        Command::Ber(a) => cmd_ber(a),
        Command::CalibrateSl(a) => cmd_calibrate_sl(a),
    }
}

/// Parses `std::env::args`, runs, and maps errors to an exit status.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(m) => {
            for p in &m.outputs {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
