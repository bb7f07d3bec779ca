//! The `qcoinflip` command line.
//!
//! Configuration is layered: built-in table values, then `--params-file`
//! (flat JSON object), then individual flags. Every output carries the fully
//! resolved configuration.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acceptance;
use crate::analytics::{
    abort_terms, alice_cheat, bob_cheat_bound, classical_bound, event_probs, honest_abort, ProtocolParams,
};
use crate::channel::{ChannelParams, MeanPhotonNumber};
use crate::optimizer::{
    optimize_with, sweep_figure, Dataset, FairPoint, Figure, KSchedule, SweepGrid, DEFAULT_K_MAX,
    DEFAULT_MU_BRACKET,
};
use crate::oracle::{
    coefficient_grid, verify_conclusive_bound, verify_single_photon_helstrom, verify_two_photon_helstrom,
    DEFAULT_RESOLUTION,
};
use crate::qstate::StateCoefficient;
use crate::simulator::estimate_honest_abort;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

pub const DEFAULT_SEED: u64 = 20_110_512;
pub const DEFAULT_RUNS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0} acceptance criteria failed")]
    Acceptance(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Model(e) => match e {
                crate::Error::TargetUnreachable { .. }
                | crate::Error::NoFeasiblePulseCount { .. }
                | crate::Error::NoFairPoint { .. } => EXIT_UNREACHABLE,
                crate::Error::NoConvergence { .. } => EXIT_IO,
                _ => EXIT_USAGE,
            },
            CliError::Io(_) => EXIT_IO,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated table with a header row.
    Table,
    /// JSON document.
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qcoinflip", version, about = "Practical quantum coin flipping: analytics, simulation and optimization")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat JSON file with channel and protocol parameters.
    #[arg(long, global = true)]
    pub params_file: Option<PathBuf>,
    /// Channel length in km.
    #[arg(long, global = true)]
    pub length_km: Option<f64>,
    /// Honest abort target.
    #[arg(long, global = true)]
    pub abort_target: Option<f64>,
    /// Largest pulse count the optimizer may use.
    #[arg(long, global = true)]
    pub k_max: Option<u32>,
    #[arg(long, global = true)]
    pub mu_min: Option<f64>,
    #[arg(long, global = true)]
    pub mu_max: Option<f64>,
    /// Monte Carlo runs.
    #[arg(long, global = true)]
    pub runs: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (directory for `reproduce`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args, Default)]
pub struct ProtocolArgs {
    /// Pulse count K.
    #[arg(long)]
    pub pulses: Option<u32>,
    /// Mean photon number.
    #[arg(long)]
    pub mu: Option<f64>,
    /// State coefficient a in [0.5, 1].
    #[arg(long = "a")]
    pub a: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form security figures for explicit (K, mu, a).
    Analyze(ProtocolArgs),
    /// Monte Carlo estimate of the honest abort probability.
    Simulate(ProtocolArgs),
    /// Least cheatable fair protocol at the abort target.
    Optimize,
    /// Dataset behind one of the result figures.
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        figure: u8,
        /// Channel lengths in km.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 10.0, 15.0, 21.0])]
        lengths: Vec<f64>,
        /// Honest abort targets; defaults to 0.008..=0.02 in steps of 0.001.
        #[arg(long, value_delimiter = ',')]
        abort_targets: Option<Vec<f64>>,
    },
    /// Run the discrimination oracles.
    Verify {
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Full pipeline: oracles, optimization, simulation, figures, acceptance.
    Reproduce {
        /// Extra channel lengths to include in the region scan.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<f64>,
    },
}

/// Contents of `--params-file`. All keys optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k_loss: Option<f64>,
    pub beta: Option<f64>,
    pub length_km: Option<f64>,
    pub eta: Option<f64>,
    pub dark_count: Option<f64>,
    pub noise: Option<f64>,
    pub pulses: Option<u32>,
    pub mu: Option<f64>,
    pub a: Option<f64>,
    pub abort_target: Option<f64>,
    pub k_max: Option<u32>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Fully resolved configuration echoed in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub channel: ChannelParams,
    pub pulses: Option<u32>,
    pub mu: Option<f64>,
    pub a: Option<f64>,
    pub abort_target: f64,
    pub k_max: u32,
    pub mu_min: f64,
    pub mu_max: f64,
    pub runs: u64,
    pub seed: u64,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(command: &str, common: &CommonArgs, protocol: Option<&ProtocolArgs>) -> Result<Self, CliError> {
        let file = match &common.params_file {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let base = ChannelParams::default();
        let channel = ChannelParams {
            k_loss: file.k_loss.unwrap_or(base.k_loss),
            beta: file.beta.unwrap_or(base.beta),
            length_km: common.length_km.or(file.length_km).unwrap_or(base.length_km),
            eta: file.eta.unwrap_or(base.eta),
            dark_count: file.dark_count.unwrap_or(base.dark_count),
            noise: file.noise.unwrap_or(base.noise),
        };
        channel.validate()?;
        let protocol_flag = |f: fn(&ProtocolArgs) -> Option<f64>| protocol.and_then(f);
        let config = Self {
            command: command.to_string(),
            channel,
            pulses: protocol.and_then(|p| p.pulses).or(file.pulses),
            mu: protocol_flag(|p| p.mu).or(file.mu),
            a: protocol_flag(|p| p.a).or(file.a),
            abort_target: common.abort_target.or(file.abort_target).unwrap_or(acceptance::HEADLINE_TARGET),
            k_max: common.k_max.or(file.k_max).unwrap_or(DEFAULT_K_MAX),
            mu_min: common.mu_min.or(file.mu_min).unwrap_or(DEFAULT_MU_BRACKET.0),
            mu_max: common.mu_max.or(file.mu_max).unwrap_or(DEFAULT_MU_BRACKET.1),
            runs: common.runs.or(file.runs).unwrap_or(DEFAULT_RUNS),
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: common.format.unwrap_or(Format::Table),
        };
        if !(config.mu_min > 0.0 && config.mu_min < config.mu_max) {
            return Err(CliError::Usage(format!(
                "mu bracket [{}, {}] must satisfy 0 < mu_min < mu_max",
                config.mu_min, config.mu_max
            )));
        }
        if config.runs == 0 {
            return Err(CliError::Usage("runs must be at least 1".into()));
        }
        Ok(config)
    }

    /// Explicit protocol parameters; all three must be present.
    pub fn protocol(&self) -> Result<ProtocolParams, CliError> {
        let missing = |name: &str| CliError::Usage(format!("missing --{name}"));
        let pulses = self.pulses.ok_or_else(|| missing("pulses"))?;
        let mu = MeanPhotonNumber::new(self.mu.ok_or_else(|| missing("mu"))?)?;
        let a = StateCoefficient::new(self.a.ok_or_else(|| missing("a"))?)?;
        Ok(ProtocolParams::new(pulses, mu, a)?)
    }

    fn schedule(&self) -> KSchedule {
        KSchedule::new(self.k_max)
    }

    fn bracket(&self) -> (f64, f64) {
        (self.mu_min, self.mu_max)
    }
}

/// Formats `x` with 15 significant digits, trailing zeros removed.
pub fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        let decimals = (14 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.14e}");
        match s.split_once('e') {
            Some((mantissa, exp)) if mantissa.contains('.') => {
                format!("{}e{exp}", mantissa.trim_end_matches('0').trim_end_matches('.'))
            }
            _ => s,
        }
    }
}

fn opt_sig15(x: Option<f64>) -> String {
    x.map(sig15).unwrap_or_default()
}

/// Result of `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub honest_abort: f64,
    pub no_detection: f64,
    pub dark_count_check: f64,
    pub noise_check: f64,
    pub p_alice: f64,
    pub p_bob: f64,
    pub classical: f64,
    pub events: crate::analytics::EventProbs,
}

pub fn analyze(config: &RunConfig) -> Result<Analysis, CliError> {
    let p = config.protocol()?;
    let ch = &config.channel;
    let terms = abort_terms(p.pulses, p.mu, ch);
    let h = honest_abort(&p, ch);
    Ok(Analysis {
        honest_abort: h,
        no_detection: terms.no_detection,
        dark_count_check: terms.dark_count_check,
        noise_check: terms.noise_check,
        p_alice: alice_cheat(p.a),
        p_bob: bob_cheat_bound(&p),
        classical: classical_bound(h),
        events: event_probs(p.pulses, p.mu),
    })
}

const CHANNEL_COLUMNS: [&str; 6] = ["k_loss", "beta", "length_km", "eta", "dark_count", "noise"];

fn channel_cells(ch: &ChannelParams) -> Vec<String> {
    [ch.k_loss, ch.beta, ch.length_km, ch.eta, ch.dark_count, ch.noise]
        .into_iter()
        .map(sig15)
        .collect()
}

fn write_table(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(io::Error::other(e.to_string())))
}

pub fn analysis_table(config: &RunConfig, analysis: &Analysis) -> Result<Vec<u8>, CliError> {
    let mut header: Vec<&str> = CHANNEL_COLUMNS.to_vec();
    header.extend([
        "K", "mu", "a", "H", "no_detection", "dark_count_check", "noise_check", "p_alice", "p_bob", "classical",
        "pA1", "pA2", "pA3", "pA4", "p_rest",
    ]);
    let mut row = channel_cells(&config.channel);
    row.push(config.pulses.map(|k| k.to_string()).unwrap_or_default());
    row.push(opt_sig15(config.mu));
    row.push(opt_sig15(config.a));
    let e = &analysis.events;
    row.extend(
        [
            analysis.honest_abort,
            analysis.no_detection,
            analysis.dark_count_check,
            analysis.noise_check,
            analysis.p_alice,
            analysis.p_bob,
            analysis.classical,
            e.a1,
            e.a2,
            e.a3,
            e.a4,
            e.rest,
        ]
        .into_iter()
        .map(sig15),
    );
    write_table(&header, &[row])
}

pub const FAIR_POINT_COLUMNS: [&str; 8] = ["length_km", "H_target", "K", "mu", "a", "p_cheat", "classical", "advantage"];

fn fair_point_row(p: &FairPoint) -> Vec<String> {
    vec![
        sig15(p.length_km),
        sig15(p.abort_target),
        p.params.pulses.to_string(),
        sig15(p.params.mu.value()),
        sig15(p.params.a.value()),
        sig15(p.p_cheat),
        sig15(p.classical),
        p.advantage.to_string(),
    ]
}

pub fn fair_points_table(points: &[FairPoint]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = points.iter().map(fair_point_row).collect();
    write_table(&FAIR_POINT_COLUMNS, &rows)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    result: &'a T,
}

fn json<T: Serialize>(config: &RunConfig, result: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Envelope { config, result }).expect("outputs serialize");
    out.push(b'\n');
    out
}

fn emit(config: &RunConfig, out: Option<&Path>, table: Vec<u8>, structured: Vec<u8>) -> Result<Vec<u8>, CliError> {
    let body = match config.format {
        Format::Table => table,
        Format::Json => structured.clone(),
    };
    if let Some(path) = out {
        fs::write(path, &body)?;
        if config.format == Format::Table {
            // tables cannot hold the configuration; keep it alongside
            fs::write(sidecar(path), &structured)?;
        }
        return Ok(Vec::new());
    }
    Ok(body)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn dataset_outputs(config: &RunConfig, data: &Dataset) -> Result<(Vec<u8>, Vec<u8>), CliError> {
    Ok((fair_points_table(&data.records)?, json(config, data)))
}

/// Executes a parsed command line; returns what should go to stdout.
pub fn execute(cli: &Cli) -> Result<Vec<u8>, CliError> {
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Analyze(protocol) => {
            let config = RunConfig::resolve("analyze", &cli.common, Some(protocol))?;
            let analysis = analyze(&config)?;
            emit(&config, out, analysis_table(&config, &analysis)?, json(&config, &analysis))
        }
        Command::Simulate(protocol) => {
            let config = RunConfig::resolve("simulate", &cli.common, Some(protocol))?;
            let params = if config.pulses.is_some() || config.mu.is_some() || config.a.is_some() {
                config.protocol()?
            } else {
                optimize_with(&config.channel, config.abort_target, &config.schedule(), config.bracket())?.params
            };
            let report = estimate_honest_abort(&params, &config.channel, config.runs, config.seed);
            let mut header: Vec<&str> = CHANNEL_COLUMNS.to_vec();
            header.extend([
                "K", "mu", "a", "runs", "seed", "completed", "no_detection", "dark_count_check", "noise_check",
                "abort_rate", "standard_error", "analytic_H", "z",
            ]);
            let c = &report.counts;
            let mut row = channel_cells(&config.channel);
            row.extend([
                params.pulses.to_string(),
                sig15(params.mu.value()),
                sig15(params.a.value()),
                report.runs.to_string(),
                report.seed.to_string(),
                c.completed.to_string(),
                c.no_detection.to_string(),
                c.dark_count_check.to_string(),
                c.noise_check.to_string(),
                sig15(report.abort_rate.value),
                sig15(report.abort_rate.standard_error),
                sig15(report.analytic_abort),
                sig15(report.abort_z()),
            ]);
            emit(&config, out, write_table(&header, &[row])?, json(&config, &report))
        }
        Command::Optimize => {
            let config = RunConfig::resolve("optimize", &cli.common, None)?;
            let point = optimize_with(&config.channel, config.abort_target, &config.schedule(), config.bracket())?;
            emit(&config, out, fair_points_table(&[point])?, json(&config, &point))
        }
        Command::Sweep {
            figure,
            lengths,
            abort_targets,
        } => {
            let config = RunConfig::resolve("sweep", &cli.common, None)?;
            let figure = Figure::from_id(*figure).ok_or_else(|| CliError::Usage(format!("unknown figure {figure}")))?;
            let grid = SweepGrid {
                lengths_km: lengths.clone(),
                abort_targets: abort_targets.clone().unwrap_or_else(acceptance::figure_targets),
                k_max: config.k_max,
                mu_bracket: config.bracket(),
            };
            let data = sweep_figure(figure, &config.channel, &grid);
            for s in &data.skipped {
                eprintln!("skipped L = {} km, H = {}: {}", s.length_km, s.abort_target, s.cause);
            }
            let (table, structured) = dataset_outputs(&config, &data)?;
            emit(&config, out, table, structured)
        }
        Command::Verify { resolution } => {
            let config = RunConfig::resolve("verify", &cli.common, None)?;
            let one = verify_single_photon_helstrom(&coefficient_grid(0.01))?;
            let two = verify_two_photon_helstrom(&coefficient_grid(0.01))?;
            let bound = verify_conclusive_bound(&coefficient_grid(0.02), *resolution)?;
            let rows = vec![
                vec![
                    "single_photon_helstrom".to_string(),
                    sig15(one.max_deviation),
                    sig15(one.tolerance),
                    one.passed.to_string(),
                ],
                vec![
                    "two_photon_helstrom".to_string(),
                    sig15(two.max_deviation),
                    sig15(two.tolerance),
                    two.passed.to_string(),
                ],
                vec![
                    "conclusive_bound_gap_min".to_string(),
                    sig15(bound.min_gap),
                    sig15(-crate::oracle::BOUND_TOLERANCE),
                    bound.passed.to_string(),
                ],
            ];
            let table = write_table(&["check", "value", "tolerance", "passed"], &rows)?;
            #[derive(Serialize)]
            struct Verification<'a> {
                single_photon: &'a crate::oracle::HelstromReport,
                two_photon: &'a crate::oracle::HelstromReport,
                bound: &'a crate::oracle::BoundReport,
                passed: bool,
            }
            let passed = one.passed && two.passed && bound.passed;
            let body = emit(
                &config,
                out,
                table,
                json(
                    &config,
                    &Verification {
                        single_photon: &one,
                        two_photon: &two,
                        bound: &bound,
                        passed,
                    },
                ),
            )?;
            if !passed {
                io::stdout().write_all(&body)?;
                return Err(CliError::Acceptance(1));
            }
            Ok(body)
        }
        Command::Reproduce { lengths } => {
            let config = RunConfig::resolve("reproduce", &cli.common, None)?;
            reproduce(&config, lengths, out.unwrap_or(Path::new("reproduction")))
        }
    }
}

/// Runs the acceptance pipeline and writes figure datasets plus a summary
/// into `dir`.
pub fn reproduce(config: &RunConfig, extra_lengths: &[f64], dir: &Path) -> Result<Vec<u8>, CliError> {
    fs::create_dir_all(dir)?;
    let summary = acceptance::run_all(&config.channel, extra_lengths, config.runs, config.seed)?;

    let mut lengths = acceptance::ADVANTAGE_LENGTHS_KM.to_vec();
    for &l in extra_lengths {
        if !lengths.contains(&l) {
            lengths.push(l);
        }
    }
    let grid = SweepGrid {
        lengths_km: lengths,
        abort_targets: acceptance::figure_targets(),
        k_max: config.k_max,
        mu_bracket: config.bracket(),
    };
    for figure in [Figure::AbortVsMu, Figure::CheatVsAbort, Figure::CoefficientVsAbort] {
        let data = sweep_figure(figure, &config.channel, &grid);
        let (table, structured) = dataset_outputs(config, &data)?;
        fs::write(dir.join(format!("{figure}.csv")), table)?;
        fs::write(dir.join(format!("{figure}.json")), structured)?;
    }
    fs::write(dir.join("region.csv"), fair_points_table(&summary.region)?)?;
    fs::write(dir.join("acceptance.json"), json(config, &summary))?;

    let mut report = Vec::new();
    for c in &summary.criteria {
        writeln!(report, "{}", c.line())?;
    }
    let failed = summary.criteria.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        io::stdout().write_all(&report)?;
        return Err(CliError::Acceptance(failed));
    }
    Ok(report)
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(body) => {
            if io::stdout().write_all(&body).is_err() {
                return EXIT_IO;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
