//! The `wofdm` command-line front end.
//!
//! ```text
//! wofdm analyze  --system all --channel-model veh200 --cp-sweep 0:40 --out out/
//! wofdm simulate --system CP,WOLA --channel-model ped200 --snr 0:5:40 --trials 50
//! wofdm rate     --channel-model ped200 --snr 5 --cp-sweep 0:40 --target-ser 1e-3
//! ```
//!
//! Every flag can also come from a TOML file given with `--config`; flags
//! win over the file. Keys:
//!
//! | key             | type            | flag              |
//! |-----------------|-----------------|-------------------|
//! | `systems`       | list of names   | `--system`        |
//! | `custom`        | list of tables  | (file only)       |
//! | `n`, `mu`       | integers        | `--n`, `--mu`     |
//! | `beta`, `delta` | integers        | `--beta`, `--delta` |
//! | `channel_model` | string          | `--channel-model` |
//! | `channel_file`  | path            | `--channel-file`  |
//! | `snr_db`        | list of numbers | `--snr`           |
//! | `cp_sweep`      | list of integers| `--cp-sweep`      |
//! | `trials`        | integer         | `--trials`        |
//! | `blocks`        | integer         | `--blocks`        |
//! | `seed`          | integer         | `--seed`          |
//! | `target_ser`    | number          | `--target-ser`    |
//! | `fs`            | number (Hz)     | `--fs`            |
//! | `snr_reference` | `mean` / `realization` | `--snr-reference` |
//! | `out`           | path            | `--out`           |
//! | `format`        | `csv` / `json`  | `--format`        |
//!
//! `custom` entries use the keys of [`SystemConfig`].
//!
//! Exit status: 0 on success, 2 for usage or configuration errors, 3 when
//! a computation or output step fails.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    data_rate, decompose, interference_powers, noise_power, noise_variance_for_snr, signal_power, sinr,
    InterferenceReport, RateParams,
};
use crate::channels::{deterministic_channel, ChannelEnsembleSpec, ChannelModel, Cir};
use crate::engine::EquivalentChannel;
use crate::error::Error;
use crate::link_sim::{run_campaign, ChannelSource, SimConfig, SimResult, SnrReference, SystemSetup};
use crate::report::{
    read_campaign_csv, write_analysis_csv, write_campaign_csv, write_json, write_rate_csv, write_sweep_csv, RateRow,
    SweepRow,
};
use crate::sysparams::{SystemConfig, SystemKind, SystemParams, REFERENCE_MU, REFERENCE_N, REFERENCE_RX_TAIL, REFERENCE_TX_TAIL};
use crate::windowing::WindowPair;

/// Subcarrier spacing of the reference experiments (Hz), echoed in metadata.
pub const REFERENCE_SPACING_HZ: f64 = 11_160.714_92;

#[derive(Debug, Parser)]
#[command(name = "wofdm", version, about = "Windowed OFDM interference analysis and link simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form per-subcarrier powers, SINR and (optionally) CP sweeps.
    Analyze(CommonArgs),
    /// Monte Carlo SER campaign.
    Simulate(CommonArgs),
    /// Achievable rate versus SNR and CP length.
    Rate(RateArgs),
    /// Print the preset table for given N and mu.
    Presets(PresetArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SnrRef {
    /// Mean channel energy of the source.
    Mean,
    /// Energy of each realization.
    Realization,
}

#[derive(Clone, Debug, Default, Args, Serialize)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated system names (CP, wtx, wrx, WOLA, CPW, CPwtx, CPwrx) or `all`.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// CP length.
    #[arg(long)]
    pub mu: Option<usize>,
    /// Tx tail length for kinds with a Tx window.
    #[arg(long)]
    pub beta: Option<usize>,
    /// Rx tail length for kinds with an Rx window.
    #[arg(long)]
    pub delta: Option<usize>,
    /// `ped200`, `veh200`, `pdp:<file>` or a fixture such as `two_ray(0.5,3)`.
    #[arg(long)]
    pub channel_model: Option<String>,
    /// Channel impulse response file (`re,im` per line).
    #[arg(long)]
    pub channel_file: Option<PathBuf>,
    /// SNR grid in dB: `a,b,c` or `start:step:stop`.
    #[arg(long)]
    pub snr: Option<String>,
    /// CP lengths to sweep: `a,b,c`, `start:stop` or `start:step:stop`.
    #[arg(long)]
    pub cp_sweep: Option<String>,
    /// Channel realizations (and simulation trials).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Blocks per simulation trial, warm-up included.
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target SER for the SINR gap.
    #[arg(long)]
    pub target_ser: Option<f64>,
    /// Sample rate in Hz (default `1/Ts` of the channel).
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long, value_enum)]
    pub snr_reference: Option<SnrRef>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Default, Args, Serialize)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Campaign CSV from `simulate`; its SER per (system, SNR) sets the gap.
    #[arg(long)]
    pub ser_table: Option<PathBuf>,
    /// Run a campaign first and take the gap from its SER.
    #[arg(long)]
    pub chain: bool,
}

#[derive(Clone, Debug, Args)]
pub struct PresetArgs {
    #[arg(long, default_value_t = REFERENCE_N)]
    pub n: usize,
    #[arg(long, default_value_t = REFERENCE_MU)]
    pub mu: usize,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub systems: Option<Vec<String>>,
    pub custom: Option<Vec<SystemConfig>>,
    pub n: Option<usize>,
    pub mu: Option<usize>,
    pub beta: Option<usize>,
    pub delta: Option<usize>,
    pub channel_model: Option<String>,
    pub channel_file: Option<PathBuf>,
    pub snr_db: Option<Vec<f64>>,
    pub cp_sweep: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub blocks: Option<usize>,
    pub seed: Option<u64>,
    pub target_ser: Option<f64>,
    pub fs: Option<f64>,
    pub snr_reference: Option<SnrRef>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> crate::Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `a,b,c`, `start:stop` (step 1) or `start:step:stop`.
pub fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let (start, step, stop) = match parts[..] {
            [a, b] => (a, 1.0, b),
            [a, st, b] => (a, st, b),
            _ => return Err(format!("range '{s}' must be start:stop or start:step:stop")),
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(format!("range '{s}' is empty or has a non-positive step"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        let v: Vec<f64> = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if v.is_empty() {
            return Err("empty grid".into());
        }
        Ok(v)
    }
}

fn parse_int_grid(s: &str) -> std::result::Result<Vec<usize>, String> {
    parse_grid(s)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("'{v}' is not a non-negative integer"))
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
enum Channels {
    Ensemble(ChannelEnsembleSpec),
    Fixed { cir: Cir, label: String },
}

impl Channels {
    fn label(&self) -> String {
        match self {
            Channels::Ensemble(s) => s.model.name().to_string(),
            Channels::Fixed { label, .. } => label.clone(),
        }
    }

    fn realizations(&self) -> crate::Result<Vec<Cir>> {
        match self {
            Channels::Ensemble(s) => s.realizations(),
            Channels::Fixed { cir, .. } => Ok(vec![cir.clone()]),
        }
    }

    fn mean_energy(&self) -> f64 {
        match self {
            Channels::Ensemble(_) => 1.0,
            Channels::Fixed { cir, .. } => cir.energy(),
        }
    }

    fn ts(&self) -> f64 {
        match self {
            Channels::Ensemble(s) => s.ts,
            Channels::Fixed { cir, .. } => cir.ts(),
        }
    }

    fn source(&self) -> ChannelSource {
        match self {
            Channels::Ensemble(s) => ChannelSource::Ensemble(s.clone()),
            Channels::Fixed { cir, label } => ChannelSource::Fixed { cir: cir.clone(), label: label.clone() },
        }
    }
}

/// Named kinds and custom systems after merging flags and config.
#[derive(Clone, Debug)]
struct Resolved {
    kinds: Vec<SystemKind>,
    custom: Vec<SystemParams>,
    n: usize,
    mu: usize,
    beta: usize,
    delta: usize,
    channels: Channels,
    snr_db: Vec<f64>,
    cp_sweep: Option<Vec<usize>>,
    trials: usize,
    blocks: usize,
    seed: u64,
    target_ser: Option<f64>,
    fs: f64,
    snr_reference: SnrReference,
    out: PathBuf,
    format: Format,
    file: RunConfig,
}

impl Resolved {
    fn params(&self, kind: SystemKind, mu: usize) -> crate::Result<SystemParams> {
        let row = kind.preset();
        let beta = if row.tx_window { self.beta } else { 0 };
        let delta = if row.rx_window { self.delta } else { 0 };
        SystemParams::preset(kind, self.n, mu, beta, delta)
    }

    /// Systems at the base CP length.
    fn setups(&self) -> CliResult<Vec<SystemSetup>> {
        let mut v = Vec::new();
        for &k in &self.kinds {
            v.push(SystemSetup::new(self.params(k, self.mu).map_err(config_err)?));
        }
        v.extend(self.custom.iter().copied().map(SystemSetup::new));
        Ok(v)
    }

    fn sigma_n2(&self, snr_db: f64, n: usize) -> f64 {
        noise_variance_for_snr(snr_db, 1.0, self.channels.mean_energy(), n)
    }
}

fn resolve(args: &CommonArgs) -> CliResult<Resolved> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(config_err)?
        }
        None => RunConfig::default(),
    };

    let names: Vec<String> = match (&args.system, &file.systems) {
        (Some(s), _) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
        (None, Some(v)) => v.clone(),
        (None, None) if file.custom.is_some() => Vec::new(),
        (None, None) => vec!["all".into()],
    };
    let mut kinds = Vec::new();
    for name in &names {
        if name.eq_ignore_ascii_case("all") {
            kinds.extend(SystemKind::ALL);
        } else {
            kinds.push(name.parse::<SystemKind>().map_err(config_err)?);
        }
    }
    let mut seen = std::collections::HashSet::new();
    kinds.retain(|k| seen.insert(*k));
    let custom = file
        .custom
        .iter()
        .flatten()
        .map(SystemConfig::to_params)
        .collect::<crate::Result<Vec<_>>>()
        .map_err(config_err)?;
    if kinds.is_empty() && custom.is_empty() {
        return Err(config_err("no systems selected"));
    }

    let trials = args.trials.or(file.trials).unwrap_or(50);
    let seed = args.seed.or(file.seed).unwrap_or(1);
    let channel_file = args.channel_file.clone().or(file.channel_file.clone());
    let channel_model = args.channel_model.clone().or(file.channel_model.clone());
    let channels = match (channel_file, channel_model) {
        (Some(path), _) => {
            let cir = Cir::from_file(&path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "file".into());
            Channels::Fixed { cir, label }
        }
        (None, Some(name)) => match ChannelModel::from_name(&name) {
            Ok(model) => Channels::Ensemble(ChannelEnsembleSpec::for_model(model, trials, seed)),
            Err(Error::UnknownChannel(_)) => Channels::Fixed {
                cir: deterministic_channel(&name).map_err(config_err)?,
                label: name.clone(),
            },
            Err(e) => return Err(config_err(e)),
        },
        (None, None) => return Err(config_err("no channel input: pass --channel-model or --channel-file")),
    };

    let snr_db = match (&args.snr, &file.snr_db) {
        (Some(s), _) => parse_grid(s).map_err(|e| config_err(format!("--snr: {e}")))?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![20.0],
    };
    if snr_db.is_empty() {
        return Err(config_err("SNR grid is empty"));
    }
    let cp_sweep = match (&args.cp_sweep, &file.cp_sweep) {
        (Some(s), _) => Some(parse_int_grid(s).map_err(|e| config_err(format!("--cp-sweep: {e}")))?),
        (None, v) => v.clone(),
    };
    if cp_sweep.as_ref().is_some_and(Vec::is_empty) {
        return Err(config_err("CP sweep grid is empty"));
    }
    let target_ser = args.target_ser.or(file.target_ser);
    if let Some(t) = target_ser {
        if !(t > 0.0 && t < 1.0) {
            return Err(config_err(format!("target SER must lie in (0, 1), got {t}")));
        }
    }
    let fs = args.fs.or(file.fs).unwrap_or(1.0 / channels.ts());
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(config_err(format!("fs must be positive, got {fs}")));
    }
    let snr_reference = match args.snr_reference.or(file.snr_reference).unwrap_or(SnrRef::Mean) {
        SnrRef::Mean => SnrReference::EnsembleMean,
        SnrRef::Realization => SnrReference::PerRealization,
    };
    let trials_nonzero = trials.max(1);
    Ok(Resolved {
        kinds,
        custom,
        n: args.n.or(file.n).unwrap_or(REFERENCE_N),
        mu: args.mu.or(file.mu).unwrap_or(REFERENCE_MU),
        beta: args.beta.or(file.beta).unwrap_or(REFERENCE_TX_TAIL),
        delta: args.delta.or(file.delta).unwrap_or(REFERENCE_RX_TAIL),
        channels,
        snr_db,
        cp_sweep,
        trials: trials_nonzero,
        blocks: args.blocks.or(file.blocks).unwrap_or(100),
        seed,
        target_ser,
        fs,
        snr_reference,
        out: args.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("wofdm-out")),
        format: args.format.or(file.format).unwrap_or_default(),
        file,
    })
    .and_then(|r| {
        if trials == 0 {
            Err(config_err("trials must be positive"))
        } else {
            Ok(r)
        }
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    flags: &'a CommonArgs,
    config_file: &'a RunConfig,
    systems: Vec<String>,
    n: usize,
    mu: usize,
    channel: String,
    channel_ensemble: Option<&'a ChannelEnsembleSpec>,
    trials: usize,
    blocks_per_trial: usize,
    snr_db: &'a [f64],
    cp_sweep: Option<&'a [usize]>,
    target_ser: Option<f64>,
    fs_hz: f64,
    subcarrier_spacing_hz: f64,
    reference_subcarrier_spacing_hz: f64,
    snr_reference: SnrReference,
    infeasible: Vec<String>,
    failed_trials: usize,
    failures: Vec<String>,
    outputs: Vec<String>,
}

impl<'a> Metadata<'a> {
    fn new(command: &'a str, flags: &'a CommonArgs, r: &'a Resolved) -> Self {
        let mut systems: Vec<String> = r.kinds.iter().map(|k| k.name().to_string()).collect();
        systems.extend(r.custom.iter().map(SystemParams::label));
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: r.seed,
            flags,
            config_file: &r.file,
            systems,
            n: r.n,
            mu: r.mu,
            channel: r.channels.label(),
            channel_ensemble: match &r.channels {
                Channels::Ensemble(s) => Some(s),
                Channels::Fixed { .. } => None,
            },
            trials: r.trials,
            blocks_per_trial: r.blocks,
            snr_db: &r.snr_db,
            cp_sweep: r.cp_sweep.as_deref(),
            target_ser: r.target_ser,
            fs_hz: r.fs,
            subcarrier_spacing_hz: r.fs / r.n as f64,
            reference_subcarrier_spacing_hz: REFERENCE_SPACING_HZ,
            snr_reference: r.snr_reference,
            infeasible: Vec::new(),
            failed_trials: 0,
            failures: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(BufWriter<File>) -> crate::Result<()>) -> CliResult<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
        f(BufWriter::new(file)).map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, mut meta: Metadata) -> CliResult<()> {
        meta.outputs = std::mem::take(&mut self.written);
        self.write("metadata.json", |w| write_json(w, &meta))
    }
}

fn file_tag(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Parses `argv` and runs the command.
pub fn run<I, T>(argv: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(config_err)?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Presets(a) => cmd_presets(a),
    }
}

#[derive(Serialize)]
struct AnalysisEntry {
    system: String,
    channel: String,
    snr_db: f64,
    realization: Option<usize>,
    report: InterferenceReport,
    rate_bits: Option<Vec<f64>>,
}

pub fn cmd_analyze(args: &CommonArgs) -> CliResult<()> {
    let r = resolve(args)?;
    let setups = r.setups()?;
    let channels = r.channels.realizations().map_err(runtime_err)?;
    let chan = r.channels.label();
    let mut out = Output::new(&r.out)?;
    let mut meta = Metadata::new("analyze", args, &r);
    let mut json = Vec::new();
    let multi_snr = r.snr_db.len() > 1;

    for setup in &setups {
        let p = &setup.params;
        let eqs: Vec<EquivalentChannel> = channels
            .par_iter()
            .map(|h| EquivalentChannel::build(p, &setup.windows, h))
            .collect::<crate::Result<_>>()
            .map_err(runtime_err)?;
        let rate_params = r.target_ser.map(|t| RateParams::new(t, r.fs, p)).transpose().map_err(runtime_err)?;
        for &snr in &r.snr_db {
            let sigma_n2 = r.sigma_n2(snr, p.n);
            let reports: Vec<InterferenceReport> = eqs
                .par_iter()
                .map(|eq| InterferenceReport::evaluate(eq, 1.0, sigma_n2))
                .collect::<crate::Result<_>>()
                .map_err(runtime_err)?;
            let mean = InterferenceReport::average(&reports).map_err(runtime_err)?;
            let snr_tag = if multi_snr { format!("_snr{}", file_tag(&snr.to_string())) } else { String::new() };
            let base = format!("analysis_{}_{}", file_tag(&setup.label), file_tag(&chan));
            let single = reports.len() == 1;
            for (i, rep) in reports.iter().enumerate() {
                let rate = rate_params.as_ref().map(|rp| data_rate(&rep.sinr, rp));
                match r.format {
                    Format::Csv => {
                        let name = if single { format!("{base}{snr_tag}.csv") } else { format!("{base}_{i}{snr_tag}.csv") };
                        out.write(&name, |w| write_analysis_csv(w, rep, rate.as_ref()))?;
                    }
                    Format::Json => json.push(AnalysisEntry {
                        system: setup.label.clone(),
                        channel: chan.clone(),
                        snr_db: snr,
                        realization: Some(i),
                        report: rep.clone(),
                        rate_bits: rate.map(|x| x.per_subcarrier),
                    }),
                }
            }
            if !single {
                let rate = rate_params.as_ref().map(|rp| data_rate(&mean.sinr, rp));
                match r.format {
                    Format::Csv => out.write(&format!("{base}_mean{snr_tag}.csv"), |w| write_analysis_csv(w, &mean, rate.as_ref()))?,
                    Format::Json => json.push(AnalysisEntry {
                        system: setup.label.clone(),
                        channel: chan.clone(),
                        snr_db: snr,
                        realization: None,
                        report: mean,
                        rate_bits: rate.map(|x| x.per_subcarrier),
                    }),
                }
            }
        }
    }
    if r.format == Format::Json {
        out.write("analysis.json", |w| write_json(w, &json))?;
    }

    if let Some(grid) = &r.cp_sweep {
        let rows = sweep_powers(&r, grid, &mut meta.infeasible)?;
        match r.format {
            Format::Csv => out.write("sweep.csv", |w| write_sweep_csv(w, &rows))?,
            Format::Json => out.write("sweep.json", |w| write_json(w, &rows))?,
        }
    }
    out.finish(meta)
}

/// Ensemble-mean power totals for every kind and CP length.
fn sweep_powers(r: &Resolved, grid: &[usize], infeasible: &mut Vec<String>) -> CliResult<Vec<SweepRow>> {
    let chan = r.channels.label();
    let snr = r.snr_db[0];
    let cells: Vec<(SystemKind, usize)> = r.kinds.iter().flat_map(|&k| grid.iter().map(move |&mu| (k, mu))).collect();
    let results: Vec<CliResult<SweepRow>> = cells
        .par_iter()
        .map(|&(kind, mu)| {
            let p = match r.params(kind, mu) {
                Ok(p) => p,
                Err(_) => {
                    return Ok(SweepRow { system: kind.name().into(), channel_model: chan.clone(), mu, totals: None });
                }
            };
            let w = WindowPair::raised_cosine(&p);
            let sigma_n2 = r.sigma_n2(snr, p.n);
            let rep = match &r.channels {
                Channels::Ensemble(spec) => InterferenceReport::ensemble_mean(&p, &w, spec, 1.0, sigma_n2),
                Channels::Fixed { cir, .. } => InterferenceReport::for_channel(&p, &w, cir, 1.0, sigma_n2),
            }
            .map_err(runtime_err)?;
            Ok(SweepRow { system: kind.name().into(), channel_model: chan.clone(), mu, totals: Some(rep.totals()) })
        })
        .collect();
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    infeasible.extend(rows.iter().filter(|x| x.totals.is_none()).map(|x| format!("{} mu={}", x.system, x.mu)));
    Ok(rows)
}

fn campaign(r: &Resolved, setups: Vec<SystemSetup>) -> CliResult<SimResult> {
    let cfg = SimConfig {
        blocks_per_trial: r.blocks,
        snr_reference: r.snr_reference,
        ..SimConfig::new(setups, r.channels.source(), r.snr_db.clone(), r.trials, r.seed)
    };
    eprintln!(
        "simulating {} systems x {} SNR points x {} trials",
        cfg.systems.len(),
        cfg.snr_db.len(),
        cfg.trials
    );
    run_campaign(&cfg).map_err(config_err)
}

pub fn cmd_simulate(args: &CommonArgs) -> CliResult<()> {
    let r = resolve(args)?;
    let mut setups = Vec::new();
    let mut infeasible = Vec::new();
    match &r.cp_sweep {
        None => setups = r.setups()?,
        Some(grid) => {
            for &k in &r.kinds {
                for &mu in grid {
                    match r.params(k, mu) {
                        Ok(p) => setups.push(SystemSetup { label: format!("{} mu={mu}", k.name()), ..SystemSetup::new(p) }),
                        Err(_) => infeasible.push(format!("{} mu={mu}", k.name())),
                    }
                }
            }
            setups.extend(r.custom.iter().copied().map(SystemSetup::new));
        }
    }
    let res = campaign(&r, setups)?;
    let mut out = Output::new(&r.out)?;
    match r.format {
        Format::Csv => out.write("campaign.csv", |w| write_campaign_csv(w, &res))?,
        Format::Json => out.write("campaign.json", |w| write_json(w, &res.points))?,
    }
    let mut meta = Metadata::new("simulate", args, &r);
    meta.infeasible = infeasible;
    meta.failed_trials = res.points.iter().map(|p| p.failed_trials).sum();
    meta.failures = res.failures;
    out.finish(meta)
}

/// SER per (system, SNR) used to set the gap.
enum SerSource {
    Fixed(f64),
    Table(BTreeMap<(String, u64), f64>),
}

impl SerSource {
    fn from_points(rows: impl IntoIterator<Item = (String, f64, f64, f64)>) -> Self {
        SerSource::Table(
            rows.into_iter()
                .map(|(sys, snr, ser, hi)| ((sys, snr.to_bits()), if ser > 0.0 { ser } else { hi }))
                .collect(),
        )
    }

    fn get(&self, system: &str, snr: f64) -> CliResult<f64> {
        match self {
            SerSource::Fixed(v) => Ok(*v),
            SerSource::Table(t) => t
                .get(&(system.to_string(), snr.to_bits()))
                .copied()
                .ok_or_else(|| config_err(format!("SER table has no entry for {system} at {snr} dB"))),
        }
    }
}

pub fn cmd_rate(args: &RateArgs) -> CliResult<()> {
    let r = resolve(&args.common)?;
    let mut out = Output::new(&r.out)?;
    let mut meta = Metadata::new("rate", &args.common, &r);
    let ser = match (r.target_ser, &args.ser_table, args.chain) {
        (Some(t), _, _) => SerSource::Fixed(t),
        (None, Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            SerSource::from_points(read_campaign_csv(&text).map_err(config_err)?)
        }
        (None, None, true) => {
            let res = campaign(&r, r.setups()?)?;
            out.write("campaign.csv", |w| write_campaign_csv(w, &res))?;
            meta.failed_trials = res.points.iter().map(|p| p.failed_trials).sum();
            meta.failures = res.failures.clone();
            SerSource::from_points(res.points.into_iter().map(|p| (p.system, p.snr_db, p.ser, p.ci_high)))
        }
        (None, None, false) => {
            return Err(config_err("missing SER source: pass --target-ser, --ser-table or --chain"));
        }
    };
    let channels = r.channels.realizations().map_err(runtime_err)?;

    let base: Vec<(String, SystemParams)> = r.setups()?.into_iter().map(|s| (s.label, s.params)).collect();
    let vs_snr = rate_rows(&r, &base, &channels, &ser)?;
    let sweep = match &r.cp_sweep {
        Some(grid) => {
            let mut systems = Vec::new();
            for &k in &r.kinds {
                for &mu in grid {
                    match r.params(k, mu) {
                        Ok(p) => systems.push((k.name().to_string(), p)),
                        Err(_) => meta.infeasible.push(format!("{} mu={mu}", k.name())),
                    }
                }
            }
            Some(rate_rows(&r, &systems, &channels, &ser)?)
        }
        None => None,
    };
    match r.format {
        Format::Csv => {
            out.write("rate_vs_snr.csv", |w| write_rate_csv(w, &vs_snr))?;
            if let Some(rows) = &sweep {
                out.write("rate_vs_cp.csv", |w| write_rate_csv(w, rows))?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Tables<'a> {
                rate_vs_snr: &'a [RateRow],
                rate_vs_cp: Option<&'a [RateRow]>,
            }
            out.write("rate.json", |w| write_json(w, &Tables { rate_vs_snr: &vs_snr, rate_vs_cp: sweep.as_deref() }))?;
        }
    }
    out.finish(meta)
}

/// Mean total rate over the channel set for each system and SNR.
fn rate_rows(r: &Resolved, systems: &[(String, SystemParams)], channels: &[Cir], ser: &SerSource) -> CliResult<Vec<RateRow>> {
    let chan = r.channels.label();
    let per_system: Vec<CliResult<Vec<RateRow>>> = systems
        .par_iter()
        .map(|(label, p)| {
            let w = WindowPair::raised_cosine(p);
            // (signal, interference total, unit-noise power) per channel
            let parts = channels
                .iter()
                .map(|h| {
                    let eq = EquivalentChannel::build(p, &w, h)?;
                    let d = decompose(&eq);
                    Ok((signal_power(&d, 1.0)?, interference_powers(&d, 1.0)?, noise_power(&eq, 1.0)?))
                })
                .collect::<crate::Result<Vec<_>>>()
                .map_err(runtime_err)?;
            let mut rows = Vec::new();
            for &snr in &r.snr_db {
                let target = ser.get(label, snr)?;
                let rp = RateParams::new(target, r.fs, p).map_err(config_err)?;
                let rp_hop = rp.hop_normalized(p);
                let (mut span_sum, mut hop_sum) = (0.0, 0.0);
                for (h, (sig, ip, unit_noise)) in channels.iter().zip(&parts) {
                    let energy = match r.snr_reference {
                        SnrReference::EnsembleMean => r.channels.mean_energy(),
                        SnrReference::PerRealization => h.energy(),
                    };
                    let s2 = noise_variance_for_snr(snr, 1.0, energy, p.n);
                    let noise: Vec<f64> = unit_noise.iter().map(|v| v * s2).collect();
                    let s = sinr(sig, ip, &noise);
                    span_sum += data_rate(&s, &rp).total;
                    hop_sum += data_rate(&s, &rp_hop).total;
                }
                let count = channels.len() as f64;
                rows.push(RateRow {
                    system: label.clone(),
                    channel_model: chan.clone(),
                    mu: p.mu,
                    snr_db: snr,
                    target_ser: target,
                    gap: rp.gap,
                    rate_bps: span_sum / count,
                    rate_hop_bps: hop_sum / count,
                });
            }
            Ok(rows)
        })
        .collect();
    Ok(per_system.into_iter().collect::<CliResult<Vec<_>>>()?.into_iter().flatten().collect())
}

pub fn cmd_presets(args: &PresetArgs) -> CliResult<()> {
    println!("{:<6} {:>4} {:>4} {:>4} {:>4} {:>4} {:>4} {:>5} {:>5} {:>6} {:>8}", "system", "mu", "beta", "delta", "rho", "gamma", "kappa", "hop", "span", "rx_in", "cp_bound");
    for kind in SystemKind::ALL {
        let (beta, delta) = kind.reference_tails();
        match SystemParams::preset(kind, args.n, args.mu, beta, delta) {
            Ok(p) => {
                let d = p.derived();
                println!(
                    "{:<6} {:>4} {:>4} {:>5} {:>4} {:>5} {:>5} {:>5} {:>5} {:>6} {:>8}",
                    kind.name(),
                    p.mu,
                    p.beta,
                    p.delta,
                    p.rho,
                    p.gamma,
                    p.kappa,
                    d.hop,
                    d.span,
                    d.rx_in,
                    p.cp_bound().unwrap_or_default()
                );
            }
            Err(e) => println!("{:<6} infeasible: {e}", kind.name()),
        }
    }
    Ok(())
}
