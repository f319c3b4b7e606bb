//! Command-line front end: configuration loading and the `nvdd` subcommands.
//!
//! Configuration comes from a TOML file (`--config`, else the path in
//! `NVDD_CONFIG`, else built-in defaults); command-line flags override it.
//! Unknown keys are fatal. Exit codes: 0 success, 2 usage, configuration or
//! parse error, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::compiler::{
    compile_experiment, compile_protected, compile_unprotected, ControlCondition, CrGateSpec, DdCarrier, DdScheme,
    ExperimentSpec, PulseMode, Readout, TomoSetting,
};
use crate::engine::{propagate, EngineConfig, NoiseModel};
use crate::experiments::{fit_decay, linspace, theta_sweep, tomography_run, DecayModel, FitOptions, InputKind, Protocol, SweepTable};
use crate::hamiltonian::{transition_table, NvParams, System};
use crate::operators::DensityMatrix9;
use crate::schedule::{parse, render};
use crate::Error;

pub const CONFIG_ENV: &str = "NVDD_CONFIG";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Output file; standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Effective settings of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: System,
    pub params: NvParams,
    /// Noise in the `lindblad:T1=…,T2=…` / `static:sigma=…` / `ou:sigma=…,tau=…` grammar.
    #[serde(with = "noise_text")]
    pub noise: NoiseModel,
    pub engine: EngineConfig,
    pub output: OutputConfig,
}

mod noise_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::engine::NoiseModel;

    pub fn serialize<S: Serializer>(noise: &NoiseModel, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(noise)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NoiseModel, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl RunConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.noise.validate()?;
        self.engine.validate()?;
        if let Some(dir) = self.output.path.as_ref().and_then(|p| p.parent()) {
            if !dir.as_os_str().is_empty() && !dir.is_dir() {
                return Err(CliError::usage(format!("output directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotUnitary { .. } | Error::InvalidState(_) | Error::DegenerateProjection { .. } | Error::Numeric(_) => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nvdd", version, about = "NV-center CR-gate compiler and pulse-level simulator")]
pub struct Cli {
    /// TOML configuration file (default: $NVDD_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub system: Option<System>,
    /// Noise spec, e.g. "lindblad:T2=34us" or "static:sigma=6.62kHz".
    #[arg(long, global = true)]
    pub noise: Option<NoiseModel>,
    /// Trajectories for classical noise.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nuclear and MW transition frequencies.
    Transitions {
        /// Field along the NV axis, gauss.
        #[arg(long)]
        b_field: Option<f64>,
    },
    /// Compile a CR gate (or the full experiment) to schedule text.
    Compile(CompileArgs),
    /// Simulate a schedule file.
    Run {
        schedule: PathBuf,
    },
    /// θ-sweep with population readout, as CSV.
    Sweep(SweepArgs),
    /// Five-setting electron tomography after CR(θ), as JSON.
    Tomo(TomoArgs),
    /// Fit a decay model to a sweep CSV, as JSON.
    Fit {
        #[arg(long, default_value = "eq6")]
        model: DecayModel,
        /// Sweep CSV with columns theta_rad, time_s, signal, stderr.
        #[arg(long)]
        csv: PathBuf,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ideal,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CarrierArg {
    Centre,
    MwLine,
}

#[derive(Debug, Args)]
pub struct GateArgs {
    /// Control condition, 0 or 1.
    #[arg(long, default_value_t = 0)]
    pub control: u8,
    #[arg(long)]
    pub protected: bool,
    #[arg(long, default_value_t = 2)]
    pub dd_pulses: usize,
    /// DD π pulses: ideal rotations or finite rectangular pulses.
    #[arg(long, value_enum, default_value = "finite")]
    pub pulse_mode: ModeArg,
    /// Rabi frequency of finite DD pulses, Hz (default: the hard MW Rabi frequency).
    #[arg(long)]
    pub dd_rabi: Option<f64>,
    #[arg(long, value_enum, default_value = "centre")]
    pub dd_carrier: CarrierArg,
    /// Selective preparation and readout pulses.
    #[arg(long, value_enum, default_value = "ideal")]
    pub mw_mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// Rotation angle: radians or a multiple of pi ("4pi", "0.5pi").
    #[arg(long, value_parser = parse_theta, default_value = "0")]
    pub theta: f64,
    #[command(flatten)]
    pub gate: GateArgs,
    /// Emit the full experiment with this readout: p0, none, +x, -x, +y or -y.
    #[arg(long)]
    pub experiment: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// start:stop:count, each bound in radians or multiples of pi.
    #[arg(long, value_parser = parse_range, default_value = "0:8pi:65")]
    pub theta: (f64, f64, usize),
    #[command(flatten)]
    pub gate: GateArgs,
    /// Remove the electron coherence of the input state.
    #[arg(long)]
    pub dephased_input: bool,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Rotation angle: radians or a multiple of pi ("4pi", "0.5pi").
    #[arg(long, value_parser = parse_theta, default_value = "0")]
    pub theta: f64,
    #[command(flatten)]
    pub gate: GateArgs,
}

/// "4pi", "0.5pi", "pi", "-pi" or plain radians.
pub fn parse_theta(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let value = match t.strip_suffix("pi") {
        Some(m) => {
            let m = m.trim().trim_end_matches('*');
            let factor = match m {
                "" | "+" => 1.0,
                "-" => -1.0,
                other => other.parse::<f64>().map_err(|_| format!("bad angle '{s}'"))?,
            };
            factor * std::f64::consts::PI
        }
        None => t.parse::<f64>().map_err(|_| format!("bad angle '{s}'"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("bad angle '{s}'"))
    }
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(format!("expected start:stop:count, got '{s}'"));
    };
    let count = count.trim().parse::<usize>().map_err(|_| format!("bad point count in '{s}'"))?;
    Ok((parse_theta(start)?, parse_theta(stop)?, count))
}

impl GateArgs {
    fn spec(&self, system: System, theta: f64) -> Result<CrGateSpec, CliError> {
        Ok(CrGateSpec::new(system, ControlCondition::from_bit(self.control)?, theta))
    }

    fn mode(arg: ModeArg, rabi: Option<f64>) -> PulseMode {
        match arg {
            ModeArg::Ideal => PulseMode::Instantaneous,
            ModeArg::Finite => PulseMode::Finite { rabi: rabi.unwrap_or(0.0) },
        }
    }

    fn dd(&self, params: &NvParams) -> Option<DdScheme> {
        self.protected.then(|| {
            let rabi = Some(self.dd_rabi.unwrap_or(params.rabi_mw_hard));
            let mut dd = DdScheme::xy(self.dd_pulses, Self::mode(self.pulse_mode, rabi));
            dd.carrier = match self.dd_carrier {
                CarrierArg::Centre => DdCarrier::HyperfineCentre,
                CarrierArg::MwLine => DdCarrier::MwLine,
            };
            dd
        })
    }

    fn protocol(&self, params: &NvParams, input: InputKind) -> Result<Protocol, CliError> {
        let dd = self.dd(params);
        if let Some(d) = &dd {
            d.validate()?;
        }
        Ok(Protocol {
            control: ControlCondition::from_bit(self.control)?,
            dd,
            mw_mode: Self::mode(self.mw_mode, None),
            input,
        })
    }
}

impl Cli {
    /// Config file, environment and flags merged.
    pub fn effective_config(&self) -> Result<RunConfig, CliError> {
        let path = self.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut config = match path {
            Some(p) => RunConfig::load(&p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.system {
            config.system = s;
        }
        if let Some(n) = self.noise {
            config.noise = n;
        }
        if let Some(n) = self.samples {
            config.engine.n_traj = n;
        }
        if let Some(s) = self.seed {
            config.engine.seed = s;
        }
        if let Some(w) = self.workers {
            config.engine.workers = Some(w);
        }
        if let Some(f) = self.format {
            config.output.format = f;
        }
        if let Some(o) = &self.out {
            config.output.path = Some(o.clone());
        }
        if let Command::Transitions { b_field: Some(b) } = self.command {
            config.params.b_field = b;
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(config: &RunConfig, text: &str) -> Result<(), CliError> {
    match &config.output.path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError { code: 3, message: e.to_string() })
}

fn cmd_transitions(config: &RunConfig, explicit_system: Option<System>) -> Result<(), CliError> {
    let systems = explicit_system.map_or(vec![System::A, System::B], |s| vec![s]);
    let tables: Vec<_> = systems.iter().map(|&s| (s, transition_table(&config.params, s))).collect();
    if config.output.format == Format::Json {
        let value: serde_json::Map<String, serde_json::Value> = tables
            .iter()
            .map(|(s, t)| (s.to_string(), serde_json::to_value(t).expect("plain data")))
            .collect();
        return emit(config, &to_json(&value)?);
    }
    let mut text = format!("B = {} G\n", config.params.b_field);
    for (s, table) in &tables {
        text += &format!("system {s}\n");
        for e in table {
            text += &format!("  {:<4}{:<22}{:>14.6} MHz\n", e.label, e.levels, e.frequency_hz / 1e6);
        }
    }
    emit(config, &text)
}

fn cmd_compile(config: &RunConfig, args: &CompileArgs) -> Result<(), CliError> {
    let params = &config.params;
    let spec = args.gate.spec(config.system, args.theta)?;
    let dd = args.gate.dd(params);
    let schedule = match &args.experiment {
        Some(readout) => {
            let readout = match readout.as_str() {
                "p0" => Readout::Population,
                other => Readout::Tomo(other.parse::<TomoSetting>()?),
            };
            let mut exp = ExperimentSpec::new(spec, dd, readout);
            exp.mw_mode = GateArgs::mode(args.gate.mw_mode, None);
            compile_experiment(&exp, params)?
        }
        None => match &dd {
            Some(dd) => compile_protected(&spec, dd, params)?,
            None => compile_unprotected(&spec, params)?,
        },
    };
    emit(config, &render(&schedule))
}

#[derive(Serialize)]
struct MeasurementRow {
    label: String,
    time_s: f64,
    signal: f64,
}

fn cmd_run(config: &RunConfig, path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let schedule = parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let result = propagate(&schedule, &DensityMatrix9::maximally_mixed(), &config.params, &config.noise, &config.engine)?;
    let rows: Vec<MeasurementRow> = result
        .measurements
        .iter()
        .map(|m| MeasurementRow { label: m.label.clone(), time_s: m.time, signal: m.signal })
        .collect();
    let text = match config.output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if rows.is_empty() {
                w.write_record(["label", "time_s", "signal"]).map_err(|e| CliError::usage(e.to_string()))?;
            }
            for r in &rows {
                w.serialize(r).map_err(|e| CliError::usage(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::usage(e.to_string()))?).expect("csv is utf-8")
        }
    };
    emit(config, &text)
}

fn cmd_sweep(config: &RunConfig, args: &SweepArgs) -> Result<(), CliError> {
    let (start, stop, count) = args.theta;
    let input = if args.dephased_input { InputKind::Dephased } else { InputKind::Prepared };
    let protocol = args.gate.protocol(&config.params, input)?;
    let grid = linspace(start, stop, count);
    let table = theta_sweep(&protocol, config.system, &config.noise, &grid, &config.params, &config.engine)?;
    let text = match config.output.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()? + "\n",
    };
    emit(config, &text)
}

fn cmd_tomo(config: &RunConfig, args: &TomoArgs) -> Result<(), CliError> {
    let protocol = args.gate.protocol(&config.params, InputKind::Prepared)?;
    let result = tomography_run(args.theta, &protocol, config.system, &config.noise, &config.params, &config.engine)?;
    emit(config, &to_json(&result.to_json())?)
}

fn cmd_fit(config: &RunConfig, model: DecayModel, csv: &Path) -> Result<(), CliError> {
    let file = fs::File::open(csv).map_err(|e| CliError::usage(format!("cannot read {}: {e}", csv.display())))?;
    let rows = SweepTable::read_csv_rows(file)?;
    let fit = fit_decay(&rows, model, &FitOptions::default())?;
    emit(config, &to_json(&fit)?)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.effective_config()?;
    match &cli.command {
        Command::Transitions { .. } => cmd_transitions(&config, cli.system),
        Command::Compile(args) => cmd_compile(&config, args),
        Command::Run { schedule } => cmd_run(&config, schedule),
        Command::Sweep(args) => cmd_sweep(&config, args),
        Command::Tomo(args) => cmd_tomo(&config, args),
        Command::Fit { model, csv } => cmd_fit(&config, *model, csv),
        Command::Config => emit(&config, &to_json(&config)?),
    }
}

/// Parses `std::env::args`, runs and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nvdd: {}", e.message);
            e.code
        }
    }
}
