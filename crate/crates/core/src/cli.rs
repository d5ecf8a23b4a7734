//! Command-line driver behind the `qbus` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::dynamics::Stage;
use crate::error::{Error, Result};
use crate::experiment::{
    convergence_study, decompose_report, run_fano, run_optimize, run_sweep, CutoffPolicy, Observable, OutputFormat,
    PointFailure, Protocol, SweepConfig, WindowFamily,
};
use crate::io::{fano_csv, fano_json, parse_data, sweep_csv, sweep_json, validate, Metadata};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "qbus", version, about = "Qubit-cavity-qubit transfer beyond the rotating-wave approximation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Observables on a uniform grid of couplings.
    Sweep(Common),
    /// Timing-optimized protocol on a grid of couplings.
    Optimize(Common),
    /// Fano parameters of the transfer map on a grid of couplings.
    Fano(Common),
    /// Elementary-map decomposition and Kraus operators at one coupling.
    Decompose(Single),
    /// Observables versus Fock cutoff at one coupling.
    Converge(Single),
    /// Re-checks a data file written by this tool.
    Validate { file: PathBuf },
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    #[arg(long)]
    pub g_min: Option<f64>,
    #[arg(long)]
    pub g_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub window: Option<WindowArg>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long, value_enum)]
    pub stage: Option<StageArg>,
    #[arg(long)]
    pub rwa: bool,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Single {
    #[arg(long)]
    pub g: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum WindowArg {
    Rect,
    Hamming,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ProtocolArg {
    P0,
    P1,
    P2,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum StageArg {
    Full,
    E1,
    E2,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FormatArg {
    Csv,
    Json,
}

/// Keys accepted in a TOML config file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub g_min: Option<f64>,
    pub g_max: Option<f64>,
    pub steps: Option<usize>,
    pub window: Option<WindowFamily>,
    pub xi: Option<f64>,
    pub protocol: Option<Protocol>,
    pub stage: Option<Stage>,
    pub rwa: Option<bool>,
    pub observables: Option<Vec<Observable>>,
    pub n_max: Option<usize>,
    pub max_n_max: Option<usize>,
    pub threshold: Option<f64>,
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn apply(self, c: &mut SweepConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(g_min, g_max, steps, window, xi, protocol, stage, rwa, observables, tol, format);
        if let Some(v) = self.jobs {
            c.jobs = Some(v);
        }
        if let Some(v) = self.out {
            c.out = Some(v);
        }
        if let Some(v) = self.n_max {
            c.cutoff.n_max = v;
            c.cutoff.max_n_max = c.cutoff.max_n_max.max(v);
        }
        if let Some(v) = self.max_n_max {
            c.cutoff.max_n_max = v;
        }
        if let Some(v) = self.threshold {
            c.cutoff.threshold = v;
        }
    }
}

impl Common {
    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(&self) -> Result<SweepConfig> {
        let mut c = SweepConfig::default();
        if let Some(path) = &self.config {
            FileConfig::load(path)?.apply(&mut c);
        }
        if let Some(v) = self.g_min {
            c.g_min = v;
        }
        if let Some(v) = self.g_max {
            c.g_max = v;
        }
        if let Some(v) = self.steps {
            c.steps = v;
        }
        if let Some(v) = self.window {
            c.window = match v {
                WindowArg::Rect => WindowFamily::Rect,
                WindowArg::Hamming => WindowFamily::Hamming,
            };
        }
        if let Some(v) = self.xi {
            c.xi = v;
        }
        if let Some(v) = self.protocol {
            c.protocol = match v {
                ProtocolArg::P0 => Protocol::P0,
                ProtocolArg::P1 => Protocol::P1,
                ProtocolArg::P2 => Protocol::P2,
            };
        }
        if let Some(v) = self.stage {
            c.stage = match v {
                StageArg::Full => Stage::Full,
                StageArg::E1 => Stage::E1,
                StageArg::E2 => Stage::E2,
            };
        }
        if self.rwa {
            c.rwa = true;
        }
        if let Some(v) = self.n_max {
            c.cutoff = CutoffPolicy { n_max: v, max_n_max: c.cutoff.max_n_max.max(v), ..c.cutoff };
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.format {
            c.format = match v {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            };
        }
        if let Some(v) = self.jobs {
            c.jobs = Some(v);
        }
        Ok(c)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn failure_code(failures: &[PointFailure]) -> i32 {
    for f in failures {
        eprintln!("g = {}: {}", f.g, f.message);
    }
    if failures.is_empty() {
        EXIT_OK
    } else if failures.iter().any(|f| f.numerical) {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG }
}

fn run_command(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Sweep(common) => sweep_like("sweep", &common.resolve()?, run_sweep),
        Command::Optimize(common) => sweep_like("optimize", &common.resolve()?, run_optimize),
        Command::Fano(common) => {
            let cfg = common.resolve()?;
            let out = run_fano(&cfg)?;
            let meta = Metadata::new("fano", &cfg, &out.failures);
            let text = match cfg.format {
                OutputFormat::Csv => fano_csv(&meta, &out.records)?,
                OutputFormat::Json => fano_json(&meta, &out.records)?,
            };
            emit(cfg.out.as_deref(), &text)?;
            Ok(failure_code(&out.failures))
        }
        Command::Decompose(single) => {
            let cfg = single.common.resolve()?;
            let report = decompose_report(&cfg, single.g)?;
            let text = match (single.common.format, cfg.format) {
                (None, _) | (_, OutputFormat::Csv) => report.to_text(),
                (Some(_), OutputFormat::Json) => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(cfg.out.as_deref(), &text)?;
            Ok(if report.kraus_error.is_some() { EXIT_NUMERICAL } else { EXIT_OK })
        }
        Command::Converge(single) => {
            let cfg = single.common.resolve()?;
            let report = convergence_study(&cfg, single.g)?;
            let text = match cfg.format {
                OutputFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
                OutputFormat::Csv => report.to_text(),
            };
            emit(cfg.out.as_deref(), &text)?;
            Ok(EXIT_OK)
        }
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file)?;
            let data = parse_data(&text)?;
            let problems = validate(&data);
            for p in &problems {
                println!("{p}");
            }
            if problems.is_empty() {
                println!("{}: ok", file.display());
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_CONFIG)
            }
        }
    }
}

fn sweep_like(
    name: &str,
    cfg: &SweepConfig,
    run: fn(&SweepConfig) -> Result<crate::experiment::SweepOutput>,
) -> Result<i32> {
    let out = run(cfg)?;
    let mut effective = cfg.clone();
    if name == "optimize" {
        effective.protocol = Protocol::P2;
    }
    let meta = Metadata::new(name, &effective, &out.failures);
    let text = match cfg.format {
        OutputFormat::Csv => sweep_csv(&meta, &out.records)?,
        OutputFormat::Json => sweep_json(&meta, &out.records)?,
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(failure_code(&out.failures))
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
