use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptfid::config::{Axis, ConfigError, Format, ModelKind, SweepConfig};
use ptfid::output::{write_sweep, Table};
use ptfid::sweep::{run_sweep, SweepResult};
use ptfid::tools::{self, OneHalfSettings};
use ptfid_core::fidelity::{DEFAULT_EPSILON_SCHEDULE, DEFAULT_TOL_HALF};
use ptfid_core::lanczos::LanczosOptions;
use ptfid_core::ssh::{SshParams, BERRY_GRID};
use ptfid_core::xxz::XxzParams;

/// Biorthogonal fidelity scans and exceptional-point diagnostics for PT-symmetric chains.
#[derive(Parser)]
#[command(name = "ptfid", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Fidelity step between neighbouring parameter points.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Absolute |Im E| threshold separating real from complex energies.
    #[arg(long = "tol-real", global = true)]
    tol_real: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for Lanczos start and restart vectors.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fidelity definition: metricized, RR, LR-half-sum, LR-sqrt-abs, LR-sqrt.
    #[arg(long, global = true)]
    definition: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity susceptibility sweep of the SSH chain (fidelity direction v1).
    SshScan(ScanArgs),
    /// Fidelity scan of the XXZ chain along Jz or gamma.
    XxzScan(ScanArgs),
    /// Run any sweep described by a configuration file (ssh, xxz, dense-file).
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Per-momentum energies and susceptibilities.
    SshBands(SshArgs),
    /// Complex Berry phase of both bands.
    SshBerry {
        #[command(flatten)]
        ssh: SshArgs,
        /// Loop discretization (a Richardson step uses twice as many points).
        #[arg(long, default_value_t = BERRY_GRID)]
        points: usize,
    },
    /// Open-chain spectrum and boundary modes.
    SshEdges(SshArgs),
    /// Dense spectrum of the zero-magnetization sector.
    XxzSpectrum(XxzArgs),
    /// Locate exceptional points in a bracket and run the one-half test.
    EpLocate(EpArgs),
    /// Per-module timing report.
    Bench,
}

#[derive(Args)]
struct ScanArgs {
    /// Configuration file; flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed parameter, NAME=VALUE (repeatable).
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Swept axis, NAME=START:STOP:COUNT (repeatable).
    #[arg(long = "axis", value_name = "NAME=START:STOP:COUNT")]
    axis: Vec<String>,
    /// System sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Polynomial degree in 1/L for peak extrapolation.
    #[arg(long = "fit-degree")]
    fit_degree: Option<usize>,
}

#[derive(Args)]
struct SshArgs {
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long)]
    v1: f64,
    #[arg(long, default_value_t = 0.0)]
    v2: f64,
    #[arg(long, default_value_t = 0.0)]
    u: f64,
    /// Number of unit cells.
    #[arg(short = 'L', long = "length", default_value_t = 101)]
    l: usize,
}

#[derive(Args)]
struct XxzArgs {
    #[arg(long)]
    jz: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(short = 'L', long = "length")]
    l: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum EpModel {
    Ssh,
    Xxz,
}

#[derive(Args)]
struct EpArgs {
    #[arg(long, value_enum)]
    model: EpModel,
    /// Bracket start (v1 for ssh, gamma for xxz).
    #[arg(long)]
    lo: f64,
    /// Bracket end.
    #[arg(long)]
    hi: f64,
    #[arg(short = 'L', long = "length")]
    l: usize,
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = 0.0)]
    v2: f64,
    #[arg(long, default_value_t = 0.0)]
    u: f64,
    #[arg(long, default_value_t = 1.0)]
    jz: f64,
    /// Final bracket width of the gamma bisection.
    #[arg(long = "bisect-tol", default_value_t = 1e-6)]
    bisect_tol: f64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILON_SCHEDULE)]
    schedule: Vec<f64>,
    /// Unbroken-side offset factor.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Broken-side offset factor.
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    #[arg(long = "tol-half", default_value_t = DEFAULT_TOL_HALF)]
    tol_half: f64,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn scan_config(model: ModelKind, args: &ScanArgs) -> Result<SweepConfig, ConfigError> {
    if let Some(path) = &args.config {
        let cfg = SweepConfig::from_file(path)?;
        if cfg.model != model {
            return Err(ConfigError::Invalid(format!("config describes a {} sweep", cfg.model)));
        }
        return Ok(cfg);
    }
    let mut text = format!("model = {model}\n");
    if !args.sizes.is_empty() {
        let s: Vec<String> = args.sizes.iter().map(usize::to_string).collect();
        text.push_str(&format!("sizes = {}\n", s.join(",")));
    }
    if let Some(d) = args.fit_degree {
        text.push_str(&format!("fit_degree = {d}\n"));
    }
    text.push_str("[fixed]\n");
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("--set '{s}' is not NAME=VALUE")))?;
        text.push_str(&format!("{} = {}\n", k.trim(), v.trim()));
    }
    for a in &args.axis {
        let ax = Axis::parse_spec(a)?;
        text.push_str(&format!("[axis.{}]\nstart = {}\nstop = {}\ncount = {}\n", ax.name, ax.start, ax.stop, ax.count));
    }
    SweepConfig::parse(&text)
}

fn apply_globals(cfg: &mut SweepConfig, g: &Global) -> Result<(), ConfigError> {
    if let Some(e) = g.epsilon {
        cfg.epsilon = e;
    }
    if let Some(t) = g.tol_real {
        cfg.tol_real = Some(t);
    }
    if let Some(t) = g.threads {
        cfg.threads = t;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = &g.definition {
        cfg.definition = d.parse().map_err(|e: ptfid_core::Error| ConfigError::Invalid(e.to_string()))?;
    }
    if let Some(f) = g.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(o) = &g.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Runtime(format!("creating {}: {e}", p.display()))),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn table_format(g: &Global) -> Format {
    match g.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None if g.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json")) => Format::Json,
        None => Format::Csv,
    }
}

fn sweep(mut cfg: SweepConfig, g: &Global) -> Result<(), Failure> {
    apply_globals(&mut cfg, g)?;
    let out = cfg.output.clone();
    match run_sweep(&cfg) {
        Ok(result) => {
            let w = sink(out.as_ref())?;
            write_sweep(&result, cfg.format, w).map_err(|e| Failure::Runtime(e.to_string()))
        }
        Err(e) => {
            // Leave a well-formed, record-free file behind.
            if let Ok(w) = sink(out.as_ref()) {
                let _ = write_sweep(&SweepResult::empty(&cfg), cfg.format, w);
            }
            Err(Failure::Runtime(e.to_string()))
        }
    }
}

fn emit(t: Result<Table, ptfid_core::Error>, g: &Global) -> Result<(), Failure> {
    let t = t.map_err(|e| Failure::Runtime(e.to_string()))?;
    let w = sink(g.out.as_ref())?;
    t.write(table_format(g), w).map_err(|e| Failure::Runtime(e.to_string()))
}

fn ssh_params(a: &SshArgs) -> Result<SshParams, Failure> {
    SshParams::new(a.w, a.v1, a.v2, a.u, a.l).map_err(|e| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let lanczos = LanczosOptions { seed: g.seed.unwrap_or(ptfid::config::DEFAULT_SEED), ..LanczosOptions::default() };
    if let Some(t) = g.threads {
        // Only the sweep pools honour this directly; size the global pool for the rest.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::SshScan(a) => sweep(scan_config(ModelKind::Ssh, a)?, g),
        Command::XxzScan(a) => sweep(scan_config(ModelKind::Xxz, a)?, g),
        Command::Sweep { config } => sweep(SweepConfig::from_file(config)?, g),
        Command::SshBands(a) => emit(Ok(tools::ssh_bands(&ssh_params(a)?)), g),
        Command::SshBerry { ssh, points } => emit(Ok(tools::ssh_berry(&ssh_params(ssh)?, *points)), g),
        Command::SshEdges(a) => emit(tools::ssh_edges(&ssh_params(a)?), g),
        Command::XxzSpectrum(a) => {
            let p = XxzParams::new(a.jz, a.gamma, a.l).map_err(|e| Failure::Config(e.to_string()))?;
            emit(tools::xxz_spectrum(&p, g.tol_real), g)
        }
        Command::EpLocate(a) => {
            if !(a.lo < a.hi) {
                return Err(Failure::Config("ep-locate needs lo < hi".into()));
            }
            let s = OneHalfSettings { schedule: &a.schedule, a: a.a, b: a.b, tol_half: a.tol_half };
            match a.model {
                EpModel::Ssh => {
                    let p = SshParams::new(a.w, a.lo, a.v2, a.u, a.l).map_err(|e| Failure::Config(e.to_string()))?;
                    emit(tools::ssh_ep_locate(&p, a.lo, a.hi, s), g)
                }
                EpModel::Xxz => emit(tools::xxz_ep_locate(a.jz, a.l, a.lo, a.hi, a.bisect_tol, &lanczos, s), g),
            }
        }
        Command::Bench => emit(Ok(tools::bench(lanczos.seed)), g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("ptfid: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("ptfid: {m}");
            ExitCode::from(3)
        }
    }
}
