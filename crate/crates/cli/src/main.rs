//! `scatter`: experiment runner for the complex-contour solvers.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use config::{Angle, Compare, GridKind, Method, PathKind, SmootherChoice};
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Core(scatter_core::Error),
}

impl From<scatter_core::Error> for CliError {
    fn from(e: scatter_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(scatter_core::Error::Config(_)) => 2,
            _ => 3,
        }
    }

    fn report(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Io(m) => ("io", m.clone()),
            CliError::Core(e @ scatter_core::Error::Config(_)) => ("config", e.to_string()),
            CliError::Core(e) => ("numerical", e.to_string()),
        };
        json!({ "status": "error", "kind": kind, "message": message })
    }
}

#[derive(Parser, Debug)]
#[command(name = "scatter", version, about = "Complex-contour multigrid experiments")]
struct Cli {
    /// JSON config with one section per subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for scans and stencil sweeps
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single Helmholtz solves
    #[command(subcommand)]
    Helmholtz(HelmholtzCommand),
    /// Iterations, work units and factors over a k0 x grid-size matrix
    MgBench(MgBenchArgs),
    /// Wall time of V-cycle and FMG solves
    FmgTime(FmgTimeArgs),
    /// Far-field map on a rotated grid, optionally against a real ECS reference
    Farfield(FarfieldArgs),
    /// Single and double ionization cross sections over an energy range
    IonizationScan(IonizationScanArgs),
    /// Multigrid convergence factor of the Schrodinger model over an energy range
    MgRateScan(MgRateScanArgs),
    /// Eigenvalues of the one-body Hamiltonian on real and rotated grids
    Spectrum(SpectrumArgs),
    /// ECS angle to rotation angle table
    AngleTable(AngleTableArgs),
}

#[derive(Subcommand, Debug)]
enum HelmholtzCommand {
    /// Solve one problem and write convergence statistics
    Solve(HelmholtzSolveArgs),
}

#[derive(Args, Debug, Default)]
struct SmootherArgs {
    #[arg(long, value_enum)]
    smoother: Option<SmootherChoice>,
    /// Jacobi damping
    #[arg(long)]
    omega: Option<f64>,
    /// GMRES smoother restart length
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args, Debug)]
struct HelmholtzSolveArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    k0: Option<f64>,
    /// Intervals per axis
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    grid: Option<GridKind>,
    /// Rotation angle (e.g. 0.17 or pi/18)
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<Angle>,
    /// ECS angle; also sets the rotation angle unless --gamma is given
    #[arg(long = "gamma-from-theta", alias = "theta")]
    theta: Option<Angle>,
    /// ECS layer intervals per side
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    smoother: SmootherArgs,
}

#[derive(Args, Debug)]
struct MgBenchArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated wavenumbers
    #[arg(long, value_delimiter = ',')]
    k0: Option<Vec<f64>>,
    /// Comma-separated interval counts
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long = "gamma-from-theta", alias = "theta")]
    theta: Option<Angle>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    smoother: SmootherArgs,
}

#[derive(Args, Debug)]
struct FmgTimeArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long = "gamma-from-theta", alias = "theta")]
    theta: Option<Angle>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args, Debug)]
struct FarfieldArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long = "gamma-from-theta", alias = "theta")]
    theta: Option<Angle>,
    #[arg(long, value_enum)]
    compare: Option<Compare>,
    #[arg(long)]
    ref_theta: Option<Angle>,
    #[arg(long)]
    ref_layer: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    ref_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    smoother: SmootherArgs,
}

#[derive(Args, Debug)]
struct IonizationScanArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long = "gamma-from-theta", alias = "theta")]
    theta: Option<Angle>,
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    energies: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    emin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    emax: Option<f64>,
    #[arg(long)]
    estep: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    paths: Option<Vec<PathKind>>,
    #[arg(long)]
    n_alpha: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args, Debug)]
struct MgRateScanArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    energies: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    emin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    emax: Option<f64>,
    #[arg(long)]
    estep: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// F(s) cycles per level before the measured V-cycles; 0 for a zero guess
    #[arg(long)]
    fmg_warmup: Option<usize>,
    #[arg(long)]
    rate_cycles: Option<usize>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<Angle>,
    #[arg(long)]
    kronecker: Option<bool>,
}

#[derive(Args, Debug)]
struct AngleTableArgs {
    /// Comma-separated ECS angles
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<Angle>>,
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let file = match &cli.config {
        Some(p) => config::ConfigFile::load(p)?,
        None => config::ConfigFile::default(),
    };
    let out = cli.out.as_path();
    match cli.command {
        Command::AngleTable(a) => commands::angle_table(&file, out, a),
        Command::Helmholtz(HelmholtzCommand::Solve(a)) => commands::helmholtz_solve(&file, out, a),
        Command::MgBench(a) => commands::mg_bench(&file, out, a),
        Command::FmgTime(a) => commands::fmg_time(&file, out, a),
        Command::Farfield(a) => commands::farfield(&file, out, a),
        Command::IonizationScan(a) => commands::ionization_scan(&file, out, a),
        Command::MgRateScan(a) => commands::mg_rate_scan(&file, out, a),
        Command::Spectrum(a) => commands::spectrum(&file, out, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.report()).unwrap_or_default());
            ExitCode::from(e.exit_code())
        }
    }
}
