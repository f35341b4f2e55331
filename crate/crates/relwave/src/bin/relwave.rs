//! Command-line front end: scenario configuration, subcommand dispatch, and
//! CSV/JSON artifact emission.
//!
//! Every run writes its artifacts atomically into the output directory, puts
//! a JSON sidecar manifest (config hash + version) next to each one, and
//! prints a one-line JSON summary to stdout. Exit codes: 0 success,
//! 2 validation error, 1 runtime error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use relwave::dispersion::{omega_branch, DispersionTable};
use relwave::fock::{quantization_report, FockSpace};
use relwave::grid::ComplexField;
use relwave::io;
use relwave::observables::conservation_report;
use relwave::propagators::{evolve_exact, evolve_truncated, schrodinger_reference};
use relwave::scenario::{Method, ScenarioConfig};
use relwave::units::PhysicalParams;
use relwave::wavefield::{self, InitialData, ModeAmplitudes};
use relwave::{Branch, RelwaveError};

#[derive(Parser)]
#[command(name = "relwave", version, about = "Spectral laboratory for a first-order-in-time relativistic wave equation")]
struct Cli {
    /// Scenario config file (JSON); supplies units, grid, state and run
    /// defaults where a subcommand needs them.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate both dispersion branches and the group velocity.
    Dispersion(DispersionArgs),
    /// Evolve a field and write numbered snapshots plus a manifest.
    Evolve(EvolveArgs),
    /// Split a field into its two frequency branches.
    Split(SplitArgs),
    /// Track conserved totals and continuity residuals over an evolution.
    Conserve(ConserveArgs),
    /// Audit the truncated Fock-space realization of the quantized theory.
    Quantize(QuantizeArgs),
}

#[derive(Args)]
struct DispersionArgs {
    /// Largest wavenumber tabulated.
    #[arg(long)]
    kmax: f64,
    /// Number of rows (k = 0 .. kmax inclusive).
    #[arg(long)]
    steps: usize,
}

#[derive(Args)]
struct EvolveArgs {
    /// Field snapshot CSV; interpreted as a (+)-branch state. Defaults to
    /// the config's state block when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Evolution horizon.
    #[arg(long)]
    t: Option<f64>,
    /// exact | truncated:<N> | schrodinger.
    #[arg(long)]
    method: Option<Method>,
    /// Number of snapshots (equally spaced from 0 to t; 1 = final only).
    #[arg(long)]
    snapshots: Option<usize>,
}

#[derive(Args)]
struct SplitArgs {
    /// Field snapshot CSV. A bare field carries no time derivative, so the
    /// split is a cold start (psi_dot = 0), populating both branches.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct ConserveArgs {
    /// Field snapshot CSV; interpreted as a (+)-branch state.
    #[arg(long)]
    input: PathBuf,
    /// Evolution horizon.
    #[arg(long)]
    t: f64,
    /// Number of exact evolution steps sampled.
    #[arg(long)]
    steps: usize,
    /// Series order for the continuity residuals.
    #[arg(long, default_value_t = 3)]
    order: usize,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Comma-separated mode wavenumbers, e.g. --modes 0.0,1.0.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<f64>,
    /// Occupation cutoff per mode per species.
    #[arg(long)]
    nmax: usize,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
        }
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                RelwaveError::Validation(_) | RelwaveError::Domain(_) | RelwaveError::State(_) => 2,
                RelwaveError::Resource(_) | RelwaveError::Io(_) | RelwaveError::Json(_) => 1,
            };
            std::process::exit(code);
        }
    }
}

/// Context shared by the subcommands: optional scenario config plus the
/// bytes hashed into every manifest.
struct RunContext {
    config: Option<ScenarioConfig>,
    config_bytes: Vec<u8>,
    output_dir: PathBuf,
}

impl RunContext {
    fn new(cli_config: &Option<PathBuf>, output_dir: &Path, fallback: String) -> Result<Self, RelwaveError> {
        let (config, config_bytes) = match cli_config {
            Some(path) => {
                let cfg = ScenarioConfig::load(path)?;
                let bytes = cfg.canonical_bytes()?;
                (Some(cfg), bytes)
            }
            None => (None, fallback.into_bytes()),
        };
        // A config may carry its own output directory; an explicit
        // non-default --output-dir wins.
        let dir = match (&config, output_dir == Path::new("out")) {
            (Some(cfg), true) => cfg.output.directory.clone(),
            _ => output_dir.to_path_buf(),
        };
        Ok(RunContext {
            config,
            config_bytes,
            output_dir: dir,
        })
    }

    fn params(&self) -> Result<PhysicalParams, RelwaveError> {
        match &self.config {
            Some(cfg) => cfg.params(),
            None => Ok(PhysicalParams::natural()),
        }
    }

    fn write_csv(&self, command: &str, name: &str, body: &str) -> Result<PathBuf, RelwaveError> {
        let path = self.output_dir.join(name);
        io::write_atomic(&path, body.as_bytes())?;
        io::Manifest::new(command, &self.config_bytes, &path).write_sidecar(&path)?;
        Ok(path)
    }

    fn write_report(
        &self,
        command: &str,
        name: &str,
        value: &impl serde::Serialize,
    ) -> Result<PathBuf, RelwaveError> {
        let path = self.output_dir.join(name);
        io::write_json(&path, value)?;
        io::Manifest::new(command, &self.config_bytes, &path).write_sidecar(&path)?;
        Ok(path)
    }
}

fn run(cli: Cli) -> Result<String, RelwaveError> {
    match &cli.command {
        Command::Dispersion(args) => cmd_dispersion(&cli, args),
        Command::Evolve(args) => cmd_evolve(&cli, args),
        Command::Split(args) => cmd_split(&cli, args),
        Command::Conserve(args) => cmd_conserve(&cli, args),
        Command::Quantize(args) => cmd_quantize(&cli, args),
    }
}

fn cmd_dispersion(cli: &Cli, args: &DispersionArgs) -> Result<String, RelwaveError> {
    let ctx = RunContext::new(
        &cli.config,
        &cli.output_dir,
        format!("dispersion --kmax {} --steps {}", args.kmax, args.steps),
    )?;
    let params = ctx.params()?;
    let table = DispersionTable::compute(args.kmax, args.steps, &params)?;
    let path = ctx.write_csv("dispersion", "dispersion.csv", &io::dispersion_to_csv(&table))?;
    Ok(json!({
        "command": "dispersion",
        "status": "ok",
        "rows": table.rows.len(),
        "artifacts": [path],
    })
    .to_string())
}

/// Interpret a bare field snapshot as a (+)-branch state: the time
/// derivative is synthesized spectrally as `-i omega_+(k)` per mode.
fn plus_branch_data(psi0: ComplexField, params: &PhysicalParams) -> Result<InitialData, RelwaveError> {
    let grid = psi0.grid().clone();
    let psi_dot0 = psi0.apply_symbol(|m| {
        let omega = omega_branch(grid.k_squared(m).sqrt(), Branch::Plus, params);
        Complex64::new(0.0, -omega)
    });
    InitialData::new(psi0, psi_dot0)
}

fn load_or_build_state(
    ctx: &RunContext,
    input: &Option<PathBuf>,
    params: &PhysicalParams,
) -> Result<InitialData, RelwaveError> {
    match (input, &ctx.config) {
        (Some(path), _) => {
            let psi0 = io::read_field_csv(path)?;
            plus_branch_data(psi0, params)
        }
        (None, Some(cfg)) => {
            let grid = cfg.build_grid()?;
            cfg.build_state(&grid)
        }
        (None, None) => Err(RelwaveError::Validation(
            "evolve needs --input or --config".into(),
        )),
    }
}

fn cmd_evolve(cli: &Cli, args: &EvolveArgs) -> Result<String, RelwaveError> {
    let ctx = RunContext::new(
        &cli.config,
        &cli.output_dir,
        format!(
            "evolve --input {:?} --t {:?} --method {:?} --snapshots {:?}",
            args.input,
            args.t,
            args.method.map(|m| m.to_string()),
            args.snapshots
        ),
    )?;
    let params = ctx.params()?;
    let run_block = ctx.config.as_ref().map(|c| &c.run);
    let t_final = args
        .t
        .or(run_block.map(|r| r.t_final))
        .ok_or_else(|| RelwaveError::Validation("evolve needs --t (or a config run block)".into()))?;
    let method = args
        .method
        .or(run_block.map(|r| r.method))
        .ok_or_else(|| RelwaveError::Validation("evolve needs --method (or a config run block)".into()))?;
    let snapshots = args.snapshots.or(run_block.map(|r| r.snapshots)).unwrap_or(1);
    if snapshots == 0 {
        return Err(RelwaveError::Validation("--snapshots must be at least 1".into()));
    }
    if t_final < 0.0 {
        return Err(RelwaveError::Validation("--t must be non-negative".into()));
    }

    let data = load_or_build_state(&ctx, &args.input, &params)?;
    let amps = wavefield::split(&data, &params)?;
    let psi0 = amps.psi_spectral_at(0.0);

    let times: Vec<f64> = if snapshots == 1 {
        vec![t_final]
    } else {
        (0..snapshots)
            .map(|i| t_final * i as f64 / (snapshots - 1) as f64)
            .collect()
    };

    let mut artifacts = Vec::new();
    let mut norms = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let psi_t = match method {
            Method::Exact => evolve_exact(&amps, t).psi_spectral_at(0.0),
            Method::Truncated(order) => evolve_truncated(&psi0, t, order, &params)?,
            Method::Schrodinger => schrodinger_reference(&psi0, t, &params),
        };
        let physical = psi_t.to_physical();
        norms.push(physical.norm_sq());
        let name = format!("snapshot_{i:04}.csv");
        artifacts.push(ctx.write_csv("evolve", &name, &io::field_to_csv(&physical))?);
    }

    let manifest = json!({
        "method": method.to_string(),
        "times": times,
        "norms": norms,
        "snapshots": artifacts,
    });
    let report = ctx.write_report("evolve", "evolve_manifest.json", &manifest)?;
    Ok(json!({
        "command": "evolve",
        "status": "ok",
        "method": method.to_string(),
        "t_final": t_final,
        "snapshots": times.len(),
        "manifest": report,
    })
    .to_string())
}

fn cmd_split(cli: &Cli, args: &SplitArgs) -> Result<String, RelwaveError> {
    let ctx = RunContext::new(
        &cli.config,
        &cli.output_dir,
        format!("split --input {:?}", args.input),
    )?;
    let params = ctx.params()?;
    let psi0 = io::read_field_csv(&args.input)?;
    // Cold start: a snapshot CSV carries no time derivative.
    let psi_dot0 = ComplexField::zeros(psi0.grid().clone(), psi0.representation());
    let data = InitialData::new(psi0, psi_dot0)?;
    let amps = wavefield::split(&data, &params)?;
    let path = ctx.write_csv("split", "split.csv", &io::split_to_csv(&amps))?;
    Ok(json!({
        "command": "split",
        "status": "ok",
        "norm_plus": amps.branch_norm_sq(Branch::Plus),
        "norm_minus": amps.branch_norm_sq(Branch::Minus),
        "artifacts": [path],
    })
    .to_string())
}

fn cmd_conserve(cli: &Cli, args: &ConserveArgs) -> Result<String, RelwaveError> {
    let ctx = RunContext::new(
        &cli.config,
        &cli.output_dir,
        format!(
            "conserve --input {:?} --t {} --steps {} --order {}",
            args.input, args.t, args.steps, args.order
        ),
    )?;
    let params = ctx.params()?;
    let psi0 = io::read_field_csv(&args.input)?;
    let data = plus_branch_data(psi0, &params)?;
    let amps: ModeAmplitudes = wavefield::split(&data, &params)?;
    let report = conservation_report(&amps, args.t, args.steps, args.order)?;
    let csv_path = ctx.write_csv("conserve", "conservation.csv", &io::conservation_to_csv(&report))?;
    let summary = json!({
        "order": report.order,
        "rows": report.rows.len(),
        "max_norm_drift": report.max_norm_drift(),
        "max_energy_drift": report.max_energy_drift(),
        "max_momentum_drift": report.max_momentum_drift(),
        "max_continuity_residual": report
            .rows
            .iter()
            .map(|r| r.max_continuity_residual)
            .fold(0.0f64, f64::max),
        "max_energy_residual": report
            .rows
            .iter()
            .map(|r| r.max_energy_residual)
            .fold(0.0f64, f64::max),
        "max_momentum_residual": report
            .rows
            .iter()
            .map(|r| r.max_momentum_residual)
            .fold(0.0f64, f64::max),
    });
    let json_path = ctx.write_report("conserve", "conservation_summary.json", &summary)?;
    Ok(json!({
        "command": "conserve",
        "status": "ok",
        "max_norm_drift": summary["max_norm_drift"],
        "artifacts": [csv_path, json_path],
    })
    .to_string())
}

fn cmd_quantize(cli: &Cli, args: &QuantizeArgs) -> Result<String, RelwaveError> {
    let ctx = RunContext::new(
        &cli.config,
        &cli.output_dir,
        format!("quantize --modes {:?} --nmax {}", args.modes, args.nmax),
    )?;
    let params = ctx.params()?;
    let space = FockSpace::new(args.modes.clone(), args.nmax)?;
    let report = quantization_report(&space, &params)?;
    let path = ctx.write_report("quantize", "quantize_report.json", &report)?;
    Ok(json!({
        "command": "quantize",
        "status": "ok",
        "dim": report.dim,
        "vacuum_energy": report.vacuum_energy,
        "max_commutator_deviation": report
            .commutators
            .same_mode_deviation
            .max(report.commutators.cross_deviation),
        "artifacts": [path],
    })
    .to_string())
}
