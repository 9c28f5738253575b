//! `arraycap`: capacity scans, array optimization and self-checks.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arraycap::optimize::optimize_geometry;
use arraycap::validation::{run_checks, Hooks};
use clap::{Args, Parser, Subcommand};

use config::{Overrides, Plan};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    Checks(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Checks(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<arraycap::Error> for CliError {
    fn from(e: arraycap::Error) -> Self {
        match e {
            arraycap::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "arraycap", version, about = "Microphone-array evaluation by SIMO channel capacity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Narrowband capacity over azimuth at one frequency
    AzimuthScan(RunArgs),
    /// Narrowband capacity over frequency for the configured source
    FrequencyScan(RunArgs),
    /// Spectrally weighted capacity over azimuth
    Broadband(RunArgs),
    /// Search microphone placements maximizing broadband capacity
    Optimize(RunArgs),
    /// Run the built-in oracle checks
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Per-microphone SNR in dB
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Frequency for azimuth scans, Hz
    #[arg(long)]
    freq_hz: Option<f64>,
    /// Optimizer seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the result as an SVG line plot
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Accepted for symmetry with the other subcommands; unused
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, hide = true)]
    corrupt_sinc: bool,
}

fn load_plan(args: RunArgs) -> Result<Plan, CliError> {
    let config = config::read_config(&args.config)?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    config::plan(
        config,
        &base,
        Overrides {
            snr_db: args.snr_db,
            freq_hz: args.freq_hz,
            seed: args.seed,
            out: args.out,
            svg: args.svg,
        },
    )
}

fn write_map(plan: &Plan, map: &arraycap::capacity::CapacityMap) -> Result<(), CliError> {
    let csv = map.to_csv();
    if let Some(svg) = &plan.svg {
        output::write_atomic(svg, &output::svg_plot(map))?;
    }
    output::emit(plan.output.as_deref(), &csv)
}

fn azimuth_scan(plan: Plan) -> Result<(), CliError> {
    let range = range_of(&plan);
    let map = plan.channel.azimuth_scan(
        plan.freq_hz,
        plan.source.direction().polar(),
        &plan.azimuths,
        plan.snr_linear,
        range,
    )?;
    write_map(&plan, &map)
}

fn frequency_scan(plan: Plan) -> Result<(), CliError> {
    let map = plan.channel.frequency_scan(&plan.source, &plan.frequencies, plan.snr_linear)?;
    write_map(&plan, &map)
}

fn broadband(plan: Plan) -> Result<(), CliError> {
    let polar = plan.source.direction().polar();
    let mut map = plan
        .channel
        .broadband_azimuth_scan(&plan.weights, polar, &plan.azimuths, plan.snr_linear, range_of(&plan))?;
    if plan.azimuth_std > 0.0 {
        map.values = map
            .axis_values
            .iter()
            .map(|&a| {
                let nominal = plan
                    .source
                    .with_direction(arraycap::wavefield::Direction::new(a, polar)?);
                plan.channel.expected_capacity_under_position_uncertainty(
                    &nominal,
                    plan.azimuth_std,
                    plan.uncertainty_points,
                    &plan.weights,
                    plan.snr_linear,
                )
            })
            .collect::<arraycap::Result<Vec<_>>>()?;
        map.metadata.push(("azimuth_std_rad".into(), format!("{}", plan.azimuth_std)));
    }
    write_map(&plan, &map)
}

fn range_of(plan: &Plan) -> Option<f64> {
    match plan.source {
        arraycap::wavefield::SourceSpec::NearField { range, .. } => Some(range),
        arraycap::wavefield::SourceSpec::FarField(_) => None,
    }
}

fn optimize(plan: Plan) -> Result<(), CliError> {
    let Some(opt) = &plan.optimize else {
        return Err(CliError::Validation("optimize: section [optimize] is required".into()));
    };
    if plan.channel.scattering.is_some() {
        return Err(CliError::Validation(
            "scattering_file: scattering tables are tied to a fixed geometry and cannot be optimized".into(),
        ));
    }
    let report = optimize_geometry(
        &plan.channel.geometry,
        &opt.constraints,
        &opt.objective,
        &opt.options,
        plan.channel.speed_of_sound,
    )?;
    let geometry_path = opt
        .geometry_out
        .clone()
        .or_else(|| plan.output.as_ref().map(|p| p.with_extension("toml")));
    if let Some(path) = &geometry_path {
        output::write_atomic(path, &report.best.to_toml())?;
    }
    output::emit(plan.output.as_deref(), &report.trace_csv())?;
    eprintln!(
        "objective {:.6} -> {:.6} bits after {} evaluations (seed {})",
        report.initial_objective(),
        report.final_objective(),
        report.evaluations,
        report.seed
    );
    if geometry_path.is_none() {
        eprint!("{}", report.best.to_toml());
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let started = std::time::Instant::now();
    let results = run_checks(Hooks {
        corrupt_sinc: args.corrupt_sinc,
    });
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{} checks in {:.2} s", results.len(), started.elapsed().as_secs_f64());
    match results.iter().filter(|r| !r.passed).count() {
        0 => Ok(()),
        n => Err(CliError::Checks(n)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::AzimuthScan(a) => azimuth_scan(load_plan(a)?),
        Command::FrequencyScan(a) => frequency_scan(load_plan(a)?),
        Command::Broadband(a) => broadband(load_plan(a)?),
        Command::Optimize(a) => optimize(load_plan(a)?),
        Command::Validate(a) => validate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
