//! Command-line front end: scenario runs, test-bench experiments,
//! configuration validation and report generation.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 simulation
//! instability, 5 I/O.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use legsim::config::ConfigMap;
use legsim::powertrain::{
    energy_report, testbench_freq_sweep, testbench_step_response, EnergyReport, TestBench,
};
use legsim::sim::{
    apex_detector, ledger_from_trajectory_csv, run_scenario, write_trajectory_csv, ScenarioKind,
    ScenarioMetrics, SimError, TrajectoryRecord,
};

const EXIT_CONFIG: u8 = 3;
const EXIT_INSTABILITY: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "legsim",
    about = "Deterministic hopping-leg simulator with a series-elastic cable transmission",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file merged over the built-in defaults
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// key=value overrides applied after the config file (repeatable)
    #[arg(short = 'O', long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; all files are written beneath it
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario chosen by the effective config (scenario.kind)
    Simulate(SimArgs),
    /// Continuous hopping scenario (longevity preset)
    Hop(SimArgs),
    /// Repeated maximum-height jumps (highjump preset)
    Highjump(SimArgs),
    /// Torque step response on the single-actuator test bench
    StepResponse(StepArgs),
    /// Sinusoidal torque tracking sweep on the test bench
    FreqSweep(SweepArgs),
    /// Rebuild the energy report from a trajectory CSV
    EnergyReport(ReportArgs),
    /// Check the effective configuration against the reference specs
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Simulated duration in seconds (overrides sim.duration)
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct StepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Step command magnitude, Nm
    #[arg(long, default_value_t = 12.5)]
    torque: f64,
    /// Simulated duration, s
    #[arg(long, default_value_t = 0.4)]
    duration: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Drive amplitude, Nm
    #[arg(long, default_value_t = 12.5)]
    amplitude: f64,
    /// Frequencies in Hz, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 30.0, 50.0, 70.0])]
    freqs: Vec<f64>,
    /// Measured cycles per frequency after the transient
    #[arg(long, default_value_t = 10)]
    cycles: u32,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trajectory CSV produced by a scenario run
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

enum CliError {
    Config(String),
    Instability(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Instability(_) => EXIT_INSTABILITY,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Instability(m) | CliError::Io(m) => m,
        }
    }
}

impl From<legsim::ConfigError> for CliError {
    fn from(e: legsim::ConfigError) -> Self {
        match e {
            legsim::ConfigError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Instability { .. } => CliError::Instability(e.to_string()),
            SimError::Io(_) | SimError::Parse { .. } => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<legsim::powertrain::PowertrainError> for CliError {
    fn from(e: legsim::powertrain::PowertrainError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => run_sim(args, None),
        Command::Hop(args) => run_sim(args, Some(ScenarioKind::Longevity)),
        Command::Highjump(args) => run_sim(args, Some(ScenarioKind::HighJump)),
        Command::StepResponse(args) => run_step(args),
        Command::FreqSweep(args) => run_sweep(args),
        Command::EnergyReport(args) => run_energy_report(args),
        Command::Validate(args) => run_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("legsim: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Builds the effective configuration: preset defaults, then the config
/// file, then the command-line overrides.
fn effective_config(
    common: &CommonArgs,
    preset: Option<ScenarioKind>,
) -> Result<ConfigMap, CliError> {
    let mut map = match preset {
        Some(kind) => ConfigMap::preset(kind),
        None => ConfigMap::defaults(),
    };
    if let Some(path) = &common.config {
        map.merge_file(path)?;
    }
    for entry in &common.overrides {
        map.apply_override(entry)?;
    }
    Ok(map)
}

fn prepare_out_dir(common: &CommonArgs, map: &ConfigMap) -> Result<(), CliError> {
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join("effective_config.txt"), map.dump())?;
    Ok(())
}

fn write_report_files(
    out: &Path,
    report: &EnergyReport,
    metrics: Option<&ScenarioMetrics>,
) -> Result<(), CliError> {
    let mut text = String::new();
    for (k, v) in report.key_values() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    if let Some(metrics) = metrics {
        for (k, v) in metrics.key_values() {
            text.push_str(&format!("{k} = {v}\n"));
        }
    }
    fs::write(out.join("report.txt"), &text)?;
    let json = match metrics {
        Some(metrics) => serde_json::json!({ "report": report, "metrics": metrics }),
        None => serde_json::json!({ "report": report }),
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn run_sim(args: SimArgs, preset: Option<ScenarioKind>) -> Result<(), CliError> {
    let mut map = effective_config(&args.common, preset)?;
    if let Some(duration) = args.duration {
        map.set("sim.duration", &duration.to_string())?;
    }
    let scenario = map.build_scenario()?;
    prepare_out_dir(&args.common, &map)?;

    let (record, report, metrics) = run_scenario(&scenario)?;
    let file = fs::File::create(args.common.out.join("trajectory.csv"))?;
    write_trajectory_csv(&record, std::io::BufWriter::new(file))?;
    write_apexes(&args.common.out, &record)?;
    write_report_files(&args.common.out, &report, Some(&metrics))?;

    println!(
        "{}: {} s simulated, {} apexes, max apex {:.3} m (rest {:.3} m)",
        scenario.kind.label(),
        record.rows.last().map_or(0.0, |r| r.t),
        metrics.apex_count,
        metrics.max_apex_height,
        metrics.rest_height,
    );
    println!(
        "recuperation rate {:.4} (hardware reference {:.3}); peak |torque| {:.2} Nm, peak |joint speed| {:.2} rad/s",
        report.recuperation_rate,
        report.recuperation_rate_reference,
        metrics.peak_abs_torque,
        metrics.peak_abs_joint_speed,
    );
    Ok(())
}

fn write_apexes(out: &Path, record: &TrajectoryRecord) -> Result<(), CliError> {
    let apexes = apex_detector(record);
    let mut text = String::from("t,height\n");
    for apex in &apexes {
        text.push_str(&format!("{},{}\n", apex.t, apex.height));
    }
    fs::write(out.join("apexes.csv"), text)?;
    Ok(())
}

fn bench_from_config(map: &ConfigMap) -> Result<TestBench, CliError> {
    let model = map.build_model()?;
    Ok(TestBench {
        rotor_inertia: model.reflected_rotor_inertia(0),
        link_inertia: 0.05,
        output_locked: true,
        cable: map.build_cable()?,
        motors: map.build_motors()?,
        dt: 5.0e-6,
    })
}

fn run_step(args: StepArgs) -> Result<(), CliError> {
    let map = effective_config(&args.common, None)?;
    let bench = bench_from_config(&map)?;
    prepare_out_dir(&args.common, &map)?;

    let response = testbench_step_response(&bench, args.torque, args.duration)?;
    let mut csv = String::from("time,command,measured\n");
    for k in 0..response.time.len() {
        csv.push_str(&format!(
            "{},{},{}\n",
            response.time[k], response.command[k], response.measured[k]
        ));
    }
    fs::write(args.common.out.join("step_response.csv"), csv)?;

    let err = response.steady_state_error();
    println!(
        "step {} Nm: steady-state error {:.4}% ({} the 0.4% budget)",
        args.torque,
        err * 100.0,
        if err < 0.004 { "within" } else { "OUTSIDE" }
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let map = effective_config(&args.common, None)?;
    let bench = bench_from_config(&map)?;
    prepare_out_dir(&args.common, &map)?;

    let points = testbench_freq_sweep(&bench, args.amplitude, &args.freqs, args.cycles)?;
    let mut csv = String::from("freq,command,measured,gain,phase\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.freq_hz, p.amplitude_in, p.amplitude_out, p.gain, p.phase_deg
        ));
    }
    fs::write(args.common.out.join("freq_sweep.csv"), csv)?;

    for p in &points {
        println!(
            "{:6.1} Hz: gain {:.4}, phase {:7.2} deg",
            p.freq_hz, p.gain, p.phase_deg
        );
    }
    println!("bench series resonance {:.1} Hz", bench.resonance_hz());
    Ok(())
}

fn run_energy_report(args: ReportArgs) -> Result<(), CliError> {
    let map = effective_config(&args.common, None)?;
    prepare_out_dir(&args.common, &map)?;
    let text = fs::read_to_string(&args.input)?;
    let ledger = ledger_from_trajectory_csv(&text)?;
    let report = energy_report(&ledger)?;
    write_report_files(&args.common.out, &report, None)?;
    println!(
        "{} s of samples: battery {:.2} W avg, recuperation rate {:.4} (hardware reference {:.3})",
        report.duration,
        report.battery_avg_power,
        report.recuperation_rate,
        report.recuperation_rate_reference
    );
    Ok(())
}

fn run_validate(args: ValidateArgs) -> Result<(), CliError> {
    let map = effective_config(&args.common, None)?;
    let model = map.build_model()?;
    let motors = map.build_motors()?;
    let cable = map.build_cable()?;
    prepare_out_dir(&args.common, &map)?;

    let report = legsim::model::validate(&model, &motors, &cable);
    print!("{report}");
    let worst_rotor = model
        .reflected_rotor_inertia(0)
        .min(model.reflected_rotor_inertia(1));
    println!(
        "series resonance (cable vs reflected rotor): {:.1} Hz at dt-limited Nyquist {:.0} Hz",
        (cable.stiffness / worst_rotor).sqrt() / (2.0 * std::f64::consts::PI),
        0.5 / map.build_sim().map(|s| s.dt).unwrap_or(1e-4)
    );
    if report.all_passed() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{} validation check(s) failed",
            report.failures().count()
        )))
    }
}
