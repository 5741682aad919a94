//! Command-line front end for `dengue-core`.
//!
//! Every subcommand reads a scenario file, applies `--set` overrides and
//! hands the result to the engine. Results go to `--output` (standard
//! output by default), diagnostics to standard error.
//!
//! Exit statuses: 0 on success, 1 on I/O failure, 2 on usage and validation
//! errors, 3 on numeric failures.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dengue_core::equilibrium::{
    brdfe_state, classify_stability, endemic_solve, sweep, threshold_control, trivial_equilibrium,
};
use dengue_core::integrator::integrate;
use dengue_core::model::{self, compute_m, Compartment};
use dengue_core::scenario::{
    parse_scenario_with_overrides, sci, write_plot_data, write_report, write_reports, write_sweep,
    write_trajectory_csv,
};
use dengue_core::{ControlLevel, Error, ErrorClass, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "dengue",
    version,
    about = "Dengue transmission with adulticide control"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scenario and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Emit one two-column block per compartment instead of the wide CSV.
        #[arg(long)]
        plot_data: bool,
    },
    /// Print M and the basic reproduction number.
    R0 {
        #[command(flatten)]
        common: Common,
    },
    /// Report the trivial, disease-free and endemic equilibria.
    Equilibria {
        #[command(flatten)]
        common: Common,
    },
    /// Stability of the disease-free equilibrium with a positive mosquito population.
    Stability {
        #[command(flatten)]
        common: Common,
    },
    /// Smallest control level with R0 below one.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD_TOL)]
        tol: f64,
    },
    /// R0, stability and simulation summary over a grid of control levels.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated values, or `start:stop:count` for an even grid.
        #[arg(long, default_value = "0:0.2:21", value_parser = parse_grid)]
        grid: Grid,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    pub scenario: PathBuf,
    /// Output path, `-` for standard output.
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Override a scenario key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
    /// Force the control level to zero.
    #[arg(long)]
    pub no_control: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_override(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("expected KEY=VALUE, got `{s}`")),
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
}

/// Parses `a,b,c` or `start:stop:count`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start = parse_number(parts[0])?;
        let stop = parse_number(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a count", parts[2]))?;
        if count < 2 {
            return Err("an even grid needs at least two points".into());
        }
        let values = (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect();
        return Ok(Grid(values));
    }
    if parts.len() != 1 {
        return Err(format!("cannot read grid `{s}`"));
    }
    s.split(',')
        .map(parse_number)
        .collect::<Result<_, _>>()
        .map(Grid)
}

fn exit_status(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation | ErrorClass::Domain => EXIT_VALIDATION,
        ErrorClass::Numeric => EXIT_NUMERIC,
        ErrorClass::Io => EXIT_IO,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { EXIT_OK } else { EXIT_VALIDATION };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_status(&e)
        }
    }
}

fn common(command: &Command) -> &Common {
    match command {
        Command::Simulate { common, .. }
        | Command::R0 { common }
        | Command::Equilibria { common }
        | Command::Stability { common }
        | Command::Threshold { common, .. }
        | Command::Sweep { common, .. } => common,
    }
}

/// Reads the scenario with overrides applied; `--no-control` wins over both.
pub fn load_scenario(common: &Common) -> dengue_core::Result<Scenario> {
    let text = fs::read_to_string(&common.scenario).map_err(|e| {
        Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", common.scenario.display()),
        ))
    })?;
    let mut scenario = parse_scenario_with_overrides(&text, &common.overrides)?;
    if common.no_control {
        scenario.control = ControlLevel::NONE;
    }
    Ok(scenario)
}

fn execute(
    command: &Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> dengue_core::Result<()> {
    let common = common(command);
    let scenario = load_scenario(common)?;
    let mut out = Vec::new();
    render(command, &scenario, &mut out, stderr)?;
    if common.output == "-" {
        stdout.write_all(&out)?;
        stdout.flush()?;
    } else {
        fs::write(&common.output, &out)
            .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", common.output))))?;
    }
    Ok(())
}

/// Produces the command's output for an already loaded scenario.
pub fn render(
    command: &Command,
    scenario: &Scenario,
    out: &mut Vec<u8>,
    stderr: &mut dyn Write,
) -> dengue_core::Result<()> {
    let p = &scenario.params;
    let c = scenario.control;
    match command {
        Command::Simulate { plot_data, .. } => {
            let traj = integrate(&scenario.initial, p, c, &scenario.integration)?;
            if *plot_data {
                write_plot_data(&traj, out)?;
            } else {
                write_trajectory_csv(&traj, out)?;
            }
            let (t_peak, peak) = traj.peak(Compartment::InfectedHumans);
            writeln!(
                stderr,
                "peak I_h = {} at t = {}; final I_m = {}",
                sci(peak),
                sci(t_peak),
                sci(traj.final_state().i_m)
            )?;
        }
        Command::R0 { .. } => {
            let r0 = model::r0(p, c)?;
            writeln!(out, "c = {}", sci(c.rate()))?;
            writeln!(out, "M = {}", sci(compute_m(p, c)))?;
            writeln!(out, "R0 = {}", sci(r0))?;
        }
        Command::Equilibria { .. } => {
            let mut reports = vec![trivial_equilibrium(p, c)?];
            match brdfe_state(p, c) {
                Ok(r) => reports.push(r),
                Err(e) => writeln!(stderr, "brdfe: {e}")?,
            }
            match endemic_solve(p, c, None) {
                Ok(r) => reports.push(r),
                Err(e) => writeln!(stderr, "endemic: {e}")?,
            }
            write_reports(&reports, out)?;
        }
        Command::Stability { .. } => {
            let report = brdfe_state(p, c)?;
            classify_stability(&report)?;
            write_report(&report, out)?;
        }
        Command::Threshold { tol, .. } => {
            let c_star = threshold_control(p, *tol)?;
            writeln!(out, "c* = {} (tol = {})", sci(c_star), sci(*tol))?;
        }
        Command::Sweep { grid, .. } => {
            let rows = sweep(p, &grid.0, &scenario.initial, &scenario.integration)?;
            write_sweep(&rows, out)?;
        }
    }
    Ok(())
}
