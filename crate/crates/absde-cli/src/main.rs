//! Benchmark harness for the anticipated-BSDE solver.
//!
//! Three subcommands: `solve` runs a single step count and prints the
//! starting-point solution, `converge` sweeps a step-count list into a
//! convergence CSV (optionally log-log plot data), and `table` replays the
//! preset theta-sets of the benchmark tables for both example problems.
//!
//! Exit codes: 0 on success, 1 on validation or configuration errors,
//! 2 when a solve fails numerically (non-finite values).

use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use absde::problems::from_name;
use absde::{
    emit_csv, emit_plot_data, render_csv, run_convergence, solve_once, ConvergenceReport,
    PlotField, Result, RunConfig, ThetaParams, EXAMPLE1_THETA_SETS, EXAMPLE2_THETA_SETS,
    TABLE_M_LIST,
};

#[derive(Parser)]
#[command(
    name = "absde",
    version,
    about = "Explicit theta-scheme solver for anticipated backward SDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and print the starting-point values and errors.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of time steps M over [0, T+S].
        #[arg(long, default_value_t = 35)]
        steps: usize,
    },
    /// Sweep step counts and emit a convergence CSV.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated step counts.
        #[arg(long = "m-list", value_delimiter = ',', default_values_t = TABLE_M_LIST)]
        m_list: Vec<usize>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional two-column log(dt) log(err) plot-data destination.
        #[arg(long)]
        plot_out: Option<PathBuf>,
        /// Error column the plot data tracks.
        #[arg(long, value_enum, default_value_t = PlotColumn::Y)]
        plot_field: PlotColumn,
    },
    /// Replay the preset theta-set sweeps, one CSV per set.
    Table {
        /// Problem to tabulate: example1, example2 or all.
        #[arg(long, default_value = "all")]
        problem: String,
        /// Comma-separated step counts.
        #[arg(long = "m-list", value_delimiter = ',', default_values_t = TABLE_M_LIST)]
        m_list: Vec<usize>,
        /// Directory receiving the CSV files (must exist).
        #[arg(long)]
        out: PathBuf,
        /// Gauss-Hermite order.
        #[arg(long, default_value_t = 8)]
        gh_order: usize,
        /// Domain half-width in units of sqrt(T+S).
        #[arg(long, default_value_t = 10.0)]
        gamma: f64,
        /// Run the node loops on one thread.
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Problem name: example1, example2 or zero-gen-sin.
    #[arg(long, default_value = "example1")]
    problem: String,
    /// Generator weight between current and next level in the Y update.
    #[arg(long, default_value_t = 0.5)]
    theta1: f64,
    /// Generator weight inside the Z equation.
    #[arg(long, default_value_t = 0.5)]
    theta2: f64,
    /// Scale of the Z-step correction, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    theta3: f64,
    /// Gauss-Hermite order.
    #[arg(long, default_value_t = 8)]
    gh_order: usize,
    /// Domain half-width in units of sqrt(T+S).
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    /// Run the node loops on one thread.
    #[arg(long)]
    serial: bool,
}

impl CommonArgs {
    fn params(&self) -> Result<ThetaParams> {
        ThetaParams::new(self.theta1, self.theta2, self.theta3)
    }

    fn config(&self) -> RunConfig {
        RunConfig {
            gh_order: self.gh_order,
            gamma: self.gamma,
            parallel: !self.serial,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotColumn {
    Y,
    Z,
}

impl From<PlotColumn> for PlotField {
    fn from(column: PlotColumn) -> Self {
        match column {
            PlotColumn::Y => PlotField::Y,
            PlotColumn::Z => PlotField::Z,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(inner) = cause {
                eprintln!("  caused by: {inner}");
                cause = inner.source();
            }
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { common, steps } => {
            let problem = from_name(&common.problem)?;
            let outcome = solve_once(&problem, common.params()?, steps, &common.config())?;
            println!("problem      = {}", problem.name());
            println!("M            = {}", outcome.steps);
            println!("dt           = {:.5e}", outcome.dt);
            println!("space nodes  = {}", outcome.node_count);
            println!("Y0           = {:.12e}", outcome.y0);
            println!("Z0           = {:.12e}", outcome.z0);
            if let (Some(err_y), Some(err_z)) = (outcome.err_y, outcome.err_z) {
                println!("err_y        = {err_y:.5e}");
                println!("err_z        = {err_z:.5e}");
            }
            println!("wall_time_s  = {:.3}", outcome.wall_time_s);
            Ok(())
        }
        Command::Converge {
            common,
            m_list,
            out,
            plot_out,
            plot_field,
        } => {
            let problem = from_name(&common.problem)?;
            let report = run_convergence(&problem, common.params()?, &m_list, &common.config())?;
            match &out {
                Some(path) => emit_csv(&report, path)?,
                None => print!("{}", render_csv(&report)),
            }
            if let Some(path) = &plot_out {
                emit_plot_data(&report, plot_field.into(), path)?;
            }
            Ok(())
        }
        Command::Table {
            problem,
            m_list,
            out,
            gh_order,
            gamma,
            serial,
        } => {
            let selected: Vec<(&str, &[(f64, f64, f64)])> = match problem.as_str() {
                "example1" => vec![("example1", &EXAMPLE1_THETA_SETS)],
                "example2" => vec![("example2", &EXAMPLE2_THETA_SETS)],
                "all" => vec![
                    ("example1", &EXAMPLE1_THETA_SETS),
                    ("example2", &EXAMPLE2_THETA_SETS),
                ],
                other => return Err(absde::Error::UnknownProblem(other.to_string())),
            };
            let config = RunConfig {
                gh_order,
                gamma,
                parallel: !serial,
                ..RunConfig::default()
            };
            for (name, theta_sets) in selected {
                let problem = from_name(name)?;
                for &(t1, t2, t3) in theta_sets {
                    let params = ThetaParams::new(t1, t2, t3)?;
                    let report = run_convergence(&problem, params, &m_list, &config)?;
                    let path = out.join(format!("{name}_theta_{t1}_{t2}_{t3}.csv"));
                    emit_csv(&report, &path)?;
                    println!("{}", summary_line(&report, &path));
                }
            }
            Ok(())
        }
    }
}

fn summary_line(report: &ConvergenceReport, path: &std::path::Path) -> String {
    let rate = |r: Option<f64>| r.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    format!(
        "{} theta=({}, {}, {}): cr_y={} cr_z={} -> {}",
        report.problem,
        report.theta.0,
        report.theta.1,
        report.theta.2,
        rate(report.rate_y),
        rate(report.rate_z),
        path.display()
    )
}
