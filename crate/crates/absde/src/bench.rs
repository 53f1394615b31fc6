//! Convergence studies: timed solves, error reports, rate fits, CSV output.
//!
//! A study runs the backward sweep for a list of step counts `M`, records the
//! absolute errors `|Y_0 - Y^0|` and `|Z_0 - Z^0|` at the starting point
//! `(t_0, x_0)` against the problem's exact solution, and fits the observed
//! order as the least-squares slope of `log(err)` against `log(dt)` over the
//! whole list (a global fit, less endpoint-sensitive than pairwise ratios).
//! Each run sizes its own space grid from the scheme order via the balancing
//! rule, so refining `dt` refines `dx` along with it.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::build_time_grid;
use crate::problems::Problem;
use crate::scheme::{backward_solve_with, QuadratureRules, ThetaParams};
use crate::spatial::{build_space_grid_capped, DEFAULT_NODE_CAP};

/// Step counts used by the benchmark tables.
pub const TABLE_M_LIST: [usize; 5] = [35, 55, 75, 95, 115];

/// Theta presets of the first benchmark table (linear problem).
pub const EXAMPLE1_THETA_SETS: [(f64, f64, f64); 6] = [
    (0.5, 0.5, 0.5),
    (1.0, 0.0, 0.5),
    (0.0, 0.5, 0.5),
    (0.0, 0.25, 0.5),
    (1.0, 0.5, 0.75),
    (0.5, 0.5, 0.25),
];

/// Theta presets of the second benchmark table (nonlinear problem).
pub const EXAMPLE2_THETA_SETS: [(f64, f64, f64); 6] = [
    (0.5, 0.5, 0.5),
    (1.0, 1.0, 1.0),
    (0.0, 0.5, 0.5),
    (0.0, 0.25, 0.5),
    (1.0, 0.5, 0.75),
    (1.0, 0.0, 0.5),
];

/// Discretization knobs shared by every run of a study.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    /// Gauss-Hermite order for both quadrature rules.
    pub gh_order: usize,
    /// Domain half-width in units of `sqrt(T+S)`.
    pub gamma: f64,
    /// Starting spatial point `x_0` (the grid center).
    pub center: f64,
    /// Fan the per-level node loop out across threads.
    pub parallel: bool,
    /// Refuse grids larger than this.
    pub node_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gh_order: 8,
            gamma: 10.0,
            center: 0.0,
            parallel: true,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

/// Result of a single timed solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveOutcome {
    pub steps: usize,
    pub dt: f64,
    /// Numerical `Y^0(x_0)` and `Z^0(x_0)`.
    pub y0: f64,
    pub z0: f64,
    /// Absolute errors at `(t_0, x_0)`, when the problem has an exact solution.
    pub err_y: Option<f64>,
    pub err_z: Option<f64>,
    pub node_count: usize,
    pub wall_time_s: f64,
}

/// Runs one backward solve with the grid sized from `steps` and the scheme
/// order, and reads the solution at the starting point.
pub fn solve_once(
    problem: &Problem,
    params: ThetaParams,
    steps: usize,
    config: &RunConfig,
) -> Result<SolveOutcome> {
    let grid = build_time_grid(problem.horizon(), problem.band(), steps)?;
    let space = Arc::new(build_space_grid_capped(
        config.center,
        grid.span(),
        grid.dt(),
        params.scheme_order(),
        config.gamma,
        config.node_cap,
    )?);
    let rules = QuadratureRules::gauss_hermite(config.gh_order)?;
    let start = Instant::now();
    let fields = backward_solve_with(problem, params, &grid, &space, &rules, config.parallel)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let first = fields.level(0)?;
    let at = space.center_index();
    let y0 = first.y.values()[at];
    let z0 = first.z.values()[at];
    let x0 = space.center();
    Ok(SolveOutcome {
        steps,
        dt: grid.dt(),
        y0,
        z0,
        err_y: problem.exact_y(0.0, x0).map(|e| (y0 - e).abs()),
        err_z: problem.exact_z(0.0, x0).map(|e| (z0 - e).abs()),
        node_count: space.node_count(),
        wall_time_s,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub steps: usize,
    pub dt: f64,
    pub err_y: f64,
    pub err_z: f64,
    pub wall_time_s: f64,
}

/// A full study: one row per step count plus the fitted rates (absent when
/// the fit is undefined, e.g. a single row or a vanishing error).
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub theta: (f64, f64, f64),
    pub rows: Vec<ErrorReport>,
    pub rate_y: Option<f64>,
    pub rate_z: Option<f64>,
}

/// Least-squares slope of `log(err)` against `log(dt)` over `(dt, err)`
/// pairs. Needs at least two distinct `dt` and strictly positive data.
pub fn estimate_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "rate fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(dt, err)| {
            if !(dt > 0.0) || !dt.is_finite() || !(err > 0.0) || !err.is_finite() {
                return Err(Error::DegenerateInput(format!(
                    "rate fit needs positive finite data, got ({dt}, {err})"
                )));
            }
            Ok((dt.ln(), err.ln()))
        })
        .collect::<Result<_>>()?;
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateInput(
            "rate fit needs at least two distinct dt values".to_string(),
        ));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(sxy / sxx)
}

/// Runs one solve per entry of `m_list` and fits the convergence rates.
/// A failing run is annotated with its step count before propagating.
pub fn run_convergence(
    problem: &Problem,
    params: ThetaParams,
    m_list: &[usize],
    config: &RunConfig,
) -> Result<ConvergenceReport> {
    if m_list.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence study needs at least one step count".to_string(),
        ));
    }
    if !problem.has_exact() {
        return Err(Error::MissingExactSolution(problem.name().to_string()));
    }
    let mut rows = Vec::with_capacity(m_list.len());
    for &steps in m_list {
        let outcome = solve_once(problem, params, steps, config).map_err(|e| Error::RunFailed {
            steps,
            source: Box::new(e),
        })?;
        rows.push(ErrorReport {
            steps,
            dt: outcome.dt,
            err_y: outcome.err_y.expect("exact solution checked above"),
            err_z: outcome.err_z.expect("exact solution checked above"),
            wall_time_s: outcome.wall_time_s,
        });
    }
    let points_y: Vec<(f64, f64)> = rows.iter().map(|r| (r.dt, r.err_y)).collect();
    let points_z: Vec<(f64, f64)> = rows.iter().map(|r| (r.dt, r.err_z)).collect();
    Ok(ConvergenceReport {
        problem: problem.name().to_string(),
        theta: (params.theta1(), params.theta2(), params.theta3()),
        rows,
        rate_y: estimate_rate(&points_y).ok(),
        rate_z: estimate_rate(&points_z).ok(),
    })
}

/// CSV text of a report: fixed header, one row per step count, values in
/// scientific notation with 6 significant digits, and trailing `# cr_y=` /
/// `# cr_z=` comment lines when rates exist.
pub fn render_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("M,dt,err_y,err_z,wall_time_s\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{:.5e},{:.5e},{:.5e},{:.5e}\n",
            row.steps, row.dt, row.err_y, row.err_z, row.wall_time_s
        ));
    }
    if !report.rows.is_empty() {
        if let (Some(ry), Some(rz)) = (report.rate_y, report.rate_z) {
            out.push_str(&format!("# cr_y={ry:.5e}\n# cr_z={rz:.5e}\n"));
        }
    }
    out
}

/// Writes `render_csv` to a file.
pub fn emit_csv(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_csv(report))?;
    Ok(())
}

/// Which error column a plot-data file tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotField {
    Y,
    Z,
}

/// Two-column `log(dt) log(err)` text data, one row per step count, ready
/// for any plotting tool. Rows whose logs are undefined are skipped.
pub fn render_plot_data(report: &ConvergenceReport, field: PlotField) -> String {
    let mut out = String::new();
    for row in &report.rows {
        let err = match field {
            PlotField::Y => row.err_y,
            PlotField::Z => row.err_z,
        };
        let (x, y) = (row.dt.ln(), err.ln());
        if x.is_finite() && y.is_finite() {
            out.push_str(&format!("{x:.6} {y:.6}\n"));
        }
    }
    out
}

/// Writes `render_plot_data` to a file.
pub fn emit_plot_data(
    report: &ConvergenceReport,
    field: PlotField,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, render_plot_data(report, field))?;
    Ok(())
}
