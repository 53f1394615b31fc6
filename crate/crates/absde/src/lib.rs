//! Deterministic grid solver for anticipated backward stochastic
//! differential equations in one dimension.
//!
//! The target equation runs backward over `[0, T]`,
//!
//! ```text
//! -dY_t = E[ f(t, Y_t, Z_t, Y_{t+δ(t)}, Z_{t+δ(t)}) | F_t ] dt - Z_t dW_t,
//! ```
//!
//! with `(Y, Z)` prescribed on a terminal band `[T, T+S]` wide enough that
//! the anticipated time `t + δ(t)` never leaves the data. Writing the
//! solution as functions of the driving Brownian state turns the problem
//! into a backward recursion on a time-space grid:
//!
//! * [`grid`] — uniform time levels over `[0, T+S]` and the delay schedule
//!   mapping each anticipated time onto a convex combination of grid levels;
//! * [`spatial`] — the uniform space grid (spacing balanced against the
//!   scheme order) and not-a-knot cubic-spline fields over it;
//! * [`quadrature`] — Gauss-Hermite rules and the conditional-expectation
//!   evaluators for plain, increment-weighted and generator integrands;
//! * [`scheme`] — the explicit theta-scheme sweep producing `(Y, Z)` level
//!   by level, serial or parallel over nodes with identical results;
//! * [`problems`] — benchmark problems with exact solutions, plus a builder
//!   for custom ones;
//! * [`bench`] — convergence studies, rate fitting and CSV reports.
//!
//! Three weights steer the scheme: `θ₁` blends the generator between the
//! current and next time level in the `Y` update, `θ₂` does the same inside
//! the `Z` equation, and `θ₃` scales the `Z`-step correction. All choices
//! are first order; `(1/2, 1/2, 1/2)` is second order.

pub mod bench;
pub mod error;
pub mod grid;
pub mod problems;
pub mod quadrature;
pub mod scheme;
pub mod spatial;

pub use bench::{
    emit_csv, emit_plot_data, estimate_rate, render_csv, render_plot_data, run_convergence,
    solve_once, ConvergenceReport, ErrorReport, PlotField, RunConfig, SolveOutcome,
    EXAMPLE1_THETA_SETS, EXAMPLE2_THETA_SETS, TABLE_M_LIST,
};
pub use error::{Error, Result};
pub use grid::{build_delay_schedule, build_time_grid, DelayBracket, DelaySchedule, TimeGrid};
pub use problems::{example1, example2, zero_generator_problem, Problem, TerminalFamily};
pub use quadrature::{gauss_hermite_rule, QuadratureRule};
pub use scheme::{
    backward_solve, backward_solve_with, terminal_fill, QuadratureRules, SolutionField,
    ThetaParams, ThetaScheme,
};
pub use spatial::{build_space_grid, spline_fit, SpaceGrid, SplineField};
