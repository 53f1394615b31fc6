//! The explicit theta-scheme backward recursion.
//!
//! Starting from the prescribed band data `(Y, Z)` on levels `N..=N+K`, each
//! sweep step builds level `n` from already-known later levels, node by node:
//!
//! ```text
//! Z^n  = E[Y^{n+1} ΔW]/dt + ((1-θ₂)/θ₃) E[f^{n+1} ΔW]
//! Ȳ^n  = E[Y^{n+1}] + dt E[f^{n+1}]                       (predictor)
//! Y^n  = E[Y^{n+1}] + θ₁ dt E[f̄^n] + (1-θ₁) dt E[f^{n+1}]  (corrector)
//! ```
//!
//! where `f^{n+1}` abbreviates the generator at `t_{n+1}` with its anticipated
//! arguments bracketed by the delay schedule (a convex combination of the two
//! bracketing levels, weights `k` and `1-k`), and `f̄^n` the generator at `t_n`
//! fed the provisional pair `(Ȳ^n, Z^n)`. Every right-hand side reads levels
//! `> n` only (plus the just-computed `Z^n`, `Ȳ^n` at `t_n` itself), so the
//! recursion stays explicit for any admissible `(θ₁, θ₂, θ₃)`. Degenerate
//! weights switch terms off exactly: `θ₂ = 1` skips the generator in the
//! `Z`-step, `θ₁ ∈ {0, 1}` drops one corrector side (and `θ₁ = 0` the
//! predictor), and a bracket weight of 1 skips the unused upper level.
//!
//! All nodes of a level are independent, so the per-level loop can fan out
//! across threads; results are collected in node order either way, making
//! serial and parallel sweeps bitwise identical.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{build_delay_schedule, DelaySchedule, TimeGrid};
use crate::problems::Problem;
use crate::quadrature::{
    expect_generator_current, expect_generator_next, expect_next, gauss_hermite_rule,
    QuadratureRule,
};
use crate::spatial::{spline_fit, SpaceGrid, SplineField};

/// Theta weights of the scheme. `theta1` blends the generator between the
/// current and next level in the `Y` update, `theta2` does the same inside
/// the `Z` equation, and `theta3` scales the `Z`-step generator correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaParams {
    theta1: f64,
    theta2: f64,
    theta3: f64,
}

impl ThetaParams {
    /// Requires `theta1, theta2 in [0, 1]` and `theta3 in (0, 1]`.
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(theta1) || !unit(theta2) {
            return Err(Error::InvalidParameter(format!(
                "theta1 and theta2 must lie in [0, 1], got ({theta1}, {theta2})"
            )));
        }
        if !theta3.is_finite() || theta3 <= 0.0 || theta3 > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "theta3 must lie in (0, 1], got {theta3}"
            )));
        }
        Ok(Self {
            theta1,
            theta2,
            theta3,
        })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn theta3(&self) -> f64 {
        self.theta3
    }

    /// Formal time order: 2 for the Crank-Nicolson point `(1/2, 1/2, 1/2)`,
    /// 1 for every other admissible choice.
    pub fn scheme_order(&self) -> u32 {
        if self.theta1 == 0.5 && self.theta2 == 0.5 && self.theta3 == 0.5 {
            2
        } else {
            1
        }
    }
}

/// The two Gauss-Hermite rules the sweep needs: `outer` for the one-step
/// increment, `inner` for the independent multi-step increment of the
/// anticipated arguments.
#[derive(Debug, Clone)]
pub struct QuadratureRules {
    pub outer: QuadratureRule,
    pub inner: QuadratureRule,
}

impl QuadratureRules {
    pub fn new(outer: QuadratureRule, inner: QuadratureRule) -> Self {
        Self { outer, inner }
    }

    /// Same-order Gauss-Hermite rule for both increments.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        let outer = gauss_hermite_rule(order)?;
        let inner = outer.clone();
        Ok(Self { outer, inner })
    }
}

/// The `(Y, Z)` fields of one time level.
#[derive(Debug)]
pub struct LevelFields {
    pub y: SplineField,
    pub z: SplineField,
}

/// All time levels of a solve over one shared space grid, populated backward
/// from the band.
#[derive(Debug)]
pub struct SolutionField {
    space: Arc<SpaceGrid>,
    levels: Vec<Option<LevelFields>>,
}

impl SolutionField {
    pub fn empty(space: Arc<SpaceGrid>, level_count: usize) -> Self {
        Self {
            space,
            levels: (0..level_count).map(|_| None).collect(),
        }
    }

    pub fn space(&self) -> &Arc<SpaceGrid> {
        &self.space
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn is_populated(&self, level: usize) -> bool {
        self.levels.get(level).is_some_and(Option::is_some)
    }

    pub fn level(&self, level: usize) -> Result<&LevelFields> {
        self.levels
            .get(level)
            .and_then(Option::as_ref)
            .ok_or(Error::LevelNotPopulated { level })
    }

    /// Fits and stores the nodal values of level `level`. Levels must be
    /// filled back to front so the recursion can never read a hole: setting
    /// `level` requires `level + 1` to be populated already (the last level
    /// starts the chain). Non-finite values are rejected with the node where
    /// they first appear.
    pub fn set_level(&mut self, level: usize, y: Vec<f64>, z: Vec<f64>) -> Result<()> {
        if level >= self.levels.len() {
            return Err(Error::InvalidParameter(format!(
                "level {level} is out of range for {} levels",
                self.levels.len()
            )));
        }
        if level + 1 < self.levels.len() && !self.is_populated(level + 1) {
            return Err(Error::LevelNotPopulated { level: level + 1 });
        }
        let nodes = self.space.node_count();
        for values in [&y, &z] {
            if values.len() != nodes {
                return Err(Error::LengthMismatch {
                    values: values.len(),
                    nodes,
                });
            }
            if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    level,
                    x: self.space.node(i),
                });
            }
        }
        let fitted = LevelFields {
            y: spline_fit(self.space.clone(), y)?,
            z: spline_fit(self.space.clone(), z)?,
        };
        self.levels[level] = Some(fitted);
        Ok(())
    }
}

/// Populates the band levels `N..=N+K` from the problem's terminal data.
pub fn terminal_fill(
    problem: &Problem,
    grid: &TimeGrid,
    space: &Arc<SpaceGrid>,
) -> Result<SolutionField> {
    let mut fields = SolutionField::empty(space.clone(), grid.level_count());
    for n in (grid.live_steps()..=grid.total_steps()).rev() {
        let t = grid.time(n);
        let y = space.nodes().iter().map(|&x| problem.terminal_y(t, x)).collect();
        let z = space.nodes().iter().map(|&x| problem.terminal_z(t, x)).collect();
        fields.set_level(n, y, z)?;
    }
    Ok(fields)
}

/// One configured sweep: problem, grids, weights and quadrature rules.
pub struct ThetaScheme<'a> {
    problem: &'a Problem,
    grid: &'a TimeGrid,
    schedule: &'a DelaySchedule,
    params: ThetaParams,
    rules: &'a QuadratureRules,
}

impl<'a> ThetaScheme<'a> {
    pub fn new(
        problem: &'a Problem,
        grid: &'a TimeGrid,
        schedule: &'a DelaySchedule,
        params: ThetaParams,
        rules: &'a QuadratureRules,
    ) -> Self {
        Self {
            problem,
            grid,
            schedule,
            params,
            rules,
        }
    }

    pub fn params(&self) -> ThetaParams {
        self.params
    }

    /// Bracket-weighted expectation of the next-level generator,
    /// `k E[f_-^{n+1} (ΔW)] + (1-k) E[f_+^{n+1} (ΔW)]`.
    fn next_generator(
        &self,
        fields: &SolutionField,
        level: usize,
        x: f64,
        weight_dw: bool,
    ) -> Result<f64> {
        let b = self.schedule.bracket(level + 1);
        let mut value = b.weight
            * expect_generator_next(
                self.problem,
                fields,
                level,
                b.minus_idx,
                x,
                self.grid,
                &self.rules.outer,
                &self.rules.inner,
                weight_dw,
            )?;
        if b.weight < 1.0 {
            value += (1.0 - b.weight)
                * expect_generator_next(
                    self.problem,
                    fields,
                    level,
                    b.plus_idx,
                    x,
                    self.grid,
                    &self.rules.outer,
                    &self.rules.inner,
                    weight_dw,
                )?;
        }
        Ok(value)
    }

    /// `Z^n(x)`: the increment-weighted martingale moment plus the generator
    /// correction (skipped entirely when `θ₂ = 1`).
    pub fn z_step(&self, fields: &SolutionField, level: usize, x: f64) -> Result<f64> {
        let dt = self.grid.dt();
        let next = fields.level(level + 1)?;
        let mut z = expect_next(&next.y, x, dt, &self.rules.outer, true) / dt;
        if self.params.theta2 < 1.0 {
            let gen = self.next_generator(fields, level, x, true)?;
            z += (1.0 - self.params.theta2) / self.params.theta3 * gen;
        }
        Ok(z)
    }

    /// `Ȳ^n(x)`: one fully explicit Euler step, always against the lower
    /// bracket level of the anticipated time.
    pub fn y_predictor(&self, fields: &SolutionField, level: usize, x: f64) -> Result<f64> {
        let dt = self.grid.dt();
        let next = fields.level(level + 1)?;
        let ey = expect_next(&next.y, x, dt, &self.rules.outer, false);
        let b = self.schedule.bracket(level + 1);
        let f = expect_generator_next(
            self.problem,
            fields,
            level,
            b.minus_idx,
            x,
            self.grid,
            &self.rules.outer,
            &self.rules.inner,
            false,
        )?;
        Ok(ey + dt * f)
    }

    /// `Y^n(x)`: corrector blending the current-level generator (fed the
    /// provisional pair `(y_pred, z_val)`) with the next-level one.
    pub fn y_corrector(
        &self,
        fields: &SolutionField,
        level: usize,
        x: f64,
        y_pred: f64,
        z_val: f64,
    ) -> Result<f64> {
        let dt = self.grid.dt();
        let next = fields.level(level + 1)?;
        let mut y = expect_next(&next.y, x, dt, &self.rules.outer, false);
        if self.params.theta1 > 0.0 {
            let b = self.schedule.bracket(level);
            let mut current = b.weight
                * expect_generator_current(
                    self.problem,
                    fields,
                    level,
                    b.minus_idx,
                    x,
                    y_pred,
                    z_val,
                    self.grid,
                    &self.rules.inner,
                )?;
            if b.weight < 1.0 {
                current += (1.0 - b.weight)
                    * expect_generator_current(
                        self.problem,
                        fields,
                        level,
                        b.plus_idx,
                        x,
                        y_pred,
                        z_val,
                        self.grid,
                        &self.rules.inner,
                    )?;
            }
            y += self.params.theta1 * dt * current;
        }
        if self.params.theta1 < 1.0 {
            let gen = self.next_generator(fields, level, x, false)?;
            y += (1.0 - self.params.theta1) * dt * gen;
        }
        Ok(y)
    }

    /// Full update of one node: `Z`, then the predictor (when the corrector
    /// will use it), then `Y`.
    pub fn advance_node(
        &self,
        fields: &SolutionField,
        level: usize,
        x: f64,
    ) -> Result<(f64, f64)> {
        let z = self.z_step(fields, level, x)?;
        let y_pred = if self.params.theta1 > 0.0 {
            self.y_predictor(fields, level, x)?
        } else {
            0.0
        };
        let y = self.y_corrector(fields, level, x, y_pred, z)?;
        if !y.is_finite() || !z.is_finite() {
            return Err(Error::NonFiniteValue { level, x });
        }
        Ok((y, z))
    }
}

/// Runs the full backward sweep (parallel over nodes) and returns every
/// populated level.
pub fn backward_solve(
    problem: &Problem,
    params: ThetaParams,
    grid: &TimeGrid,
    space: &Arc<SpaceGrid>,
    rules: &QuadratureRules,
) -> Result<SolutionField> {
    backward_solve_with(problem, params, grid, space, rules, true)
}

/// Backward sweep with an explicit serial/parallel switch. Both modes visit
/// nodes in grid order and produce bitwise-identical fields.
pub fn backward_solve_with(
    problem: &Problem,
    params: ThetaParams,
    grid: &TimeGrid,
    space: &Arc<SpaceGrid>,
    rules: &QuadratureRules,
    parallel: bool,
) -> Result<SolutionField> {
    let schedule = build_delay_schedule(grid, |t| problem.delay(t))?;
    let mut fields = terminal_fill(problem, grid, space)?;
    let scheme = ThetaScheme::new(problem, grid, &schedule, params, rules);
    for level in (0..grid.live_steps()).rev() {
        let pairs: Vec<(f64, f64)> = if parallel {
            space
                .nodes()
                .par_iter()
                .map(|&x| scheme.advance_node(&fields, level, x))
                .collect::<Result<_>>()?
        } else {
            space
                .nodes()
                .iter()
                .map(|&x| scheme.advance_node(&fields, level, x))
                .collect::<Result<_>>()?
        };
        let (y, z) = pairs.into_iter().unzip();
        fields.set_level(level, y, z)?;
    }
    Ok(fields)
}
