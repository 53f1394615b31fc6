//! Gauss-Hermite rules and the conditional-expectation evaluators.
//!
//! All expectations the scheme needs are Gaussian integrals of grid fields.
//! With the physicists' convention (weight `e^{-x^2}`), a rule of order `G`
//! turns them into sums: for a one-step increment of variance `dt`,
//!
//! ```text
//! E[ g(x + W_dt) ]  ~  (1/sqrt(pi)) sum_i w_i g(x + sqrt(2 dt) p_i)
//! ```
//!
//! exactly for polynomial `g` of degree `<= 2G-1`. Expectations of the
//! generator with a delayed argument `m` steps further stack a second rule
//! over the independent increment of variance `m*dt` (a tensor product);
//! `m = 0` collapses the inner sum since its weights integrate to
//! `sqrt(pi)`. The `weight_dw` variants insert the increment realization
//! `sqrt(2 dt) p_i` as a factor, which is how the scheme forms
//! `E[Y ΔW]`-type moments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problems::Problem;
use crate::scheme::SolutionField;
use crate::spatial::SplineField;

/// Largest supported rule order.
pub const MAX_ORDER: usize = 64;

/// Newton convergence tolerance on a root update.
const ROOT_TOL: f64 = 1e-15;

/// Nodes (ascending) and weights of a Gauss-Hermite rule, weight `e^{-x^2}`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(node, weight)` pairs in ascending node order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

/// Value of the orthonormal Hermite polynomials `(h_n(z), h_{n-1}(z))` via
/// the three-term recurrence.
fn hermite_orthonormal(order: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=order {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

/// Computes the order-`G` rule by Newton iteration on the recurrence,
/// walking roots from the outermost inward with asymptotic initial guesses.
/// Symmetry is exact by construction (negative nodes mirror positive ones).
pub fn gauss_hermite_rule(order: usize) -> Result<QuadratureRule> {
    if order < 1 || order > MAX_ORDER {
        return Err(Error::OrderOutOfRange { order });
    }
    let nf = order as f64;
    let half = (order + 1) / 2;
    let mut roots = vec![0.0; half];
    let mut half_weights = vec![0.0; half];
    let mut z = 0.0_f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut slope;
        let mut steps = 0;
        loop {
            let (h, h_prev) = hermite_orthonormal(order, z);
            slope = (2.0 * nf).sqrt() * h_prev;
            let dz = h / slope;
            z -= dz;
            steps += 1;
            if dz.abs() <= ROOT_TOL * z.abs().max(1.0) || steps >= 200 {
                debug_assert!(steps < 200, "Newton stalled for order {order}");
                break;
            }
        }
        if order % 2 == 1 && i == half - 1 {
            // The middle root of an odd-order rule is 0 by symmetry; pin it
            // and recompute the derivative there for the weight.
            z = 0.0;
            let (_, h_prev) = hermite_orthonormal(order, z);
            slope = (2.0 * nf).sqrt() * h_prev;
        }
        debug_assert!(hermite_orthonormal(order, z).0.abs() <= 1e-12 * slope.abs().max(1.0));
        roots[i] = z;
        half_weights[i] = 2.0 / (slope * slope);
    }
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..half {
        nodes[i] = -roots[i];
        nodes[order - 1 - i] = roots[i];
        weights[i] = half_weights[i];
        weights[order - 1 - i] = half_weights[i];
    }
    Ok(QuadratureRule { nodes, weights })
}

/// `E[field(x + W_dt)]`, or `E[field(x + W_dt) * W_dt]` when `weight_dw`:
/// single Gauss-Hermite sum over the one-step increment.
pub fn expect_next(
    field: &SplineField,
    x: f64,
    dt: f64,
    rule: &QuadratureRule,
    weight_dw: bool,
) -> f64 {
    let scale = (2.0 * dt).sqrt();
    let mut acc = 0.0;
    for (p, w) in rule.points() {
        let mut g = field.eval(x + scale * p);
        if weight_dw {
            g *= scale * p;
        }
        acc += w * g;
    }
    acc / PI.sqrt()
}

/// Expectation, conditioned at level `n` and point `x`, of the generator
/// evaluated at the next level with its anticipated arguments `m` levels
/// further:
///
/// ```text
/// E[ f(t_{n+1}, Y^{n+1}, Z^{n+1}, Y^{n+1+m}, Z^{n+1+m}) (ΔW) ]
/// ```
///
/// The outer rule integrates the one-step increment (which also feeds the
/// optional `ΔW` factor), the inner rule the independent `m`-step increment
/// of the delayed arguments. `m = 0` needs no inner integral: the delayed
/// arguments coincide with the next-level ones.
#[allow(clippy::too_many_arguments)]
pub fn expect_generator_next(
    problem: &Problem,
    fields: &SolutionField,
    level: usize,
    delay_steps: usize,
    x: f64,
    grid: &TimeGrid,
    outer: &QuadratureRule,
    inner: &QuadratureRule,
    weight_dw: bool,
) -> Result<f64> {
    let dt = grid.dt();
    let t_next = grid.time(level + 1);
    let next = fields.level(level + 1)?;
    let scale = (2.0 * dt).sqrt();
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let mut acc = 0.0;
    if delay_steps == 0 {
        for (p, w) in outer.points() {
            let xi = x + scale * p;
            let y1 = next.y.eval(xi);
            let z1 = next.z.eval(xi);
            let mut g = problem.generator(t_next, y1, z1, y1, z1);
            if weight_dw {
                g *= scale * p;
            }
            acc += w * g;
        }
        return Ok(acc * inv_sqrt_pi);
    }
    let delayed = fields.level(level + 1 + delay_steps)?;
    let shift = (2.0 * delay_steps as f64 * dt).sqrt();
    for (p, w) in outer.points() {
        let xi = x + scale * p;
        let y1 = next.y.eval(xi);
        let z1 = next.z.eval(xi);
        let mut sum = 0.0;
        for (q, u) in inner.points() {
            let xq = xi + shift * q;
            sum += u * problem.generator(t_next, y1, z1, delayed.y.eval(xq), delayed.z.eval(xq));
        }
        let mut g = sum * inv_sqrt_pi;
        if weight_dw {
            g *= scale * p;
        }
        acc += w * g;
    }
    Ok(acc * inv_sqrt_pi)
}

/// Expectation, conditioned at level `n` and point `x`, of the generator
/// evaluated at the *current* level with the provisional pair
/// `(y_bar, z_val)` in its first slots and the anticipated arguments `m`
/// levels ahead:
///
/// ```text
/// m >= 1:  E[ f(t_n, y_bar, z_val, Y^{n+m}, Z^{n+m}) ]
/// m  = 0:  f(t_n, y_bar, z_val, y_bar, z_val)        (no quadrature)
/// ```
///
/// The `m = 0` rule substitutes the provisional pair for the anticipated
/// arguments, keeping the recursion explicit when the delay vanishes.
#[allow(clippy::too_many_arguments)]
pub fn expect_generator_current(
    problem: &Problem,
    fields: &SolutionField,
    level: usize,
    delay_steps: usize,
    x: f64,
    y_bar: f64,
    z_val: f64,
    grid: &TimeGrid,
    rule: &QuadratureRule,
) -> Result<f64> {
    let t = grid.time(level);
    if delay_steps == 0 {
        return Ok(problem.generator(t, y_bar, z_val, y_bar, z_val));
    }
    let delayed = fields.level(level + delay_steps)?;
    let shift = (2.0 * delay_steps as f64 * grid.dt()).sqrt();
    let mut acc = 0.0;
    for (q, u) in rule.points() {
        let xq = x + shift * q;
        acc += u * problem.generator(t, y_bar, z_val, delayed.y.eval(xq), delayed.z.eval(xq));
    }
    Ok(acc / PI.sqrt())
}
