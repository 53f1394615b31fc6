//! Uniform space grid and cubic-spline field representation.
//!
//! The grid spacing follows the accuracy-balancing rule `dx = dt^((p+1)/4)`,
//! which equates the `O(dt^(p+1))` local time error of a scheme of order `p`
//! with the `O(dx^4)` interpolation error of a cubic spline. The domain is a
//! symmetric interval of half-width `gamma*sqrt(T+S)` (rounded up to a node
//! multiple) around the starting point: `gamma = 10` standard deviations of
//! the terminal-time Brownian increment leaves negligible tail mass outside.
//!
//! Fields are stored as nodal values plus piecewise-cubic coefficients of the
//! not-a-knot interpolating spline (natural end conditions would drop the
//! boundary accuracy to second order and break the balancing rule).
//! Evaluation outside the domain clamps to the nearest boundary nodal value;
//! a per-field counter records how often that happens.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default cap on the node count of a space grid.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// Symmetric uniform grid with an odd node count; the center is a node.
#[derive(Debug, Clone)]
pub struct SpaceGrid {
    center: f64,
    dx: f64,
    half_count: usize,
    nodes: Vec<f64>,
}

impl SpaceGrid {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Index of the center node.
    pub fn center_index(&self) -> usize {
        self.half_count
    }

    pub fn half_width(&self) -> f64 {
        self.half_count as f64 * self.dx
    }

    pub fn min_x(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max_x(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> f64 {
        self.nodes[index]
    }
}

/// Sizes the grid by the balancing rule with the default node cap.
pub fn build_space_grid(
    center: f64,
    span: f64,
    dt: f64,
    scheme_order: u32,
    width_multiplier: f64,
) -> Result<SpaceGrid> {
    build_space_grid_capped(center, span, dt, scheme_order, width_multiplier, DEFAULT_NODE_CAP)
}

/// Sizes the grid by the balancing rule `dx = dt^((p+1)/4)` with half-width
/// `width_multiplier * sqrt(span)` rounded up to a whole number of spacings.
pub fn build_space_grid_capped(
    center: f64,
    span: f64,
    dt: f64,
    scheme_order: u32,
    width_multiplier: f64,
    node_cap: usize,
) -> Result<SpaceGrid> {
    if !center.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid center must be finite, got {center}"
        )));
    }
    if !span.is_finite() || span <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "time span must be positive and finite, got {span}"
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive and finite, got {dt}"
        )));
    }
    if scheme_order != 1 && scheme_order != 2 {
        return Err(Error::InvalidParameter(format!(
            "scheme order must be 1 or 2, got {scheme_order}"
        )));
    }
    if !width_multiplier.is_finite() || width_multiplier <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "width multiplier must be positive and finite, got {width_multiplier}"
        )));
    }

    let dx = dt.powf((scheme_order as f64 + 1.0) / 4.0);
    let raw_half = width_multiplier * span.sqrt();
    let half_count = (raw_half / dx).ceil();
    if !half_count.is_finite() || half_count > ((node_cap.saturating_sub(1)) / 2) as f64 {
        return Err(Error::GridTooLarge {
            nodes: (half_count * 2.0 + 1.0) as usize,
            cap: node_cap,
        });
    }
    let half_count = half_count as usize;
    let half = half_count as isize;
    let nodes: Vec<f64> = (-half..=half).map(|k| center + k as f64 * dx).collect();
    Ok(SpaceGrid {
        center,
        dx,
        half_count,
        nodes,
    })
}

/// Nodal values plus not-a-knot cubic-spline coefficients over a shared grid.
#[derive(Debug)]
pub struct SplineField {
    space: Arc<SpaceGrid>,
    values: Vec<f64>,
    /// `[a, b, c, d]` per interval: value `a + t(b + t(c + t d))` at offset
    /// `t = x - x_i` from the interval's left node.
    coeffs: Vec<[f64; 4]>,
    clamp_events: AtomicU64,
}

impl SplineField {
    /// Piecewise-cubic value at `x`; out-of-domain points clamp to the
    /// nearest boundary nodal value (and bump the clamp counter).
    pub fn eval(&self, x: f64) -> f64 {
        let lo = self.space.min_x();
        if x < lo {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
            return self.values[0];
        }
        if x > self.space.max_x() {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
            return *self.values.last().expect("field has values");
        }
        let dx = self.space.dx();
        let mut idx = ((x - lo) / dx) as usize;
        if idx >= self.coeffs.len() {
            idx = self.coeffs.len() - 1;
        }
        let t = x - (lo + idx as f64 * dx);
        let [a, b, c, d] = self.coeffs[idx];
        a + t * (b + t * (c + t * d))
    }

    /// How many evaluations have been clamped to a boundary value.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn space(&self) -> &Arc<SpaceGrid> {
        &self.space
    }
}

/// Frees the `field.eval(x)` call as the plain function some callers prefer.
pub fn spline_eval(field: &SplineField, x: f64) -> f64 {
    field.eval(x)
}

/// Fits the not-a-knot cubic spline through `values` on `space`.
pub fn spline_fit(space: Arc<SpaceGrid>, values: Vec<f64>) -> Result<SplineField> {
    let n = space.node_count();
    if values.len() != n {
        return Err(Error::LengthMismatch {
            values: values.len(),
            nodes: n,
        });
    }
    if n < 4 {
        return Err(Error::TooFewNodes { nodes: n });
    }
    let h = space.dx();
    let moments = not_a_knot_moments(&values, h);
    let mut coeffs = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let a = values[i];
        let b = (values[i + 1] - values[i]) / h - h * (2.0 * moments[i] + moments[i + 1]) / 6.0;
        let c = moments[i] / 2.0;
        let d = (moments[i + 1] - moments[i]) / (6.0 * h);
        coeffs.push([a, b, c, d]);
    }
    Ok(SplineField {
        space,
        values,
        coeffs,
        clamp_events: AtomicU64::new(0),
    })
}

/// Second derivatives ("moments") of the not-a-knot spline on a uniform grid.
///
/// The C2 conditions give `m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2 y[i] +
/// y[i-1]) / h^2` at interior nodes. Not-a-knot makes the first and last
/// interior moments explicit (`m[1]` and `m[n-2]` equal the adjacent second
/// differences), leaving a strictly diagonally dominant tridiagonal system
/// for the rest, solved by the Thomas algorithm; the boundary moments then
/// extrapolate linearly.
fn not_a_knot_moments(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    debug_assert!(n >= 4);
    let second = |i: usize| (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
    let mut m = vec![0.0; n];
    m[1] = second(1);
    m[n - 2] = second(n - 2);
    let unknowns = n - 4;
    if unknowns > 0 {
        let mut diag = vec![4.0; unknowns];
        let mut rhs: Vec<f64> = (2..n - 2).map(|i| 6.0 * second(i)).collect();
        rhs[0] -= m[1];
        rhs[unknowns - 1] -= m[n - 2];
        for i in 1..unknowns {
            let w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        m[2 + unknowns - 1] = rhs[unknowns - 1] / diag[unknowns - 1];
        for i in (0..unknowns - 1).rev() {
            m[2 + i] = (rhs[i] - m[2 + i + 1]) / diag[i];
        }
    }
    m[0] = 2.0 * m[1] - m[2];
    m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(center: f64, dx: f64, half_count: usize) -> Arc<SpaceGrid> {
        let half = half_count as isize;
        let nodes = (-half..=half).map(|k| center + k as f64 * dx).collect();
        Arc::new(SpaceGrid {
            center,
            dx,
            half_count,
            nodes,
        })
    }

    fn fit_fn(g: &Arc<SpaceGrid>, f: impl Fn(f64) -> f64) -> SplineField {
        spline_fit(g.clone(), g.nodes().iter().map(|&x| f(x)).collect()).unwrap()
    }

    #[test]
    fn balancing_rule_sizes_the_grid() {
        let g = build_space_grid(0.0, 1.25, 1.0 / 28.0, 2, 10.0).unwrap();
        let dx = (1.0f64 / 28.0).powf(0.75);
        assert!((g.dx() - dx).abs() <= 1e-15 * dx);
        // ceil(10*sqrt(1.25)/dx) = ceil(136.09) = 137
        assert_eq!(g.node_count(), 275);
        assert_eq!(g.center_index(), 137);
        assert_eq!(g.node(137), 0.0);
        assert!(g.half_width() >= 10.0 * 1.25f64.sqrt());
        assert!(g.half_width() < 10.0 * 1.25f64.sqrt() + dx);
        assert_eq!(g.node_count() % 2, 1);

        let g = build_space_grid(0.0, 1.0, 0.01, 1, 10.0).unwrap();
        assert!((g.dx() - 0.1).abs() <= 1e-15);
    }

    #[test]
    fn nodes_are_uniform_to_two_ulp() {
        let g = build_space_grid(0.3, 1.25, 1.0 / 28.0, 2, 10.0).unwrap();
        let dx = g.dx();
        for w in g.nodes().windows(2) {
            let gap = w[1] - w[0];
            assert!((gap - dx).abs() <= 2.0 * f64::EPSILON * w[1].abs().max(1.0));
        }
    }

    #[test]
    fn rejects_bad_orders_and_oversized_grids() {
        assert!(matches!(
            build_space_grid(0.0, 1.25, 0.01, 3, 10.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            build_space_grid_capped(0.0, 1.25, 1.0 / 28.0, 2, 10.0, 100),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(build_space_grid(0.0, 1.25, -0.1, 2, 10.0).is_err());
        assert!(build_space_grid(0.0, 1.25, 0.01, 2, 0.0).is_err());
    }

    #[test]
    fn spline_reproduces_linear_data() {
        let g = grid(0.0, 0.37, 8);
        let field = fit_fn(&g, |x| 2.5 * x - 1.0);
        let mut x = g.min_x();
        while x <= g.max_x() {
            assert!((field.eval(x) - (2.5 * x - 1.0)).abs() < 1e-12);
            x += 0.11;
        }
    }

    #[test]
    fn spline_reproduces_cubics() {
        let g = grid(0.5, 0.25, 10);
        let field = fit_fn(&g, |x| x * x * x - 2.0 * x);
        let mut x = g.min_x();
        while x <= g.max_x() {
            let exact = x * x * x - 2.0 * x;
            assert!((field.eval(x) - exact).abs() < 1e-10, "at {x}");
            x += 0.0437;
        }
    }

    #[test]
    fn spline_interpolates_nodal_values() {
        let g = grid(-1.3, 0.21, 12);
        let field = fit_fn(&g, |x| (3.0 * x).sin() + 0.2 * x);
        let scale = field
            .values()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((field.eval(x) - field.values()[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn spline_is_c2_at_interior_knots() {
        let g = grid(0.0, 0.19, 15);
        let field = fit_fn(&g, |x| (2.0 * x).cos() * (0.3 * x).exp());
        let h = g.dx();
        for i in 0..field.coeffs.len() - 1 {
            let [_, b, c, d] = field.coeffs[i];
            let [_, b1, c1, _] = field.coeffs[i + 1];
            // first and second derivatives from the left vs right of knot i+1
            let d1_left = b + 2.0 * c * h + 3.0 * d * h * h;
            let d2_left = 2.0 * c + 6.0 * d * h;
            assert!((d1_left - b1).abs() < 1e-9);
            assert!((d2_left - 2.0 * c1).abs() < 1e-9);
        }
    }

    #[test]
    fn spline_error_is_fourth_order_on_sin() {
        // Fixed domain [-2, 2]; halve dx four times and fit the log-log slope.
        let mut points = Vec::new();
        for level in 0..4 {
            let half_count = 8usize << level;
            let dx = 2.0 / half_count as f64;
            let g = grid(0.0, dx, half_count);
            let field = fit_fn(&g, f64::sin);
            let mut worst = 0.0f64;
            let mut x = -2.0;
            while x <= 2.0 {
                worst = worst.max((field.eval(x) - x.sin()).abs());
                x += 0.0123;
            }
            points.push((dx.ln(), worst.ln()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        assert!((3.7..=4.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn out_of_domain_evaluations_clamp_and_count() {
        let g = grid(0.0, 0.5, 4);
        let field = fit_fn(&g, |x| x * x);
        assert_eq!(field.clamp_count(), 0);
        assert_eq!(field.eval(g.max_x() + 1.0), field.values()[8]);
        assert_eq!(field.eval(g.min_x() - 3.0), field.values()[0]);
        assert_eq!(field.clamp_count(), 2);
    }

    #[test]
    fn clamping_never_triggers_inside_the_safe_reach() {
        let g = build_space_grid(0.0, 1.25, 1.0 / 28.0, 1, 10.0).unwrap();
        let field = fit_fn(&(Arc::new(g.clone())), f64::sin);
        // Worst-case evaluation reach of the solver's quadrature points for
        // a one-step plus a full-band delayed increment, with |node| <= 4.
        let dt = 1.0f64 / 28.0;
        let reach = (2.0 * dt).sqrt() * 4.0 + (2.0 * 8.0 * dt).sqrt() * 4.0;
        let lo = g.min_x() + reach;
        let hi = g.max_x() - reach;
        let mut x = lo;
        while x <= hi {
            field.eval(x);
            x += 0.37;
        }
        assert_eq!(field.clamp_count(), 0);
    }

    #[test]
    fn fit_rejects_short_or_mismatched_input() {
        let g = grid(0.0, 0.5, 1); // 3 nodes
        assert!(matches!(
            spline_fit(g.clone(), vec![0.0; 3]),
            Err(Error::TooFewNodes { nodes: 3 })
        ));
        let g = grid(0.0, 0.5, 3); // 7 nodes
        assert!(matches!(
            spline_fit(g, vec![0.0; 6]),
            Err(Error::LengthMismatch { values: 6, nodes: 7 })
        ));
    }
}
