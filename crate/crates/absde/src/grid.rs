//! Uniform time partition of `[0, T+S]` and the delay schedule.
//!
//! The horizon splits into a live interval `[0, T]` where the backward
//! recursion runs and a terminal band `[T, T+S]` where data is prescribed.
//! Both must contain an integer number of steps: `T = N*dt`, `S = K*dt`,
//! `dt = (T+S)/M`, `M = N+K`.
//!
//! The generator reads the solution at the anticipated time `t_n + delta(t_n)`,
//! which generally falls between grid points. The delay schedule brackets it:
//!
//! ```text
//! minus_idx = floor(delta(t_n)/dt),   plus_idx = minus_idx + 1,
//! weight    = plus_idx - delta(t_n)/dt          (weight of the minus level)
//! ```
//!
//! so that `weight*minus_idx*dt + (1-weight)*plus_idx*dt = delta(t_n)`.
//! Offsets within `1e-9` of an integer are snapped onto it (`weight = 1`),
//! which keeps the weight from flapping between 0 and 1 under rounding and
//! covers the only case where `plus_idx` could point past the band end: when
//! that happens the unused zero-weight index is clamped to `minus_idx`.

use crate::error::{Error, Result};

/// Tolerance for the live/band integrality check and for snapping
/// near-integer delay offsets onto grid indices.
const SNAP_TOL: f64 = 1e-9;

/// Uniform partition of `[0, T+S]` into `N` live steps and `K` band steps.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    horizon: f64,
    band: f64,
    dt: f64,
    live_steps: usize,
    band_steps: usize,
}

impl TimeGrid {
    /// Length `T` of the live interval.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Length `S` of the terminal band.
    pub fn band(&self) -> f64 {
        self.band
    }

    /// Full data horizon `T + S`.
    pub fn span(&self) -> f64 {
        self.horizon + self.band
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `N`: number of steps in `[0, T]`.
    pub fn live_steps(&self) -> usize {
        self.live_steps
    }

    /// `K`: number of steps in `[T, T+S]`.
    pub fn band_steps(&self) -> usize {
        self.band_steps
    }

    /// `M = N + K`: total steps, so the last level index is `M`.
    pub fn total_steps(&self) -> usize {
        self.live_steps + self.band_steps
    }

    /// Number of time levels, `M + 1`.
    pub fn level_count(&self) -> usize {
        self.total_steps() + 1
    }

    /// Grid time `t_n = n*dt`.
    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }
}

/// Builds the uniform grid, rejecting step counts that leave the live/band
/// split non-integer.
pub fn build_time_grid(horizon: f64, band: f64, steps: usize) -> Result<TimeGrid> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon T must be positive and finite, got {horizon}"
        )));
    }
    if !band.is_finite() || band < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "band S must be non-negative and finite, got {band}"
        )));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 time steps, got {steps}"
        )));
    }
    let span = horizon + band;
    let dt = span / steps as f64;
    let ratio = horizon * steps as f64 / span;
    let live = ratio.round();
    if (ratio - live).abs() > SNAP_TOL {
        return Err(Error::NonIntegerSplit {
            horizon,
            band,
            steps,
            ratio,
        });
    }
    let live_steps = live as usize;
    if live_steps < 1 || live_steps > steps {
        return Err(Error::InvalidParameter(format!(
            "live step count N = {live} must lie in 1..={steps}"
        )));
    }
    Ok(TimeGrid {
        horizon,
        band,
        dt,
        live_steps,
        band_steps: steps - live_steps,
    })
}

/// Bracketing of one anticipated time onto grid levels: the generator's
/// delayed arguments at level `n` live at `n + minus_idx` with weight
/// `weight` and at `n + plus_idx` with weight `1 - weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBracket {
    pub minus_idx: usize,
    pub plus_idx: usize,
    pub weight: f64,
}

/// Delay brackets for every live level `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct DelaySchedule {
    brackets: Vec<DelayBracket>,
}

impl DelaySchedule {
    pub fn bracket(&self, level: usize) -> DelayBracket {
        self.brackets[level]
    }

    /// Number of scheduled levels (`N + 1`).
    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DelayBracket> {
        self.brackets.iter()
    }
}

/// Maps `t_n + delta(t_n)` onto bracketing grid indices for `n = 0..=N`.
///
/// `delta` must be non-negative with `t + delta(t) <= T + S` at every live
/// grid time (checked here, with a relative `1e-9` tolerance on the horizon).
pub fn build_delay_schedule(
    grid: &TimeGrid,
    delta: impl Fn(f64) -> f64,
) -> Result<DelaySchedule> {
    let dt = grid.dt();
    let span = grid.span();
    let last = grid.total_steps();
    let mut brackets = Vec::with_capacity(grid.live_steps() + 1);
    for n in 0..=grid.live_steps() {
        let t = grid.time(n);
        let d = delta(t);
        let out_of_range = Error::DelayOutOfRange {
            time: t,
            anticipated: t + d,
            max: span,
        };
        if !d.is_finite() || d < -SNAP_TOL * span {
            return Err(out_of_range);
        }
        let d = d.max(0.0);
        if t + d > span * (1.0 + SNAP_TOL) {
            return Err(out_of_range);
        }
        let ratio = d / dt;
        let nearest = ratio.round();
        let bracket = if (ratio - nearest).abs() <= SNAP_TOL {
            // Grid-aligned: a single level carries the whole weight. Only
            // point plus_idx past it when that stays on the grid.
            let aligned = nearest as usize;
            let plus = if n + aligned + 1 > last { aligned } else { aligned + 1 };
            DelayBracket {
                minus_idx: aligned,
                plus_idx: plus,
                weight: 1.0,
            }
        } else {
            let lo = ratio.floor() as usize;
            if n + lo + 1 > last {
                // Off-grid offset whose upper bracket leaves the band: only
                // reachable through the range tolerance above, so collapse
                // onto the last level.
                let end = last - n;
                DelayBracket {
                    minus_idx: end,
                    plus_idx: end,
                    weight: 1.0,
                }
            } else {
                DelayBracket {
                    minus_idx: lo,
                    plus_idx: lo + 1,
                    weight: (lo + 1) as f64 - ratio,
                }
            }
        };
        brackets.push(bracket);
    }
    Ok(DelaySchedule { brackets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_square(t: f64) -> f64 {
        0.25 * t * t
    }

    #[test]
    fn splits_live_and_band_steps() {
        let grid = build_time_grid(1.0, 0.25, 35).unwrap();
        assert!((grid.dt() - 1.0 / 28.0).abs() < 1e-15);
        assert_eq!(grid.live_steps(), 28);
        assert_eq!(grid.band_steps(), 7);
        assert_eq!(grid.total_steps(), 35);
        assert_eq!(grid.level_count(), 36);

        let grid = build_time_grid(1.0, 0.25, 40).unwrap();
        assert_eq!(grid.live_steps(), 32);
        assert_eq!(grid.band_steps(), 8);
    }

    #[test]
    fn grid_times_reproduce_split_points() {
        for &m in &[35usize, 55, 75, 95, 115] {
            let grid = build_time_grid(1.0, 0.25, m).unwrap();
            let t_live = grid.time(grid.live_steps());
            let t_end = grid.time(grid.total_steps());
            assert!((t_live - 1.0).abs() <= 4.0 * f64::EPSILON);
            assert!((t_end - 1.25).abs() <= 4.0 * 1.25 * f64::EPSILON);
        }
    }

    #[test]
    fn rejects_non_integer_split() {
        let err = build_time_grid(1.0, 0.3, 35).unwrap_err();
        assert!(matches!(err, Error::NonIntegerSplit { .. }), "{err}");
    }

    #[test]
    fn rejects_bad_scalars() {
        assert!(build_time_grid(0.0, 0.25, 35).is_err());
        assert!(build_time_grid(1.0, -0.1, 35).is_err());
        assert!(build_time_grid(1.0, 0.25, 1).is_err());
        assert!(build_time_grid(f64::NAN, 0.25, 35).is_err());
    }

    #[test]
    fn schedule_matches_hand_computed_brackets() {
        let grid = build_time_grid(1.0, 0.25, 35).unwrap();
        let sched = build_delay_schedule(&grid, quarter_square).unwrap();
        assert_eq!(sched.len(), 29);

        // delta(0)=0 is aligned; the upper bracket stays on the grid.
        let b0 = sched.bracket(0);
        assert_eq!((b0.minus_idx, b0.plus_idx), (0, 1));
        assert_eq!(b0.weight, 1.0);

        // t=0.5: delta/dt = 28*(0.0625) = 1.75.
        let b14 = sched.bracket(14);
        assert_eq!((b14.minus_idx, b14.plus_idx), (1, 2));
        assert!((b14.weight - 0.25).abs() < 1e-12);

        // t=1: delta/dt = 7 exactly; 28+7+1 would pass the band end, so the
        // zero-weight upper index is clamped.
        let b28 = sched.bracket(28);
        assert_eq!((b28.minus_idx, b28.plus_idx), (7, 7));
        assert_eq!(b28.weight, 1.0);
    }

    #[test]
    fn schedule_interpolation_identity_and_bounds() {
        for &m in &[35usize, 55, 75, 95, 115] {
            let grid = build_time_grid(1.0, 0.25, m).unwrap();
            let sched = build_delay_schedule(&grid, quarter_square).unwrap();
            let last = grid.total_steps();
            let mut prev_minus = 0usize;
            for (n, b) in sched.iter().enumerate() {
                let d = quarter_square(grid.time(n));
                assert!(b.weight > 0.0 && b.weight <= 1.0);
                let interp = b.weight * b.minus_idx as f64 * grid.dt()
                    + (1.0 - b.weight) * b.plus_idx as f64 * grid.dt();
                assert!(
                    (interp - d).abs() <= 1e-12 * d.max(1.0),
                    "M={m} n={n}: {interp} vs {d}"
                );
                assert!(n + b.minus_idx <= last);
                if b.weight < 1.0 {
                    assert!(n + b.plus_idx <= last);
                }
                assert!(b.minus_idx >= prev_minus, "minus_idx must be monotone");
                prev_minus = b.minus_idx;
            }
        }
    }

    #[test]
    fn snaps_near_integer_offsets() {
        let grid = build_time_grid(1.0, 0.25, 35).unwrap();
        let dt = grid.dt();
        // An offset a hair below 3*dt must not floor down to 2.
        let sched = build_delay_schedule(&grid, move |_| 3.0 * dt - 1e-12).unwrap();
        let b = sched.bracket(5);
        assert_eq!(b.minus_idx, 3);
        assert_eq!(b.weight, 1.0);
    }

    #[test]
    fn rejects_delay_leaving_the_band() {
        let grid = build_time_grid(1.0, 0.25, 35).unwrap();
        let err = build_delay_schedule(&grid, |_| 0.5).unwrap_err();
        assert!(matches!(err, Error::DelayOutOfRange { .. }), "{err}");
        let err = build_delay_schedule(&grid, |_| -0.1).unwrap_err();
        assert!(matches!(err, Error::DelayOutOfRange { .. }), "{err}");
    }

    #[test]
    fn zero_delay_is_admissible_without_band() {
        let grid = build_time_grid(1.0, 0.0, 32).unwrap();
        assert_eq!(grid.band_steps(), 0);
        let sched = build_delay_schedule(&grid, |_| 0.0).unwrap();
        for (n, b) in sched.iter().enumerate() {
            assert_eq!(b.minus_idx, 0);
            assert_eq!(b.weight, 1.0);
            assert!(n + b.plus_idx <= grid.total_steps());
        }
        // At the last level even the zero-weight upper index must be clamped.
        assert_eq!(sched.bracket(32).plus_idx, 0);
    }
}
