//! Problem data: generator, delay, terminal band data, exact solutions.
//!
//! A problem describes the backward equation
//!
//! ```text
//! -dY_t = E[ f(t, Y_t, Z_t, Y_{t+delta(t)}, Z_{t+delta(t)}) | F_t ] dt - Z_t dW_t
//! ```
//!
//! on `[0, T]`, with `(Y, Z)` prescribed by the terminal functions on the
//! band `[T, T+S]`. Exact solutions, when known, are carried along for error
//! studies only — the solver never reads them.

use std::fmt;

use crate::error::{Error, Result};

type Generator = Box<dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync>;
type TimeFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type FieldFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub struct Problem {
    name: String,
    horizon: f64,
    band: f64,
    generator: Generator,
    delay: TimeFn,
    terminal_y: FieldFn,
    terminal_z: FieldFn,
    exact_y: Option<FieldFn>,
    exact_z: Option<FieldFn>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("band", &self.band)
            .field("has_exact", &self.has_exact())
            .finish()
    }
}

impl Problem {
    pub fn builder(name: impl Into<String>) -> ProblemBuilder {
        ProblemBuilder {
            name: name.into(),
            horizon: None,
            band: None,
            generator: None,
            delay: None,
            terminal_y: None,
            terminal_z: None,
            exact_y: None,
            exact_z: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `T`: end of the live interval.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `S`: length of the terminal band.
    pub fn band(&self) -> f64 {
        self.band
    }

    /// `T + S`.
    pub fn span(&self) -> f64 {
        self.horizon + self.band
    }

    /// Generator `f(t, y1, z1, y2, z2)` where `(y2, z2)` are the anticipated
    /// values at `t + delta(t)`.
    pub fn generator(&self, t: f64, y1: f64, z1: f64, y2: f64, z2: f64) -> f64 {
        (self.generator)(t, y1, z1, y2, z2)
    }

    pub fn delay(&self, t: f64) -> f64 {
        (self.delay)(t)
    }

    pub fn terminal_y(&self, t: f64, x: f64) -> f64 {
        (self.terminal_y)(t, x)
    }

    pub fn terminal_z(&self, t: f64, x: f64) -> f64 {
        (self.terminal_z)(t, x)
    }

    pub fn has_exact(&self) -> bool {
        self.exact_y.is_some() && self.exact_z.is_some()
    }

    pub fn exact_y(&self, t: f64, x: f64) -> Option<f64> {
        self.exact_y.as_ref().map(|f| f(t, x))
    }

    pub fn exact_z(&self, t: f64, x: f64) -> Option<f64> {
        self.exact_z.as_ref().map(|f| f(t, x))
    }
}

pub struct ProblemBuilder {
    name: String,
    horizon: Option<f64>,
    band: Option<f64>,
    generator: Option<Generator>,
    delay: Option<TimeFn>,
    terminal_y: Option<FieldFn>,
    terminal_z: Option<FieldFn>,
    exact_y: Option<FieldFn>,
    exact_z: Option<FieldFn>,
}

impl ProblemBuilder {
    pub fn horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn band(mut self, band: f64) -> Self {
        self.band = Some(band);
        self
    }

    pub fn generator(
        mut self,
        f: impl Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.generator = Some(Box::new(f));
        self
    }

    pub fn delay(mut self, delta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.delay = Some(Box::new(delta));
        self
    }

    pub fn terminal(
        mut self,
        y: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        z: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.terminal_y = Some(Box::new(y));
        self.terminal_z = Some(Box::new(z));
        self
    }

    pub fn exact(
        mut self,
        y: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        z: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact_y = Some(Box::new(y));
        self.exact_z = Some(Box::new(z));
        self
    }

    pub fn build(self) -> Result<Problem> {
        let missing = |part: &str| {
            Error::InvalidParameter(format!("problem `{}` is missing {part}", self.name))
        };
        let horizon = self.horizon.ok_or_else(|| missing("a horizon"))?;
        let band = self.band.ok_or_else(|| missing("a band length"))?;
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "problem `{}`: horizon must be positive, got {horizon}",
                self.name
            )));
        }
        if !band.is_finite() || band < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "problem `{}`: band must be non-negative, got {band}",
                self.name
            )));
        }
        Ok(Problem {
            name: self.name.clone(),
            horizon,
            band,
            generator: self.generator.ok_or_else(|| missing("a generator"))?,
            delay: self.delay.ok_or_else(|| missing("a delay function"))?,
            terminal_y: self.terminal_y.ok_or_else(|| missing("terminal data"))?,
            terminal_z: self.terminal_z.ok_or_else(|| missing("terminal data"))?,
            exact_y: self.exact_y,
            exact_z: self.exact_z,
        })
    }
}

/// Linear benchmark: delay `t^2/4`, exact solution
/// `Y = e^t sin(t+x)`, `Z = e^t cos(t+x)`, with `(Y_0, Z_0) = (0, 1)`.
pub fn example1() -> Problem {
    Problem::builder("example1")
        .horizon(1.0)
        .band(0.25)
        .delay(|t| 0.25 * t * t)
        .generator(|t, y1, _z1, y2, z2| {
            let d = 0.25 * t * t;
            -0.5 * y1 - (y2 * d.sin() + z2 * d.cos()) * (-0.5 * d).exp()
        })
        .terminal(
            |t, x| t.exp() * (t + x).sin(),
            |t, x| t.exp() * (t + x).cos(),
        )
        .exact(
            |t, x| t.exp() * (t + x).sin(),
            |t, x| t.exp() * (t + x).cos(),
        )
        .build()
        .expect("example1 is well-formed")
}

/// Nonlinear benchmark: delay `t^2/4`, exact solution
/// `Y = sin(t+x)`, `Z = cos(t+x)`, with `(Y_0, Z_0) = (0, 1)`.
pub fn example2() -> Problem {
    Problem::builder("example2")
        .horizon(1.0)
        .band(0.25)
        .delay(|t| 0.25 * t * t)
        .generator(|t, y1, z1, y2, z2| {
            let d = 0.25 * t * t;
            (y1 - 2.0 * (y2 * d.sin() + z2 * d.cos()) * (0.5 * d).exp())
                / (y1 * y1 + z1 * z1 + 1.0)
        })
        .terminal(|t, x| (t + x).sin(), |t, x| (t + x).cos())
        .exact(|t, x| (t + x).sin(), |t, x| (t + x).cos())
        .build()
        .expect("example2 is well-formed")
}

/// Terminal data families for the zero-generator oracle problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalFamily {
    /// `Y = sin(t+x)`, `Z = cos(t+x)` on the band; heat-kernel expectation
    /// gives `Y_t = e^{-(T-t)/2} sin(T+x)` (and the cosine for `Z`) on the
    /// live interval.
    SinShifted,
    /// Constant `Y ≡ c`, `Z ≡ 0`: a fixed point of the backward recursion.
    Constant(f64),
    /// `Y = x`, `Z ≡ 1`: the martingale `W` itself.
    Identity,
}

/// `f ≡ 0` oracle problem with delay `t^2/4` and closed-form exact solution.
///
/// With no generator the anticipated arguments are never used, so these
/// problems isolate the conditional-expectation and interpolation machinery.
pub fn zero_generator_problem(horizon: f64, band: f64, family: TerminalFamily) -> Result<Problem> {
    let name = match family {
        TerminalFamily::SinShifted => "zero-gen-sin",
        TerminalFamily::Constant(_) => "zero-gen-const",
        TerminalFamily::Identity => "zero-gen-linear",
    };
    let builder = Problem::builder(name)
        .horizon(horizon)
        .band(band)
        .delay(|t| 0.25 * t * t)
        .generator(|_, _, _, _, _| 0.0);
    match family {
        TerminalFamily::SinShifted => {
            let t_end = horizon;
            builder
                .terminal(|t, x| (t + x).sin(), |t, x| (t + x).cos())
                .exact(
                    move |t, x| {
                        if t >= t_end {
                            (t + x).sin()
                        } else {
                            (-0.5 * (t_end - t)).exp() * (t_end + x).sin()
                        }
                    },
                    move |t, x| {
                        if t >= t_end {
                            (t + x).cos()
                        } else {
                            (-0.5 * (t_end - t)).exp() * (t_end + x).cos()
                        }
                    },
                )
                .build()
        }
        TerminalFamily::Constant(c) => builder
            .terminal(move |_, _| c, |_, _| 0.0)
            .exact(move |_, _| c, |_, _| 0.0)
            .build(),
        TerminalFamily::Identity => builder
            .terminal(|_, x| x, |_, _| 1.0)
            .exact(|_, x| x, |_, _| 1.0)
            .build(),
    }
}

/// Looks up the problems reachable from the command line.
pub fn from_name(name: &str) -> Result<Problem> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "zero-gen-sin" => zero_generator_problem(1.0, 0.25, TerminalFamily::SinShifted),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}
