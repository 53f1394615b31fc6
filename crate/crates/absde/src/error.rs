//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested step count does not split the horizon `[0, T+S]` so
    /// that both the live part `[0, T]` and the band `[T, T+S]` contain an
    /// integer number of steps.
    #[error(
        "step count M = {steps} gives a non-integer live/band split \
         (T*M/(T+S) = {ratio}) for T = {horizon}, S = {band}"
    )]
    NonIntegerSplit {
        horizon: f64,
        band: f64,
        steps: usize,
        ratio: f64,
    },

    /// An anticipated time t + delta(t) left the data horizon `[0, T+S]`
    /// (or delta itself was negative / non-finite).
    #[error("anticipated time {anticipated} at t = {time} leaves [0, {max}]")]
    DelayOutOfRange { time: f64, anticipated: f64, max: f64 },

    /// Gauss-Hermite order outside the supported `1..=64` range.
    #[error("quadrature order {order} outside supported range 1..=64")]
    OrderOutOfRange { order: usize },

    /// The balancing rule asked for more spatial nodes than the cap allows.
    #[error("space grid would need {nodes} nodes, above the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    /// A not-a-knot cubic spline needs at least four nodes.
    #[error("cubic spline needs at least 4 nodes, got {nodes}")]
    TooFewNodes { nodes: usize },

    /// A value array does not match the space grid it is fitted on.
    #[error("value count {values} does not match node count {nodes}")]
    LengthMismatch { values: usize, nodes: usize },

    /// A time level was read before being written by the backward sweep.
    #[error("time level {level} is not populated yet")]
    LevelNotPopulated { level: usize },

    /// The sweep produced a NaN or infinity.
    #[error("non-finite value produced at level {level}, x = {x}")]
    NonFiniteValue { level: usize, x: f64 },

    /// Error comparison was requested for a problem without exact solution.
    #[error("problem `{0}` has no exact solution to compare against")]
    MissingExactSolution(String),

    /// CLI problem name not in the registry.
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    /// Rate fitting asked of data it cannot be fitted to.
    #[error("degenerate rate-fit input: {0}")]
    DegenerateInput(String),

    /// Precondition violation not covered by a more specific variant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// One run of a convergence sweep failed; carries the step count.
    #[error("run with M = {steps} failed")]
    RunFailed {
        steps: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures arising inside the numerical sweep itself, as
    /// opposed to input validation or I/O. The CLI maps these to a distinct
    /// exit code.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFiniteValue { .. } | Error::LevelNotPopulated { .. } => true,
            Error::RunFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
