use thiserror::Error;

/// Errors raised by the geometry, field and solver routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tangent vector of norm {norm} exceeds the injectivity radius {radius}")]
    OutOfInjectivity { norm: f64, radius: f64 },

    #[error("points at distance {distance} lie outside the admissible radius {radius}")]
    OutsideSafeRadius { distance: f64, radius: f64 },

    #[error("coordinates left the chart domain")]
    LeftChartDomain,

    #[error("degenerate geodesic segment: endpoints coincide")]
    DegenerateSegment,

    #[error("degenerate plane: |u ^ v|^2 = {0}")]
    DegeneratePlane(f64),

    #[error("base point mismatch")]
    BaseMismatch,

    #[error("geodesic shooting did not converge (residual {residual})")]
    ShootingFailed { residual: f64 },

    #[error("endpoint matrix is near singular (smallest singular value {smallest_singular_value})")]
    NearConjugate { smallest_singular_value: f64 },

    #[error("field sampling grids do not match")]
    GridMismatch,

    #[error("vector is not orthogonal to the geodesic (|<v, gamma'>| = {0})")]
    NotOrthogonal(f64),

    #[error("not enough samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("every evaluation on the search region was +inf")]
    EmptyDomain,

    #[error("search gap {gap} not below the step slack {slack} within the evaluation budget")]
    SearchGap { gap: f64, slack: f64 },

    #[error("confinement failed: minimizer at distance {distance} from the query point (radius {radius})")]
    ConfinementFailed { distance: f64, radius: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
