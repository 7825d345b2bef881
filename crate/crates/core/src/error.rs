use thiserror::Error;

/// Failures raised by the geometry, dynamics and solver layers.
///
/// Solver runs that stop early report a [`crate::solver::Termination`] instead;
/// these errors are for inputs that cannot be processed at all.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point at r = {r} lies inside the horizon margin (need r > {limit})")]
    HorizonViolation { r: f64, limit: f64 },

    #[error("polar axis: |sin alpha| = {sin_alpha} is below the margin {margin}")]
    PolarSingularity { sin_alpha: f64, margin: f64 },

    #[error("induced metric is degenerate: det = {det}")]
    DegenerateMetric { det: f64 },

    #[error("induced metric is not Lorentzian: det = {delta} >= 0")]
    NotTimelike { delta: f64 },

    #[error("g11 = {g11} is not safely positive; the string direction must be spacelike")]
    DegenerateG11 { g11: f64 },

    #[error("characteristic speeds coincide: gap = {gap} at theta = {theta}")]
    CoincidentCharacteristics { gap: f64, theta: f64 },

    #[error("assumption {which} violated: {detail}")]
    AssumptionViolated { which: Assumption, detail: String },

    #[error("gauge constraint violated: {detail}")]
    GaugeViolation { detail: String },

    #[error("time step violates the CFL bound: cfl = {cfl}, limit = {limit}")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("quadrature failed to converge: {detail}")]
    Quadrature { detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed data file, line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("i/o: {0}")]
    Io(String),
}

/// Which of the admissibility conditions on the initial characteristic speeds failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Assumption {
    /// Speeds must be C1 with bounded norms.
    Regularity,
    /// Pointwise separation of the two speeds.
    Separation,
    /// Left speed at any point stays below the right speed at every point to its right.
    Ordering,
    /// Initial position keeps a margin from the horizon.
    Exterior,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Assumption::Regularity => "regularity",
            Assumption::Separation => "separation",
            Assumption::Ordering => "ordering",
            Assumption::Exterior => "exterior",
        };
        f.write_str(s)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
