use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no tangent from parameter {param}: {reason}")]
    NoTangent { param: f64, reason: String },

    #[error("quadrature failure near {at}: {reason}")]
    QuadratureFailure { at: f64, reason: String },

    #[error("torsion changes sign more than {cap} times")]
    TooManyChanges { cap: usize },

    #[error("continuation stalled at a = {a}, b = {b}")]
    ContinuationStall { a: f64, b: f64 },

    #[error("chord [{a}, {b}] leaves the domain")]
    ChordExitsDomain { a: f64, b: f64 },

    #[error("integrand singular at {at} (cos of tangent angle vanishes)")]
    SingularIntegrand { at: f64 },

    #[error("boundary curvature degenerate at {at}")]
    CurvatureDegenerate { at: f64 },

    #[error("mesh window does not meet the domain")]
    EmptyMesh,

    #[error("no admissible candidate found")]
    NoCandidate,

    #[error("cannot split point ({x}, {y}) within budget")]
    StuckPoint { x: f64, y: f64 },

    #[error("invalid exponents: need p1 > p2 and both nonzero (p1 = {p1}, p2 = {p2})")]
    InvalidExponents { p1: f64, p2: f64 },

    #[error("profile is not convex near {at}")]
    NotConvex { at: f64 },

    #[error("boundary data is not bounded below")]
    UnboundedBelow,

    #[error("boundary data is not C3 ({0})")]
    NotSmooth(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
