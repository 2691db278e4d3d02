use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("side lengths must be positive, got ({0}, {1}, {2})")]
    InvalidSides(i64, i64, i64),
    #[error("vertex ({0}, {1}) is outside the hexagon")]
    OutsideDomain(i64, i64),
    #[error("height fields live on different domains")]
    DomainMismatch,
    #[error("height field is not admissible: {0}")]
    NotAdmissible(String),
    #[error("level {k} out of range 1..={max}")]
    LevelOutOfRange { k: i64, max: i64 },
    #[error("enumeration exceeded the limit of {0} states")]
    EnumerationLimit(usize),
    #[error("symmetry {0} needs matching side lengths")]
    IncompatibleSymmetry(&'static str),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("censor schedule: {0}")]
    Schedule(String),
    #[error("coupling order violated at t={time} site ({x}, {y})")]
    OrderViolation { time: f64, x: i64, y: i64 },
    #[error("coupling from the past did not coalesce within {0} epochs")]
    CftpCap(u32),
    #[error("shape parameters rejected: {0}")]
    ShapeParams(String),
    #[error("point ({0}, {1}) is outside the closed hexagon")]
    OutsideHexagon(f64, f64),
    #[error("quadrature did not converge at ({0}, {1})")]
    Quadrature(f64, f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
