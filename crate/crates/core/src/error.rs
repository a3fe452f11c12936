use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its allowed range.
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// A special function was evaluated outside its domain.
    Domain { function: &'static str, x: f64 },
    /// The operation needs a specific number of URLLC users.
    UserCount { expected: usize, found: usize },
    /// Requested more frequencies than the draw carries.
    FrequencyCount { requested: usize, available: usize },
    EmptyGrid,
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            expected,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter {
                name,
                value,
                expected,
            } => write!(f, "invalid {name} = {value}: expected {expected}"),
            Error::Domain { function, x } => write!(f, "{function} is undefined at x = {x}"),
            Error::UserCount { expected, found } => {
                write!(f, "expected {expected} URLLC users, found {found}")
            }
            Error::FrequencyCount {
                requested,
                available,
            } => write!(
                f,
                "requested {requested} frequencies but only {available} are available"
            ),
            Error::EmptyGrid => f.write_str("search grid is empty"),
        }
    }
}

impl core::error::Error for Error {}
