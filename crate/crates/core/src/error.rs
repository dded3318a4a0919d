use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An integer argument is outside its admissible range.
    Domain {
        what: &'static str,
        value: usize,
        max: usize,
    },
    /// Matrix or vector sizes do not agree.
    Shape { expected: usize, found: usize },
    /// A zero vector was passed where a direction is required.
    ZeroVector,
    /// Constructor input violates a structural invariant.
    Validation(String),
    /// A stated precondition of an operation does not hold.
    Precondition(String),
    /// Non-finite or degenerate data at a grid node.
    Numeric { node: usize, what: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value, max } => {
                write!(f, "{what} = {value} is out of range (max {max})")
            }
            Error::Shape { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::ZeroVector => f.write_str("direction vector must be nonzero"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Numeric { node, what } => write!(f, "numeric error at node {node}: {what}"),
        }
    }
}

impl core::error::Error for Error {}
