use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad error families. The CLI maps each one to a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Precondition,
    NonConvergence,
    Invariant,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Parse => 2,
            ErrorClass::Precondition => 3,
            ErrorClass::NonConvergence => 4,
            ErrorClass::Invariant => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet must have between 1 and 256 letters, got {0}")]
    InvalidAlphabet(usize),

    #[error("letter x{letter} is not in an alphabet of size {size}")]
    LetterOutOfRange { letter: usize, size: usize },

    #[error("{what} mismatch: {left} vs {right}")]
    ShapeMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("word of length {length} is beyond truncation degree {degree}")]
    BeyondTruncation { length: usize, degree: usize },

    #[error("component {component} out of range for {outputs} output(s)")]
    ComponentOutOfRange { component: usize, outputs: usize },

    #[error("series is not purely improper: component {component} has zero constant term")]
    NotPurelyImproper { component: usize },

    #[error("series is not proper: component {component} has nonzero constant term")]
    NotProper { component: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("iteration did not converge after {iterations} steps (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } => ErrorClass::Parse,
            Error::NonConvergence { .. } => ErrorClass::NonConvergence,
            Error::Invariant(_) => ErrorClass::Invariant,
            _ => ErrorClass::Precondition,
        }
    }

    /// Stable machine-readable identifier, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidAlphabet(_) => "E_INVALID_ALPHABET",
            Error::LetterOutOfRange { .. } => "E_LETTER_OUT_OF_RANGE",
            Error::ShapeMismatch { .. } => "E_SHAPE_MISMATCH",
            Error::DimensionMismatch { .. } => "E_DIMENSION_MISMATCH",
            Error::BeyondTruncation { .. } => "E_BEYOND_TRUNCATION",
            Error::ComponentOutOfRange { .. } => "E_COMPONENT_OUT_OF_RANGE",
            Error::NotPurelyImproper { .. } => "E_NOT_PURELY_IMPROPER",
            Error::NotProper { .. } => "E_NOT_PROPER",
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::InvalidTrajectory(_) => "E_INVALID_TRAJECTORY",
            Error::NonConvergence { .. } => "E_NON_CONVERGENCE",
            Error::Parse { .. } => "E_PARSE",
            Error::Invariant(_) => "E_INVARIANT",
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
