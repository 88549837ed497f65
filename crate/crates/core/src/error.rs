use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// Malformed input data (empty curve, zero vector, ...).
    Input(String),
    /// A site or interval lies outside the sampled window.
    Coverage { requested: (i64, i64), window: (i64, i64) },
    /// The energy sits numerically on the spectrum of a finite restriction.
    NearSingular { energy: f64, window: (i64, i64) },
    /// An empirical probability came out as zero at interval length `n`.
    InsufficientTrials { n: usize },
    /// No eigenvalue fell into the requested energy band.
    EmptyBand { lo: f64, hi: f64 },
    /// The box is too small for the evolution time; edge reflections would
    /// contaminate the result.
    Reflection { half_width: i64, required: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Coverage { requested, window } => {
                write!(f, "interval [{}, {}] is not covered by window [{}, {}]", requested.0, requested.1, window.0, window.1)
            }
            Error::NearSingular { energy, window } => {
                write!(f, "energy {energy} is numerically in the spectrum of the restriction to [{}, {}]", window.0, window.1)
            }
            Error::InsufficientTrials { n } => {
                write!(f, "no deviation events observed at n = {n}; increase trials or shrink epsilon")
            }
            Error::EmptyBand { lo, hi } => write!(f, "no eigenvalues in band [{lo}, {hi}]"),
            Error::Reflection { half_width, required } => {
                write!(f, "box half-width {half_width} is below the ballistic margin {required}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
