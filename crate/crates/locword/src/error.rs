//! Exit codes and the CLI error type.

use std::fmt;

/// Process exit statuses. The numeric values are part of the CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Internal = 1,
    Usage = 2,
    Coverage = 3,
    InsufficientTrials = 4,
    NearSingular = 5,
    InvalidInput = 6,
    Io = 7,
    Reflection = 8,
    VerificationFailed = 9,
    EmptyBand = 10,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Short machine-readable name written into manifests.
    pub fn kind(self) -> &'static str {
        match self {
            ExitCode::Success => "success",
            ExitCode::Internal => "internal",
            ExitCode::Usage => "usage",
            ExitCode::Coverage => "coverage",
            ExitCode::InsufficientTrials => "insufficient-trials",
            ExitCode::NearSingular => "near-singular",
            ExitCode::InvalidInput => "invalid-input",
            ExitCode::Io => "io",
            ExitCode::Reflection => "reflection",
            ExitCode::VerificationFailed => "verification-failed",
            ExitCode::EmptyBand => "empty-band",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Usage, message)
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        Self::new(ExitCode::Io, format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<locword_core::Error> for CliError {
    fn from(e: locword_core::Error) -> Self {
        use locword_core::Error as E;
        let code = match &e {
            E::InvalidParameter(_) | E::Input(_) => ExitCode::InvalidInput,
            E::Coverage { .. } => ExitCode::Coverage,
            E::NearSingular { .. } => ExitCode::NearSingular,
            E::InsufficientTrials { .. } => ExitCode::InsufficientTrials,
            E::EmptyBand { .. } => ExitCode::EmptyBand,
            E::Reflection { .. } => ExitCode::Reflection,
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
