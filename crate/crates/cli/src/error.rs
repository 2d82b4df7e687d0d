use std::fmt;

/// CLI failures, each mapped to its own exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unknown flag or config key, or malformed syntax.
    Usage(String),
    OutOfRange {
        field: &'static str,
        value: String,
        expected: &'static str,
    },
    Missing {
        field: &'static str,
    },
    /// The chosen engine cannot handle the configuration size.
    Capacity(String),
    Io(String),
    /// Parameters valid on their own but inconsistent together.
    Invalid(String),
    /// `verify` found failing checks.
    VerifyFailed(usize),
    /// `--help` or `--version` output; not a failure.
    Help(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::OutOfRange { .. } => 3,
            CliError::Missing { .. } => 4,
            CliError::Capacity(_) => 5,
            CliError::Io(_) => 6,
            CliError::Invalid(_) => 7,
        }
    }

    pub(crate) fn from_clap(e: clap::Error) -> Self {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
            _ => CliError::Usage(
                e.to_string()
                    .lines()
                    .next()
                    .unwrap_or("invalid arguments")
                    .to_string(),
            ),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Help(m) => write!(f, "{m}"),
            CliError::OutOfRange {
                field,
                value,
                expected,
            } => write!(
                f,
                "error: {field} = {value} is out of range, expected {expected}"
            ),
            CliError::Missing { field } => write!(f, "error: missing required parameter {field}"),
            CliError::Capacity(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::Invalid(m) => write!(f, "error: {m}"),
            CliError::VerifyFailed(n) => write!(f, "error: {n} verification check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<qmimo::Error> for CliError {
    fn from(e: qmimo::Error) -> Self {
        match e {
            qmimo::Error::CapacityExceeded { .. } => {
                CliError::Capacity(format!("{e}; use --engine trajectory for larger m"))
            }
            qmimo::Error::ParameterOutOfRange { name, value } => CliError::OutOfRange {
                field: name,
                value: value.to_string(),
                expected: "[0, 1]",
            },
            other => CliError::Invalid(other.to_string()),
        }
    }
}
