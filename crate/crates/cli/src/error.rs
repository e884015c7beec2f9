use std::fmt;
use std::process::ExitCode;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or missing inputs (exit 2).
    Usage(String),
    /// Non-finite losses or degenerate data (exit 3).
    Numerical(String),
    /// Unreadable or unwritable files (exit 4).
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<hyperfield::Error> for CliError {
    fn from(e: hyperfield::Error) -> Self {
        use hyperfield::Error as E;
        let text = e.to_string();
        match e {
            E::Optimizer(_) | E::Degenerate(_) => CliError::Numerical(text),
            E::Io(_) | E::Format(_) | E::Acquisition { .. } => CliError::Io(text),
            E::Shape(_) | E::Argument(_) | E::Config(_) | E::Budget | E::State(_) => CliError::Usage(text),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
