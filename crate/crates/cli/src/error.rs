use std::fmt;

/// Failure of a command, carrying the name printed on stderr and the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration; exit code 2.
    Usage { name: &'static str, message: String },
    /// Some checked invariant does not hold; exit code 1.
    Invariant { failed: Vec<String> },
    /// A numerical routine broke down; exit code 3.
    Numerical { name: &'static str, message: String },
}

impl CliError {
    pub fn usage(name: &'static str, message: String) -> Self {
        CliError::Usage { name, message }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::usage("IoError", format!("{}: {e}", path.display()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage { name, .. } | CliError::Numerical { name, .. } => name,
            CliError::Invariant { .. } => "InvariantFailure",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant { .. } => 1,
            CliError::Usage { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage { message, .. } | CliError::Numerical { message, .. } => f.write_str(message),
            CliError::Invariant { failed } => write!(f, "failed invariants: {}", failed.join(", ")),
        }
    }
}

impl From<starspec_core::Error> for CliError {
    fn from(e: starspec_core::Error) -> Self {
        let (name, message) = (e.name(), e.to_string());
        if e.is_usage() {
            CliError::Usage { name, message }
        } else {
            CliError::Numerical { name, message }
        }
    }
}
