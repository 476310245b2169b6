use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values.
    Usage(String),
    /// Unreadable, malformed or mismatched input data.
    Data(String),
    Core(bridgekit::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(bridgekit::Error::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<bridgekit::Error> for CliError {
    fn from(e: bridgekit::Error) -> Self {
        CliError::Core(e)
    }
}

pub fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
