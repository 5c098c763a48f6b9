use std::fmt;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or inconsistent input data (exit 2).
    Data(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<lucid_dream::Error> for Failure {
    fn from(e: lucid_dream::Error) -> Self {
        Failure::Data(e.to_string())
    }
}
