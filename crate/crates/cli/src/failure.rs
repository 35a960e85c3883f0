// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

/// How a subcommand that ran to completion ended.
pub enum Outcome {
    Pass,
    /// A check subcommand reported at least one FAIL row.
    ChecksFailed,
}

/// Errors mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: bad flags or flag values.
    Usage(String),
    /// Exit 2: unreadable or invalid data and config files.
    Data(String),
    /// Exit 3: anything that went wrong while running.
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<drecusum::Error> for Failure {
    fn from(e: drecusum::Error) -> Self {
        use drecusum::Error as E;
        match e {
            E::Training { .. } | E::Io(_) => Self::Runtime(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}
