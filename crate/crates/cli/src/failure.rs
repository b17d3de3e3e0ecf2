//! Failure classes and their exit codes: 1 for domain failures (the
//! computation itself failed), 2 for usage, IO and schema errors.

use std::fmt;

#[derive(Debug)]
pub enum Failure {
    Domain(String),
    Usage(String),
    Schema { pointer: String, message: String },
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn schema(pointer: impl Into<String>, msg: impl Into<String>) -> Self {
        Failure::Schema { pointer: pointer.into(), message: msg.into() }
    }

    pub fn schema_err<X>(pointer: impl Into<String>, msg: impl Into<String>) -> Result<X, Self> {
        Err(Self::schema(pointer, msg))
    }

    /// Attaches a config location to a usage error.
    pub fn at(self, pointer: &str) -> Self {
        match self {
            Failure::Usage(message) => Failure::Schema { pointer: pointer.to_string(), message },
            other => other,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) | Failure::Schema { .. } => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Domain(m) | Failure::Usage(m) => f.write_str(m),
            Failure::Schema { pointer, message } => write!(f, "config error at {pointer}: {message}"),
        }
    }
}

impl From<bundletc::Error> for Failure {
    fn from(e: bundletc::Error) -> Self {
        match e {
            bundletc::Error::Usage(m) => Failure::Usage(m),
            other => Failure::Domain(other.to_string()),
        }
    }
}
