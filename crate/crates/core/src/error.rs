use core::fmt;

use crate::fabric::FabricError;
use crate::{Gid, TimeMs};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter set or grid description is unusable.
    InvalidConfig { field: &'static str, reason: alloc::string::String },
    /// An id is outside the range covered by a partition plan.
    OutOfRange { what: &'static str, value: u64, limit: u64 },
    /// Integration produced a non-finite value.
    NumericDivergence { gid: Option<Gid>, t: Option<TimeMs> },
    /// Decoded payload disagrees with what was announced.
    Protocol(alloc::string::String),
    Fabric(FabricError),
}

impl Error {
    pub fn config(field: &'static str, reason: impl Into<alloc::string::String>) -> Self {
        Error::InvalidConfig { field, reason: reason.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::OutOfRange { what, value, limit } => {
                write!(f, "{what} {value} out of range (limit {limit})")
            }
            Error::NumericDivergence { gid, t } => {
                write!(f, "numeric divergence")?;
                if let Some(g) = gid {
                    write!(f, " in neuron {g}")?;
                }
                if let Some(t) = t {
                    write!(f, " at t={t} ms")?;
                }
                Ok(())
            }
            Error::Protocol(msg) => write!(f, "protocol error: {msg}"),
            Error::Fabric(e) => write!(f, "fabric: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl From<FabricError> for Error {
    fn from(e: FabricError) -> Self {
        Error::Fabric(e)
    }
}
