use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArwError {
    #[error("operation not acceptable on an empty site")]
    NotAcceptable,
    #[error("illegal toppling: site {0:?} is stable")]
    IllegalToppling(Site),
    #[error("site {0:?} is outside the toppling window")]
    OutsideWindow(Site),
    #[error("active particle count overflow at a single site")]
    Overflow,
    #[error("invalid density {0}")]
    InvalidDensity(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inconsistent arena: {0}")]
    Arena(String),
    #[error("invalid jump distribution: {0}")]
    Jumps(String),
    #[error("size cap {0} exceeds the enumeration limit of 12")]
    SizeCapTooLarge(usize),
    #[error("no acceptable stabilizing sequence found within {0} topplings")]
    ConstructionFailed(u64),
    #[error("activity proxy cannot separate the bracket: {0}")]
    NoSeparation(String),
    #[error("relaxation exceeded the toppling cap ({0})")]
    CapExceeded(u64),
}

pub type Result<T> = std::result::Result<T, ArwError>;
