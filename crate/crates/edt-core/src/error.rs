use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdtError {
    #[error("{0}")]
    InvalidParameter(String),
    #[error("|xi|^2 = {xi_sq} lies within the singular ring guard band of k^2 = {k_sq}")]
    RingProximity { xi_sq: f64, k_sq: f64 },
    #[error("source and observation points coincide")]
    CoincidentPoints,
    #[error("plane x3 = {x3} intersects the source support [{zmin}, {zmax}]")]
    PlaneIntersectsSupport { x3: f64, zmin: f64, zmax: f64 },
    #[error("observation point lies inside the phantom support (|x| = {0})")]
    PointInsideSupport(f64),
    #[error("lateral frequency outside the propagating disc |xi| < k")]
    OutsideDisc,
    #[error("wrong excitation: {0}")]
    WrongExcitation(String),
    #[error("every node of the grid is masked")]
    AllMasked,
    #[error("degenerate set: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = core::result::Result<T, EdtError>;

pub(crate) fn invalid(msg: &str) -> EdtError {
    EdtError::InvalidParameter(String::from(msg))
}
