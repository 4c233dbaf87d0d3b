//! Spectral kernels for elastic diffraction tomography in the first-order
//! Born approximation.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coverage;
pub mod elastic;
pub mod error;
pub mod forward;
pub mod inversion;
pub mod linalg;
pub mod modesep;
pub mod phantom;

pub use error::{EdtError, Result};
