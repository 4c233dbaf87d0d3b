//! Std companion of `edt-core`: FFT paths, parallel drivers, EDTG grid files,
//! run configuration and the command-line pipeline.

pub mod cli;
pub mod config;
pub mod edtg;
pub mod error;
pub mod export;
pub mod grids;
pub mod parallel;
pub mod phantom_io;
pub mod spectral;

pub use error::{Error, Result};
