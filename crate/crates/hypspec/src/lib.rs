//! Length spectra of hyperbolic surfaces and the spectral statistics built on them.

pub mod error;
pub mod fuchsian;
pub mod hyperbolic;
pub mod stats;
pub mod words;
pub mod windows;
pub mod rng;
pub mod characters;
pub mod trace_stats;
pub mod rand_covers;
pub mod poisson_model;
pub mod dynamics;

pub use error::{Error, Result};
