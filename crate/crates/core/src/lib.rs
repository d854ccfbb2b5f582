//! Latent-space conditioning toolkit for multi-conditional StyleGAN-style generators.
//!
//! Everything in this crate is pure computation over `alloc` containers: condition
//! encoding and wildcard masking, a seeded conditional mapping network with a toy
//! synthesis network, per-condition Gaussian analysis of the P space, latent
//! operations (centers of mass, truncation, condition arithmetic, inversion) and the
//! FID / FJD / I-FID / e_art metric suite. File formats and the command line live in
//! the `clat` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod condition;
pub mod error;
pub mod gaussian;
pub mod ingest;
pub mod latent_ops;
pub mod linalg;
pub mod mapping;
pub mod metrics;
pub mod pca;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
