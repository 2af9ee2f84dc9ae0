//! Stochastic spatial models of coexistence.
//!
//! * [`lattice`]: torus geometry, dispersal kernels, grids, random streams.
//! * [`models`]: the interacting particle systems.
//! * [`engine`]: exact continuous-time simulation by thinning.
//! * [`ode`] and [`pde`]: mean-field and reaction-diffusion limits.
//! * [`harness`]: experiment configuration, replicates, output.

pub mod engine;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod models;
pub mod ode;
pub mod pde;

pub use error::{Error, Result};
