//! A desk-scale laboratory for a stochastic two-dimensional thermohaline
//! circulation model.
//!
//! The simulated system couples vorticity-form Boussinesq flow on a
//! latitude-depth rectangle to heat and salinity transport, with prescribed
//! air-sea fluxes on the surface and additive space-colored noise in the
//! vorticity equation. Alongside the integrator the crate provides the
//! machinery to probe the model's long-time behavior: an exact spectral
//! Ornstein-Uhlenbeck reduction, dissipativity envelopes and absorbing-set
//! radii, pullback and twin-trajectory experiments, and determining-
//! functional tests.
//!
//! See the book under `book/` for a guided tour; `src/guide.rs` keeps its
//! code snippets compiling as doc-tests.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod noise;
pub mod ops;
pub mod params;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{BcKind, ScalarField, State};
pub use grid::{make_grid, Grid};
pub use params::PhysParams;
