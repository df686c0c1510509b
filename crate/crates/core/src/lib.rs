//! Numerical core for a stoichiometric reaction-diffusion-advection model of
//! cyanobacterial biomass, internal phosphorus and dissolved phosphorus in the
//! mixed surface layer of a lake.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem (mesh and wind parsers, VTK/CSV writers, the CLI) lives in the
//! `bloom` companion crate.
//!
//! Module map:
//!
//! - [`params`] and [`kernels`]: parameter record, state types and the closed-form
//!   reaction terms, equilibrium quantities and bounds.
//! - [`ode`]: homogeneous (movement-free) integration and equilibrium search.
//! - [`stability`]: mode-`n` linearisation, exact 3x3 spectra and the first-order
//!   perturbation estimate.
//! - [`wind`]: daily aggregation, Akima interpolation with speed capping, and a
//!   synthetic oscillatory wind.
//! - [`solver1d`]: method-of-lines finite differences on an interval.
//! - [`mesh`] and [`fem`]: P1 triangles, assembly and backward-Euler/Newton stepping.
//! - [`sensitivity`]: Sobol' sequence, Saltelli design and first/total-order indices.
//! - [`bdf`] and [`linalg`]: the stiff integrator and the banded solver underneath.
#![no_std]
// `!(x > 0.0)` is how validation rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bdf;
pub mod error;
pub mod fem;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod ode;
pub mod params;
pub mod sensitivity;
pub mod solver1d;
pub mod stability;
pub mod wind;

pub use error::{Error, Result};
pub use params::{HomState, ModelParams, Parameter};

/// Biomass below which the cell quota `p/B` is replaced by the extinction quota.
pub const EPS_BIOMASS: f64 = 1e-12;

/// Seconds per day; converts wind speeds from m/s to m/day.
pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
