//! File formats, configuration and scenario drivers around [`bloom_core`].
//!
//! The `bloom` binary is a thin wrapper over [`run::run`].

pub mod config;
pub mod driver;
pub mod error;
pub mod export;
pub mod gmsh;
pub mod run;
pub mod vtk;
pub mod wind_csv;

pub use bloom_core as core;
pub use config::Config;
pub use error::{Error, Result};
pub use run::{run, Command, Report};
