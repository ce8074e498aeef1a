//! Coupled kinetic-fluid solver for a particle distribution transported by
//! density-dependent drag through a compressible, degenerately viscous gas.
//!
//! The crate provides:
//! - gridded phase-space state containers, velocity moments, and weighted norms ([`grid`]),
//! - a backward semi-Lagrangian kinetic solver and characteristic integrator ([`kinetic`]),
//! - a conservative finite-volume fluid solver that is safe at vacuum ([`fluid`]),
//! - a Strang-split coupled integrator and a successive-approximation
//!   (Picard) experiment ([`coupled`], [`picard`]),
//! - time-series functionals and machine checks of the exact conservation /
//!   dissipation identities ([`diagnostics`]),
//! - explicit blow-up constants, Gronwall bounds, and a finite-time blow-up
//!   certifier for initial data ([`blowup`]),
//! - config parsing, scenario presets, CSV series and binary snapshot I/O
//!   ([`config`], [`presets`], [`series`], [`snapshot`]).

pub mod blowup;
pub mod config;
pub mod coupled;
pub mod diagnostics;
pub mod error;
pub mod fluid;
pub mod grid;
pub mod kinetic;
pub mod numerics;
pub mod params;
pub mod picard;
pub mod presets;
pub mod series;
pub mod snapshot;

pub use error::{Error, Result};
pub use grid::{FluidState, KineticState, MomentFields, PhaseGrid};
pub use params::ModelParams;
