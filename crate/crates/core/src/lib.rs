//! Coupled surface/subsurface water flow on unstructured triangular meshes.
//!
//! Surface water follows the 2D shallow water equations, written in the
//! well-balanced variables `(w, p, q) = (h + B, hu, hv)` and advanced with a
//! second-order HLL finite-volume scheme. Infiltration uses the Green-Ampt
//! model for one or two soil layers, switched per cell between the ponded
//! and rainfall-limited regimes.
//!
//! The pipeline for one explicit stage is
//! [`reconstruction`] → [`riemann`] → [`sources`], driven by the
//! [`solver`]; [`infiltration`] is evaluated once per step and frozen for
//! both stages. Configuration, built-in scenarios and file output live in
//! [`config`] and [`io`]; [`calibrate`] holds the hydrograph RMSE tools.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod infiltration;
pub mod io;
pub mod mesh;
pub mod reconstruction;
pub mod riemann;
pub mod solver;
pub mod sources;

pub use error::{Error, Result};
pub use mesh::{BoundaryTag, Mesh, Side};
pub use riemann::{ConservedState, EdgeFlux};
pub use solver::{FlowField, MassLedger, Simulation, SolverParams};

/// Gravitational acceleration [m/s²].
pub const GRAVITY: f64 = 9.81;

/// Default wet/dry depth threshold [m].
pub const DEFAULT_DRY_DEPTH: f64 = 1e-6;
