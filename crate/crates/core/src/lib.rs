//! Diffusion-wave profiles, a stiff kinetic solver, and convergence-rate
//! verification for the diffusively scaled slab kinetic equation
//! `ε f_t + ξ1 f_x = Q(f, f) / ε`.

pub mod convergence_harness;
pub mod error;
pub mod fluid_oracle;
pub mod kinetic_model;
pub mod kinetic_solver;
pub mod numerics;
pub mod profile_builder;
pub mod tolerances;

pub use error::{Error, Result};
