//! Velocity discretization, moments, Maxwellians, projections and the
//! relaxation collision model.

pub mod field;
pub mod gas;
pub mod local;
pub mod macrostate;
pub mod poly;
pub mod velocity;

pub use field::{DistributionField, MicroDecomposition, XGrid};
pub use gas::{GasModel, PrandtlMode, TransportCoeffs};
pub use macrostate::{Conserved, MacroState};
pub use velocity::{VelocityGrid, VelocityMode};
