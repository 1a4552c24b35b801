//! Named numerical tolerances and grid constants.

/// The spec-level minimum for `V / sqrt(Rθ_max)`.
pub const MIN_CUTOFF_FACTOR: f64 = 6.0;

/// Default cutoff factor. At 6 the sixth Gaussian moment is truncated at the
/// 1e-5 level; 7.5 brings every moment `k ≤ 6` below 1e-9.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 7.5;

/// Relative error allowed in the Gaussian moment self-test.
pub const QUADRATURE_SELF_TEST: f64 = 1e-8;

/// Relative negativity floor for `m0`, `m2` (times the field maximum).
pub const NEG_TOL_REL: f64 = 1e-12;

/// Conservation of collision invariants by the collision step (relative).
pub const CONSERVATION_REL: f64 = 1e-12;

/// Entropy production must not exceed this (scaled by `ν ρ`).
pub const ENTROPY_PRODUCTION_TOL: f64 = 1e-12;

/// Projection identities on random inputs.
pub const PROJECTION_TOL: f64 = 1e-8;

/// Deviation of the χ Gram matrix from the identity.
pub const GRAM_TOL: f64 = 1e-6;

/// Reciprocal-condition threshold for small Gram/Newton systems.
pub const RCOND_MIN: f64 = 1e-13;

/// ψ-moments of an input to `linearized_inverse` must be below this,
/// relative to the input's natural scale.
pub const MICROSCOPIC_TOL: f64 = 1e-8;

/// Newton tolerance of the discrete-conservative Maxwellian fit (relative).
pub const MAXWELLIAN_FIT_TOL: f64 = 1e-14;

/// Sup-norm residual required of the similarity BVP.
pub const BVP_RESIDUAL: f64 = 1e-8;

/// Interior conservation drift allowed over a solver run (relative).
pub const SOLVER_DRIFT_REL: f64 = 1e-10;

/// Mass preservation of the Lagrangian-to-Eulerian map (relative).
pub const MAP_MASS_REL: f64 = 1e-8;

/// Hard floor for the ansatz distribution: `min f̄ ≥ -0.01 max f̄`.
pub const ANSATZ_NEG_HARD: f64 = 0.01;
