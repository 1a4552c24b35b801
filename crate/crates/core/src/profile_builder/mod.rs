//! Similarity diffusion-wave profile, its second-order corrections and the
//! assembled approximate solution.

pub mod ansatz;
pub mod corrections;
pub mod distribution;
pub mod io;
pub mod mapping;
pub mod micro;
pub mod oracle;
pub mod similarity;

pub use corrections::{build_corrections, compute_nhat, compute_nhat_exact, CorrectionProfile, NhatProfile};
pub use similarity::{solve_theta_hat, SimilarityOptions, SimilarityProfile};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinetic_model::gas::GasModel;
use crate::kinetic_model::velocity::VelocityGrid;

/// Far fields and similarity-grid options of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub similarity: SimilarityOptions,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { theta_minus: 1.0, theta_plus: 1.1, similarity: SimilarityOptions::default() }
    }
}

/// Similarity profile, sources taken on `vgrid`, and corrections.
pub fn build_profile(spec: &ProfileSpec, gas: &GasModel, vgrid: &VelocityGrid) -> Result<(SimilarityProfile, CorrectionProfile)> {
    let sim = solve_theta_hat(spec.theta_minus, spec.theta_plus, gas.a_law(), &spec.similarity)?;
    let nhat = compute_nhat(&sim, gas, vgrid)?;
    let corr = build_corrections(&sim, gas, nhat)?;
    Ok((sim, corr))
}
