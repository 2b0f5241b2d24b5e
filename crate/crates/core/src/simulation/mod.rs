//! Paired functional data with a known first canonical pair, optional
//! heavy tails, and contamination.

mod contamination;
mod model;

pub use contamination::{
    contaminate, ContaminationKind, ContaminationModel, ContaminationTarget, Shape,
};
pub use model::{
    population_cca, project_curve, GeneratorBasis, PopulationCca, PopulationOperators,
    ProcessModel, Tail,
};

use crate::error::Result;

/// `K` components, diagonal `spectrum` in each block, first scores
/// correlated at `rho0`.
pub fn make_canonical_model(k: usize, rho0: f64, spectrum: &[f64]) -> Result<ProcessModel> {
    ProcessModel::canonical(k, rho0, spectrum)
}

#[cfg(test)]
mod tests;
