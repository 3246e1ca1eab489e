//! Experiment suites: each suite runs a bundle of related checks against a
//! model and assembles a structured report with one record per check, every
//! numeric claim carrying its tolerance, and enough provenance (seeds,
//! grids, horizons) to reproduce the numbers.

mod report;
mod suites;

pub use report::{digest_inputs, CheckOp, CheckRecord, ExperimentReport};
pub use suites::{
    diffusion_suite, equivalence_suite, regularity_transfer_check, skeleton_suite,
    DiffusionSuiteParams,
};

use thiserror::Error;

use crate::ctmc::CtmcError;
use crate::diffusion::{DiffusionError, FieldError};
use crate::measures::MeasureError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Ctmc(#[from] CtmcError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Field(#[from] FieldError),
}
