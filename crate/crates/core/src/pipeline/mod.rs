//! The three measurement steps, for the singlet and for hidden-variable
//! models, and the classification table built from them.

mod model;
mod scan;
mod steps;
mod table;

pub use model::{
    conditioned_predictions, model_consistency, run_model_steps, ConsistencyCell, ModelConsistency, ModelStepReport,
    PredictionPoint,
};
pub use scan::{angle_scan, ModelScanPoint, ScanPoint};
pub use steps::{
    run_pipeline, run_step1, run_step2, run_step3, sample_outcome, PipelineReport, Status, Step, StepFlags, StepInputs,
    StepQuantities, StepReport,
};
pub use table::{build_classification_table, ClassificationRow, ClassificationTable};

use crate::checks::CheckError;
use crate::models::ModelError;
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Check(#[from] CheckError),
}
