//! Exact recovery of low-rank tensors and their CP decompositions from
//! separable linear measurements.
//!
//! The pipeline recovers two low-rank contractions per contiguous mode pair
//! by nuclear-norm minimization, extracts the per-mode factors by
//! simultaneous diagonalization of the contraction pair, chain-aligns the
//! factors across modes, and solves a least-squares system for the scale
//! weights. Both random-projection measurements and slice-restricted
//! completion are supported end to end.

pub mod decompose;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod pipeline;
pub mod recovery;
pub mod tensor;

pub use decompose::{
    align_factors, factors_from_pair, leurgans_decompose, ContractionPair, DecomposeConfig,
    FactorTolerances, ModeFactors,
};
pub use error::{Error, Result};
pub use measurement::{
    ContractionWeight, InnerOperator, MeasurementDesign, MeasurementGroup, MeasurementSet,
    ModeGroups, SeparableOperator,
};
pub use pipeline::{trecs_complete, trecs_recover, RecoveryReport, StageTimings};
pub use recovery::{nuclear_norm, recover_affine, recover_completion, RecoveredMatrix, SolverConfig};
pub use tensor::{
    contract, inner_product, outer_tensor, outer_vectors, slice, CpModel, DenseTensor, SliceIndex,
};
