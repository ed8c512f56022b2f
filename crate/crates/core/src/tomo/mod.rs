//! State and process tomography: linear inversion, maximum likelihood,
//! χ-matrix algebra and input-imperfection deconvolution.

pub mod mle;
pub mod process;
pub mod projectors;
pub mod qpt;
pub mod qst;
pub mod records;

pub use mle::{MleFit, MleOptions};
pub use process::{
    chi_to_superoperator, compose_processes, deconvolve_input_imperfection, superoperator_to_chi,
    ProcessMatrix,
};
pub use projectors::{measurement_probabilities, ProjectorSet, Setting};
pub use qpt::{
    build_chi_input, qpt_linear_inversion, qpt_mle, qpt_mle_from_counts, qpt_mle_from_states,
    LinearProcessFit, ProcessFit, TomographyInputSet,
};
pub use qst::{mle_state, qst_linear_inversion, qst_mle, StateFit};
pub use records::{read_counts, write_counts, CountRecord, LabeledCount, Observations};
