//! Estimation of two-agent interaction matrices from observed streams.

pub mod family;
pub mod likelihood;
pub mod mle;
pub mod nelder_mead;
pub mod pipeline;
pub mod study;

pub use family::{gamma_family, w_family, FamilyParams, SymmetricFamily};
pub use likelihood::{log_likelihood, LikelihoodData};
pub use mle::{fit_mle, MatrixEntries, MleOptions, MleResult};
pub use nelder_mead::{Minimum, NelderMead};
pub use pipeline::{heaps_step, pipeline, PipelineResult};
pub use study::{run_study, write_study_csv, StudyMode, StudyOptions, StudyRow, StudyRowResult, Summary, REFERENCE_SCENARIOS};
