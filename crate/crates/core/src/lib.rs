//! Interacting urns with triggering.
//!
//! A network of `N` agents, each an urn whose novelties trigger new
//! possibilities for the whole system. The crate simulates the dynamics,
//! measures novelty growth and table composition, computes the spectral
//! quantities that govern the limits, and estimates two-agent interaction
//! matrices by maximum likelihood.
//!
//! ```
//! use interurn::{run, InteractionSpec};
//!
//! let spec = InteractionSpec::symmetric_pair(0.10, 0.40, 0.10, 0.50, 1.0)?;
//! let log = run(&spec, 1_000, 7)?;
//! assert_eq!(log.events.len(), 2_000);
//! # Ok::<(), interurn::Error>(())
//! ```

pub mod error;
pub mod estimate;
pub mod ingest;
pub mod io;
pub mod matrix;
pub mod model;
pub mod simulator;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use ingest::ObservationLog;
pub use matrix::SquareMatrix;
pub use model::{normalize_raw, validate_spec, ColorId, InteractionSpec, RawSpec, SystemState, Violation};
pub use simulator::{replicate, run, DrawEvent, EventLog};
pub use spectral::{asymptotic_exponent, leading_eigen, ode_trajectory, SpectralSummary};
pub use stats::EventSource;

/// Code in the guide under `book/src` runs as doctests of these modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/growth.md")]
    mod growth {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/ingestion.md")]
    mod ingestion {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
