//! Exact lattice-law arithmetic and finite-n checks of the entropic central
//! limit theorem for discretized sums.
//!
//! [`lattice`] holds finitely supported laws on `{a + k l}`, [`gaussian`]
//! their quantized Gaussian references, [`divergence`] the KL and TV
//! comparisons, [`decomposition`] the Bernoulli-part split, [`bounds`] the
//! explicit finite-n inequalities, and [`dynamics`] a noisy action-angle
//! simulator whose discretized frequencies feed the same pipeline.

pub mod bounds;
pub mod corpus;
pub mod decomposition;
pub mod divergence;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod lattice;

pub use bounds::{BoundKind, EntropyGapRecord};
pub use error::{Error, Result};
pub use gaussian::GaussianLaw;
pub use lattice::LatticePmf;

/// Library version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
