//! NK and generalized NK fitness landscapes viewed as linear interaction
//! models: construction, rank, coefficient moments, maximal-rank designs,
//! and expected numbers of local optima via multivariate normal orthant
//! probabilities.

pub mod design;
pub mod designs;
pub mod error;
pub mod experiments;
pub mod landscape;
pub mod optima;
pub mod orthant;
pub mod seed;
pub mod verify;
pub mod walsh;

pub use design::{DesignFile, InteractionDesign};
pub use designs::{DesignKind, MaximalRankStatus};
pub use error::{Error, Result, DEFAULT_DENSE_CAP, MAX_DENSE_CAP};
pub use landscape::{Genotype, Landscape, LandscapeFile, WeightDistribution, WeightVector};
pub use orthant::{CovMatrix, OrthantEstimate, OrthantSettings};
