//! Conditional density estimation by marginal contrastive discrimination.
//!
//! The conditional density `p(y | x)` is factored into the target marginal
//! `p(y)`, estimated with a kernel density estimator, and a contrast learned
//! by a binary classifier that separates joint pairs `(x, y)` from pairs drawn
//! from the product of marginals.

pub mod constructions;
pub mod contrast;
pub mod data;
pub mod density_models;
pub mod discriminators;
pub mod error;
pub mod estimator;
pub mod kde;
pub mod metrics;

pub use constructions::ContrastDataset;
pub use contrast::{DensityTriple, Ratio};
pub use data::{MarginalDatasets, MultiTargetDataset, SupervisedDataset};
pub use discriminators::{Discriminator, DiscriminatorSpec, FittedDiscriminator};
pub use error::{McdError, Result};
pub use estimator::{Construction, McdConfig, McdEstimator};
pub use kde::MarginalDensityModel;

/// Deterministic RNG used throughout the crate.
pub type McdRng = rand_chacha::ChaCha8Rng;

/// Seeded instance of [`McdRng`].
pub fn seeded_rng(seed: u64) -> McdRng {
    use rand::SeedableRng;
    McdRng::seed_from_u64(seed)
}
