//! Differentially private denoising of sparse rating matrices.
//!
//! The pipeline privatizes observed ratings and then aggressively denoises
//! the release without touching the privacy budget, since everything after
//! the noise injection is deterministic post-processing:
//!
//! 1. calibrated noise injection -- per-rating Laplace noise whose budget
//!    share grows with the rating's distance from the global mean
//!    ([`mechanisms`]);
//! 2. collaborative denoising -- blending each rating with an item-item
//!    Pearson neighborhood prediction ([`denoise`]);
//! 3. low-rank completion -- truncated-SVD projection with alternating
//!    observed-entry refinement ([`lowrank`]).
//!
//! [`bench`] runs the (method x epsilon x seed) comparison grid against
//! plain Laplace and Gaussian mechanisms and a no-privacy control, with a
//! shared matrix-factorization evaluator ([`eval`]) and CSV reporting.
//! Everything is deterministic given the configured seeds.

pub mod bench;
pub mod denoise;
pub mod error;
pub mod eval;
pub mod lowrank;
pub mod mechanisms;
pub mod ratings;
pub mod sampling;
pub mod selftest;

pub use error::{Error, Result};
pub use ratings::{ObservationMask, RatingMatrix};
