//! Observation-matrix generators for the banded model.

pub mod cholesky;
pub mod ma;
pub mod rng;
pub mod window;

pub use cholesky::{cholesky, sample_cholesky, sigma_entry, SigmaSpec, MAX_CHOLESKY_DIM};
pub use ma::{sample_ma, MaSource};
pub use rng::{derive_seed, SeededStream};
pub use window::{build_window, CoefficientSource, CoefficientWindow};
