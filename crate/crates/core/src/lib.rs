//! Tau-coherence of Gaussian observation matrices with banded covariance.
//!
//! The tau-coherence `L_{n,tau}` of an `n x p` matrix is the largest absolute
//! Pearson correlation between two columns at index distance at least `tau`.
//! Under a banded covariance whose band grows slowly with `n`, the normalized
//! statistic `n L^2 - 4 ln p + ln ln p` converges to a Gumbel law with location
//! `-ln(8 pi)` and scale 2.
//!
//! - [`model`]: parameters, the default schedule and hypothesis checks.
//! - [`indexsets`]: the pair sets behind the band structure.
//! - [`sampler`]: moving-average and Cholesky generators.
//! - [`coherence`]: blockwise and naive `L_{n,tau}`, `V_{n,tau}`.
//! - [`limitlaw`]: the limit law and normalization.
//! - [`study`]: Monte-Carlo studies and tail probabilities.
//! - [`gof`]: goodness of fit against the limit law.
//! - [`format`]: the `TCOH` matrix file format.
//!
//! ```
//! use tau_coherence::coherence::{tau_coherence_blockwise, Mode};
//! use tau_coherence::model::ModelParams;
//! use tau_coherence::sampler::{build_window, sample_ma, CoefficientSource};
//!
//! let params = ModelParams::new(200, 60, 2, 1, 0.1)?;
//! let window = build_window(2, 1, 0.1, CoefficientSource::Seed(1))?;
//! let x = sample_ma(&params, &window, 7, 0..200, 0..60)?;
//! let res = tau_coherence_blockwise(&x, 2, 16, &Mode::Centered)?;
//! assert!(res.l_n_tau > 0.0 && res.l_n_tau <= 1.0);
//! # Ok::<(), tau_coherence::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod error;
pub mod format;
pub mod gof;
pub mod indexsets;
pub mod limitlaw;
pub mod model;
pub mod sampler;
pub mod study;

pub use error::{Error, Result};

// The book's snippets run as doctests: each chapter becomes a module here.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/sampler.md")]
    mod sampler {}
    #[doc = include_str!("../../../book/src/coherence.md")]
    mod coherence {}
    #[doc = include_str!("../../../book/src/limit-law.md")]
    mod limit_law {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
    #[doc = include_str!("../../../book/src/gof.md")]
    mod gof {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
