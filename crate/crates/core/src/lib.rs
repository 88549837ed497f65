//! Random word Schrödinger operators on `ℓ²(ℤ)`.
//!
//! The operator is `(Hψ)(n) = ψ(n+1) + ψ(n−1) + V(n)ψ(n)` where the potential
//! `V` is built by concatenating i.i.d. finite words drawn from a finite-support
//! measure. The random dimer model and the Bernoulli–Anderson model are the two
//! standard presets.
//!
//! Modules, bottom-up:
//!
//! - [`word_model`]: word measures, stationary potential sampling, shifts and
//!   word-boundary scales.
//! - [`transfer`]: transfer matrices, overflow-safe cocycle products,
//!   Lyapunov exponents and critical-energy detection.
//! - [`finite_operator`]: Dirichlet restrictions, determinants, Green's
//!   functions, the tridiagonal eigensolver and regularity checks.
//! - [`dynamics`]: spectral-theorem time evolution, projected kernels and
//!   transport moments.
//! - [`experiments`]: disorder-averaged Monte Carlo studies.
//!
//! The crate is `no_std` (it needs `alloc`). Ensemble loops run through the
//! [`Executor`] trait so a std front-end can plug in a thread pool without
//! changing results: every reduction happens in realization-index order.

#![no_std]
// float methods come from `num_traits::Float`; builds that link std (tests,
// dev-dependency feature unification) resolve them inherently instead
#![allow(unused_imports)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod exec;
pub mod stats;

pub mod dynamics;
pub mod experiments;
pub mod finite_operator;
pub mod transfer;
pub mod word_model;

pub use crate::error::{Error, Result};
pub use crate::exec::{realization_seed, Executor, Sequential};

pub use crate::dynamics::{SpectralProjection, TransportSeries};
pub use crate::finite_operator::{EigenSystem, GreenMethod, GreenValue, RegularityVerdict, TridiagonalOperator};
pub use crate::transfer::{LogNormProduct, LyapunovCurve, LyapunovEstimate, TransferMatrix};
pub use crate::word_model::{PotentialRealization, Word, WordDistribution, WordScales};
