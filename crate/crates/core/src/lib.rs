//! Expected separable overapproximation (ESO) for randomized coordinate descent.
//!
//! Given a data matrix `A` describing the curvature of a smooth function and a
//! random coordinate sampling `Ŝ`, this crate computes stepsize parameters `v`
//! such that
//!
//! ```text
//! E[f(x + h_[Ŝ])] <= f(x) + Σ p_i ∇_i f(x) h_i + ½ Σ p_i v_i h_i²
//! ```
//!
//! holds for every `x` and `h`, certifies it through the matrix inequality
//! `P(Ŝ) ∘ AᵀA ⪯ Diag(p ∘ v)`, and runs a parallel coordinate descent solver
//! with the resulting stepsizes.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front-end and threading live in the companion `eso` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod data;
pub mod eigen;
pub mod error;
pub mod eso;
pub mod fixtures;
pub mod matrix;
pub mod prob_matrix;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod spectral;
pub mod verifier;

pub use data::{ComposedFunction, DataMatrix};
pub use error::{EsoError, Result};
pub use eso::{EsoResult, FormulaId};
pub use matrix::Matrix;
pub use prob_matrix::{ProbMatrix, ProbMethod, Provenance};
pub use sampling::{ConflictGraph, Distribution, SamplingKind, SamplingSpec, WeightedSet};
pub use spectral::{EigenEstimate, EigenMethod, RestrictedMethod};

/// Default ceiling on the number of atoms an exact enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 16;

/// Largest dimension for which dense `n×n` eigen-solves are attempted.
pub const DENSE_CAP: usize = 2048;
