//! Numerical laboratory for fermion systems in discrete space-time.
//!
//! The state space is C^(2m) carrying the indefinite inner product
//! `<u|v> = u^dag S v` with block signature `diag(1,-1)` per space-time
//! point. A system of `f` fermions is a matrix of pseudo-orthonormal
//! columns; its fermionic projector gives rise to closed chains whose
//! 2x2 spectra drive everything else: critical and constrained actions,
//! a discrete notion of causality, and Bloch-vector geometry.
//!
//! Modules:
//! - [`algebra`]: projectors, closed chains, spectral weights, actions,
//!   gauge and outer symmetries.
//! - [`bloch`]: local correlation matrices, chain spectra from Bloch
//!   data, reconstruction of a system from its Bloch configuration.
//! - [`causal`]: timelike/spacelike/boundary classification of pairs.
//! - [`families`]: closed-form minimizer families behind a by-name
//!   registry (the `oracle` CLI subcommand fronts it).
//! - [`opt`]: a penalty + nonlinear-CG minimizer for the critical
//!   two-particle action and a derivative-free random-neighbor
//!   minimizer for constrained problems.
//! - [`io`]: the on-disk JSON/CSV/JSONL formats.

pub mod algebra;
pub mod bloch;
pub mod causal;
pub mod error;
pub mod families;
pub mod io;
pub mod mat2;
pub mod opt;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
