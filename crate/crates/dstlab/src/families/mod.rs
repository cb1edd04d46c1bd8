//! Closed-form minimizer families and witnesses, behind a registry.

pub mod registry;

pub use registry::{family_names, lookup, FamilyReport};
