//! Name-keyed registry of closed-form families.

use std::collections::BTreeMap;

use crate::algebra::FermionMatrix;
use crate::bloch::BlochConfiguration;
use crate::error::{Error, Result};

/// Everything a family evaluation reports.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    /// Named scalar results, insertion-ordered keys.
    pub values: BTreeMap<String, f64>,
    /// Realizing fermion matrix, when the family has one.
    pub fermion_matrix: Option<FermionMatrix>,
    /// Bloch data, for two-particle families.
    pub bloch: Option<BlochConfiguration>,
    /// Free-text remarks (branch choices, parameter interpretation).
    pub notes: Vec<String>,
}

impl FamilyReport {
    pub fn new() -> Self {
        FamilyReport {
            values: BTreeMap::new(),
            fermion_matrix: None,
            bloch: None,
            notes: Vec::new(),
        }
    }
}

impl Default for FamilyReport {
    fn default() -> Self {
        Self::new()
    }
}

/// A closed-form family: evaluated at named parameters, produces a
/// report of exact values and (usually) a realizing system.
pub trait ClosedForm: Send + Sync {
    /// Registry key, kebab-case.
    fn name(&self) -> &'static str;
    /// One-line description for listings.
    fn summary(&self) -> &'static str;
    /// Parameter names with their defaults.
    fn params(&self) -> Vec<(&'static str, f64)>;
    /// Evaluates at the given parameters; unknown keys are rejected.
    fn evaluate(&self, params: &BTreeMap<String, f64>) -> Result<FamilyReport>;
}

fn builtin() -> Vec<Box<dyn ClosedForm>> {
    Vec::new()
}

/// Sorted names of all registered families.
pub fn family_names() -> Vec<&'static str> {
    let mut names: Vec<_> = builtin().iter().map(|f| f.name()).collect();
    names.sort_unstable();
    names
}

/// Looks a family up by its registry key.
pub fn lookup(name: &str) -> Result<Box<dyn ClosedForm>> {
    builtin()
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| Error::UnknownFamily(name.to_string()))
}
