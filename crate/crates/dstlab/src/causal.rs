//! Discrete causal structure.
//!
//! A pair of points is timelike separated when the closed-chain roots
//! are real and distinct, spacelike when they form a complex conjugate
//! pair, and boundary in the degenerate case. The decision runs on the
//! discriminant `trace^2 - 4 det` against a scale-relative band, so the
//! labels are stable under round-off of either sign.
//!
//! Diagonal pairs have discriminant `rho^2 |v|^2 >= 0` and therefore
//! never come out spacelike.

use serde::{Deserialize, Serialize};

use crate::algebra::{closed_chain, chain_roots, ChainSpectrum, FermionicProjector};
use crate::bloch::{pair_roots, BlochConfiguration};
use crate::error::Result;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalLabel {
    Timelike,
    Spacelike,
    Boundary,
}

impl CausalLabel {
    /// One-letter code used by the tabular output.
    pub fn code(&self) -> char {
        match self {
            CausalLabel::Timelike => 'T',
            CausalLabel::Spacelike => 'S',
            CausalLabel::Boundary => 'B',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'T' => Some(CausalLabel::Timelike),
            'S' => Some(CausalLabel::Spacelike),
            'B' => Some(CausalLabel::Boundary),
            _ => None,
        }
    }
}

impl std::fmt::Display for CausalLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let word = match self {
            CausalLabel::Timelike => "timelike",
            CausalLabel::Spacelike => "spacelike",
            CausalLabel::Boundary => "boundary",
        };
        f.write_str(word)
    }
}

/// Classifies one chain spectrum. The boundary band is
/// `tol.causal_band * (trace^2 + |4 det| + 1)`.
pub fn classify(spec: &ChainSpectrum, tol: &Tolerances) -> CausalLabel {
    let band = tol.causal_band * (spec.trace * spec.trace + (4.0 * spec.det).abs() + 1.0);
    if spec.disc > band {
        CausalLabel::Timelike
    } else if spec.disc < -band {
        CausalLabel::Spacelike
    } else {
        CausalLabel::Boundary
    }
}

/// Full `m x m` table of pair labels with their discriminants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalMatrix {
    m: usize,
    labels: Vec<CausalLabel>,
    disc: Vec<f64>,
}

impl CausalMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn label(&self, x: usize, y: usize) -> CausalLabel {
        self.labels[x * self.m + y]
    }

    pub fn discriminant(&self, x: usize, y: usize) -> f64 {
        self.disc[x * self.m + y]
    }

    pub fn labels(&self) -> &[CausalLabel] {
        &self.labels
    }

    fn from_spectra<E>(
        m: usize,
        tol: &Tolerances,
        mut spectrum: impl FnMut(usize, usize) -> std::result::Result<ChainSpectrum, E>,
    ) -> std::result::Result<Self, E> {
        let mut labels = Vec::with_capacity(m * m);
        let mut disc = Vec::with_capacity(m * m);
        for x in 0..m {
            for y in 0..m {
                let spec = spectrum(x, y)?;
                labels.push(classify(&spec, tol));
                disc.push(spec.disc);
            }
        }
        Ok(CausalMatrix { m, labels, disc })
    }
}

/// Causal structure of a fermionic projector.
pub fn causal_matrix(p: &FermionicProjector, tol: &Tolerances) -> Result<CausalMatrix> {
    CausalMatrix::from_spectra(p.m(), tol, |x, y| {
        chain_roots(&closed_chain(p, x, y)?, tol)
    })
}

/// Causal structure straight from two-particle Bloch data.
pub fn causal_matrix_from_bloch(config: &BlochConfiguration, tol: &Tolerances) -> CausalMatrix {
    let out: std::result::Result<_, std::convert::Infallible> =
        CausalMatrix::from_spectra(config.m(), tol, |x, y| {
            Ok(pair_roots(&config.points[x], &config.points[y]))
        });
    out.expect("infallible")
}
