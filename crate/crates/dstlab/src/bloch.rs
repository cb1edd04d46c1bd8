//! Bloch-vector analysis of two-particle systems.
//!
//! For `f = 2` the local correlation matrix of point `x` is
//! `F_x = -Psi^dag S E_x Psi = (rho_x 1 + v_x . sigma) / 2` with local
//! trace `rho_x` and Bloch vector `v_x`. Configurations obey
//! `sum rho_x = 2`, `sum v_x = 0` and pointwise `|v_x| >= |rho_x|`.
//!
//! Closed-chain roots of a pair are a function of the Bloch data alone:
//! `lambda_pm = (rho_x rho_y + v_x.v_y +- sqrt(r)) / 4` with
//! `r = |rho_x v_y + rho_y v_x|^2 - |v_x cross v_y|^2`, which the test
//! suite cross-checks against the matrix chain on random systems.
//! Reconstruction inverts the map: each `F_x` is diagonalized with the
//! non-positive eigenvalue first and the point block is
//! `|D|^(1/2) U` with phase-normalized rows of `U`, so the output is
//! deterministic.

use num_complex::Complex64;

use crate::algebra::{ChainSpectrum, FermionMatrix};
use crate::error::{Error, Result};
use crate::mat2::{Mat2, ZERO_C};
use crate::tolerances::Tolerances;

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Local trace and Bloch vector of one space-time point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LocalCorrelation {
    pub rho: f64,
    pub v: [f64; 3],
}

impl LocalCorrelation {
    /// The Hermitian matrix `(rho 1 + v . sigma) / 2`.
    pub fn matrix(&self) -> Mat2 {
        let [v1, v2, v3] = self.v;
        Mat2::from_rows(
            [
                Complex64::new((self.rho + v3) / 2.0, 0.0),
                Complex64::new(v1 / 2.0, -v2 / 2.0),
            ],
            [
                Complex64::new(v1 / 2.0, v2 / 2.0),
                Complex64::new((self.rho - v3) / 2.0, 0.0),
            ],
        )
    }

    pub fn v_norm(&self) -> f64 {
        norm3(&self.v)
    }

    /// Eigenvalue pair `(rho -+ |v|) / 2`, non-positive one first for
    /// admissible points.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let n = self.v_norm();
        ((self.rho - n) / 2.0, (self.rho + n) / 2.0)
    }
}

/// Extracts the local correlation data of point `x`; two-particle only.
pub fn local_correlation(psi: &FermionMatrix, x: usize) -> Result<LocalCorrelation> {
    if psi.f() != 2 {
        return Err(Error::Parameter {
            name: "f".into(),
            detail: format!("Bloch analysis needs exactly 2 particles, got {}", psi.f()),
        });
    }
    if x >= psi.m() {
        return Err(Error::PointOutOfRange { point: x, m: psi.m() });
    }
    let b = psi.point_block(x, 0, 1);
    // F = -B^dag s B, Hermitian by construction.
    let f = -(b.adjoint().mul_signature() * b);
    let rho = f.at(0, 0).re + f.at(1, 1).re;
    let v3 = f.at(0, 0).re - f.at(1, 1).re;
    let v1 = 2.0 * f.at(0, 1).re;
    let v2 = -2.0 * f.at(0, 1).im;
    Ok(LocalCorrelation { rho, v: [v1, v2, v3] })
}

/// Bloch data of a whole two-particle configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochConfiguration {
    pub points: Vec<LocalCorrelation>,
}

impl BlochConfiguration {
    pub fn new(points: Vec<LocalCorrelation>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Dimension("need at least one point".into()));
        }
        if points
            .iter()
            .any(|p| !p.rho.is_finite() || p.v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Dimension("Bloch data must be finite".into()));
        }
        Ok(BlochConfiguration { points })
    }

    pub fn from_matrix(psi: &FermionMatrix) -> Result<Self> {
        let points = (0..psi.m())
            .map(|x| local_correlation(psi, x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    /// Checks the trace sum, the vector sum and the pointwise
    /// eigenvalue-split condition `|v_x| >= |rho_x|`.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let rho_sum: f64 = self.points.iter().map(|p| p.rho).sum();
        if (rho_sum - 2.0).abs() > tol.bloch_sums {
            return Err(Error::BlochConstraint {
                relation: "sum of local traces = 2".into(),
                detail: format!("sum is {rho_sum:.12e}"),
            });
        }
        let mut v_sum = [0.0f64; 3];
        for p in &self.points {
            for c in 0..3 {
                v_sum[c] += p.v[c];
            }
        }
        let v_err = v_sum.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if v_err > tol.bloch_sums {
            return Err(Error::BlochConstraint {
                relation: "sum of Bloch vectors = 0".into(),
                detail: format!("sum is ({:.3e}, {:.3e}, {:.3e})", v_sum[0], v_sum[1], v_sum[2]),
            });
        }
        for (x, p) in self.points.iter().enumerate() {
            if p.v_norm() < p.rho.abs() - tol.reconstruction {
                return Err(Error::BlochConstraint {
                    relation: "|v| >= |rho| at each point".into(),
                    detail: format!(
                        "point {x}: |v| = {:.12e} < |rho| = {:.12e}",
                        p.v_norm(),
                        p.rho.abs()
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Closed-chain roots of the pair `(x, y)` from Bloch data alone.
pub fn pair_roots(a: &LocalCorrelation, b: &LocalCorrelation) -> ChainSpectrum {
    let dot = dot3(&a.v, &b.v);
    let trace = (a.rho * b.rho + dot) / 2.0;
    let mixed = [
        a.rho * b.v[0] + b.rho * a.v[0],
        a.rho * b.v[1] + b.rho * a.v[1],
        a.rho * b.v[2] + b.rho * a.v[2],
    ];
    let cross = cross3(&a.v, &b.v);
    let rad = dot3(&mixed, &mixed) - dot3(&cross, &cross);
    let disc = rad / 4.0;
    let det = trace * trace / 4.0 - rad / 16.0;
    let (lp, lm) = if rad >= 0.0 {
        let r = rad.sqrt() / 4.0;
        (
            Complex64::new(trace / 2.0 + r, 0.0),
            Complex64::new(trace / 2.0 - r, 0.0),
        )
    } else {
        let r = (-rad).sqrt() / 4.0;
        (
            Complex64::new(trace / 2.0, r),
            Complex64::new(trace / 2.0, -r),
        )
    };
    ChainSpectrum {
        lambda_plus: lp,
        lambda_minus: lm,
        trace,
        det,
        disc,
    }
}

/// Rebuilds a fermion matrix realizing the given Bloch data.
///
/// Deterministic: eigenvalues ordered non-positive first, eigenvector
/// rows phase-normalized so their first significant component is real
/// and positive.
pub fn reconstruct(config: &BlochConfiguration, tol: &Tolerances) -> Result<FermionMatrix> {
    config.validate(tol)?;
    let m = config.m();
    let mut entries = ndarray::Array2::zeros((2 * m, 2));
    for (x, p) in config.points.iter().enumerate() {
        let n = p.v_norm();
        let (mut lo, mut hi) = p.eigenvalues();
        // Round-off guard: validate() already bounded the violation.
        lo = lo.min(0.0);
        hi = hi.max(0.0);
        let (row_lo, row_hi) = if n <= 1e-14 * (1.0 + p.rho.abs()) {
            // Zero Bloch vector forces a vanishing point block.
            ([ZERO_C; 2], [ZERO_C; 2])
        } else {
            let dir = [p.v[0] / n, p.v[1] / n, p.v[2] / n];
            // Eigenvector of v.sigma with eigenvalue +|v|; two algebraic
            // forms, pick the better conditioned one.
            let cand_a = [
                Complex64::new(1.0 + dir[2], 0.0),
                Complex64::new(dir[0], dir[1]),
            ];
            let cand_b = [
                Complex64::new(dir[0], -dir[1]),
                Complex64::new(1.0 - dir[2], 0.0),
            ];
            let pick = |c: [Complex64; 2]| {
                let nn = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
                [c[0] / nn, c[1] / nn]
            };
            let chi_hi = if cand_a[0].norm_sqr() + cand_a[1].norm_sqr()
                >= cand_b[0].norm_sqr() + cand_b[1].norm_sqr()
            {
                pick(cand_a)
            } else {
                pick(cand_b)
            };
            // Orthogonal complement spans the -|v| eigenspace.
            let chi_lo = [-chi_hi[1].conj(), chi_hi[0].conj()];
            // Rows of U are the conjugated eigenvectors, low one first.
            let normalize_row = |row: [Complex64; 2]| {
                let lead = if row[0].norm() > 1e-10 { row[0] } else { row[1] };
                let phase = lead.conj() / lead.norm();
                [row[0] * phase, row[1] * phase]
            };
            let u_lo = normalize_row([chi_lo[0].conj(), chi_lo[1].conj()]);
            let u_hi = normalize_row([chi_hi[0].conj(), chi_hi[1].conj()]);
            let s_lo = (-lo).sqrt();
            let s_hi = hi.sqrt();
            (
                [u_lo[0] * s_lo, u_lo[1] * s_lo],
                [u_hi[0] * s_hi, u_hi[1] * s_hi],
            )
        };
        entries[(2 * x, 0)] = row_lo[0];
        entries[(2 * x, 1)] = row_lo[1];
        entries[(2 * x + 1, 0)] = row_hi[0];
        entries[(2 * x + 1, 1)] = row_hi[1];
    }
    FermionMatrix::new(m, 2, entries)
}

/// Permutation- and gauge-invariant fingerprint of a Bloch
/// configuration: sorted local traces, sorted Bloch lengths and the
/// sorted multiset of pairwise scalar products.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GramSignature {
    pub rho: Vec<f64>,
    pub v_norm: Vec<f64>,
    pub dots: Vec<f64>,
}

impl GramSignature {
    pub fn of(config: &BlochConfiguration) -> Self {
        let sortf = |mut v: Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            v
        };
        let rho = sortf(config.points.iter().map(|p| p.rho).collect());
        let v_norm = sortf(config.points.iter().map(|p| p.v_norm()).collect());
        let mut dots = Vec::new();
        for x in 0..config.m() {
            for y in (x + 1)..config.m() {
                dots.push(dot3(&config.points[x].v, &config.points[y].v));
            }
        }
        GramSignature {
            rho,
            v_norm,
            dots: sortf(dots),
        }
    }

    /// Largest entrywise deviation; infinite if the shapes differ.
    pub fn deviation(&self, other: &GramSignature) -> f64 {
        if self.rho.len() != other.rho.len() || self.dots.len() != other.dots.len() {
            return f64::INFINITY;
        }
        let lanes = [
            (&self.rho, &other.rho),
            (&self.v_norm, &other.v_norm),
            (&self.dots, &other.dots),
        ];
        let mut worst = 0.0f64;
        for (a, b) in lanes {
            for (p, q) in a.iter().zip(b.iter()) {
                worst = worst.max((p - q).abs());
            }
        }
        worst
    }
}

/// Three-point family sharing identical Bloch data for every value of
/// the parameter while the systems are pairwise gauge inequivalent:
/// point blocks `[[0,0],[1,0]]`, `[[0,0],[0,1]]`, `[[a,1],[a,1]]`.
pub fn degenerate_example(alpha: f64) -> Result<FermionMatrix> {
    let mut entries = ndarray::Array2::zeros((6, 2));
    let one = Complex64::new(1.0, 0.0);
    let a = Complex64::new(alpha, 0.0);
    entries[(1, 0)] = one;
    entries[(3, 1)] = one;
    entries[(4, 0)] = a;
    entries[(4, 1)] = one;
    entries[(5, 0)] = a;
    entries[(5, 1)] = one;
    FermionMatrix::new(3, 2, entries)
}
