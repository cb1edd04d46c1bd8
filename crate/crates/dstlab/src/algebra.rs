//! Indefinite-inner-product algebra of discrete fermion systems.
//!
//! Conventions fixed here and relied on everywhere else:
//! - coordinates 0..2m, space-time point `x` owns coordinates `2x` and
//!   `2x+1`; the signature is `+1` on even and `-1` on odd coordinates;
//! - `<u|v> = u^dag S v`, antilinear in the first slot;
//! - fermion matrices have pseudo-orthonormal columns `<u_i|u_j> = -delta_ij`;
//! - the fermionic projector is `P = -Psi Psi^dag S`;
//! - the closed chain of a pair is `A_xy = P(x,y) P(y,x)` with
//!   `P(x,y)` the 2x2 block of `E_x P E_y`.
//!
//! Checked invariants (see the test suites): `P^2 = P`, `(PS)^dag = PS`,
//! `tr P = f`, root products of closed chains are non-negative for
//! two-particle systems, actions are gauge invariant, and blockwise
//! chain evaluation agrees with full-matrix products.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{Mat2, ONE_C, ZERO_C};
use crate::tolerances::Tolerances;

/// Signature carried by coordinate `i`: `+1` on even, `-1` on odd.
pub fn coordinate_signature(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Indefinite inner product `<u|v> = u^dag S v`, antilinear in `u`.
pub fn inner_product(u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    if u.len() != v.len() || u.len() % 2 != 0 || u.is_empty() {
        return Err(Error::Dimension(format!(
            "inner product needs two equal even-length vectors, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut acc = ZERO_C;
    for i in 0..u.len() {
        acc += u[i].conj() * v[i] * coordinate_signature(i);
    }
    Ok(acc)
}

/// Finite set of `m` space-time points carried by `C^(2m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSpacetime {
    m: usize,
}

impl DiscreteSpacetime {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Dimension("need at least one space-time point".into()));
        }
        Ok(DiscreteSpacetime { m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    /// The full signature matrix `S = diag(1,-1,...,1,-1)`.
    pub fn signature_matrix(&self) -> Array2<Complex64> {
        let mut s = Array2::zeros((self.dim(), self.dim()));
        for i in 0..self.dim() {
            s[(i, i)] = Complex64::new(coordinate_signature(i), 0.0);
        }
        s
    }

    /// The space-time projector `E_x` as a full matrix.
    pub fn point_projector(&self, x: usize) -> Result<Array2<Complex64>> {
        if x >= self.m {
            return Err(Error::PointOutOfRange { point: x, m: self.m });
        }
        let mut e = Array2::zeros((self.dim(), self.dim()));
        e[(2 * x, 2 * x)] = ONE_C;
        e[(2 * x + 1, 2 * x + 1)] = ONE_C;
        Ok(e)
    }
}

/// `2m x f` matrix whose columns are the occupied fermion states.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionMatrix {
    m: usize,
    f: usize,
    entries: Array2<Complex64>,
}

impl FermionMatrix {
    /// Wraps raw entries; checks dimensions and finiteness, not the
    /// Gram normalization (see [`FermionMatrix::validate`]).
    pub fn new(m: usize, f: usize, entries: Array2<Complex64>) -> Result<Self> {
        if m == 0 || f == 0 || f > m {
            return Err(Error::ParticleCount { f, m });
        }
        if entries.dim() != (2 * m, f) {
            return Err(Error::Dimension(format!(
                "fermion matrix for m={m}, f={f} must be {}x{f}, got {}x{}",
                2 * m,
                entries.dim().0,
                entries.dim().1
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Dimension("fermion matrix entries must be finite".into()));
        }
        Ok(FermionMatrix { m, f, entries })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// Column `i` as a slice-backed vector.
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        self.entries.column(i).to_vec()
    }

    /// The 2x2 block of rows owned by point `x`, columns `(i, j)`.
    /// Meaningful as a matrix block only for `f = 2`.
    pub fn point_block(&self, x: usize, i: usize, j: usize) -> Mat2 {
        Mat2::from_rows(
            [self.entries[(2 * x, i)], self.entries[(2 * x, j)]],
            [self.entries[(2 * x + 1, i)], self.entries[(2 * x + 1, j)]],
        )
    }

    /// Pseudo-Gram matrix `G_ij = <u_i|u_j>`.
    pub fn gram(&self) -> Array2<Complex64> {
        let mut g = Array2::zeros((self.f, self.f));
        for i in 0..self.f {
            for j in 0..self.f {
                let mut acc = ZERO_C;
                for r in 0..2 * self.m {
                    acc += self.entries[(r, i)].conj()
                        * self.entries[(r, j)]
                        * coordinate_signature(r);
                }
                g[(i, j)] = acc;
            }
        }
        g
    }

    /// Checks pseudo-orthonormality `<u_i|u_j> = -delta_ij`; the error
    /// names the worst offending Gram entry.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let g = self.gram();
        let mut worst = (0usize, 0usize, 0.0f64);
        for i in 0..self.f {
            for j in 0..self.f {
                let want = if i == j {
                    Complex64::new(-1.0, 0.0)
                } else {
                    ZERO_C
                };
                let err = (g[(i, j)] - want).norm();
                if err > worst.2 {
                    worst = (i, j, err);
                }
            }
        }
        if worst.2 > tol.gram {
            let (i, j, err) = worst;
            return Err(Error::Gram {
                i,
                j,
                value: format!("{:+.6e}{:+.6e}i", g[(i, j)].re, g[(i, j)].im),
                error: err,
                tol: tol.gram,
            });
        }
        Ok(())
    }
}

/// The fermionic projector `P = -Psi Psi^dag S` stored as a full
/// `2m x 2m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionicProjector {
    m: usize,
    f: usize,
    entries: Array2<Complex64>,
}

impl FermionicProjector {
    /// Builds from a validated fermion matrix and re-checks the
    /// projector invariants (idempotency, signature self-adjointness,
    /// trace).
    pub fn from_matrix(psi: &FermionMatrix, tol: &Tolerances) -> Result<Self> {
        psi.validate(tol)?;
        let p = Self::from_span_unchecked(psi);
        p.validate(tol)?;
        Ok(p)
    }

    /// Builds `-Psi Psi^dag S` without any Gram or projector check.
    /// Useful for diagnostics on infeasible optimizer states; the
    /// result is s-self-adjoint but generally not idempotent.
    pub fn from_span_unchecked(psi: &FermionMatrix) -> Self {
        let dim = 2 * psi.m;
        let mut p = Array2::zeros((dim, dim));
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = ZERO_C;
                for k in 0..psi.f {
                    acc += psi.entries[(r, k)] * psi.entries[(c, k)].conj();
                }
                p[(r, c)] = -acc * coordinate_signature(c);
            }
        }
        FermionicProjector {
            m: psi.m,
            f: psi.f,
            entries: p,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        (0..2 * self.m).map(|i| self.entries[(i, i)]).sum()
    }

    /// The 2x2 block `P(x,y)` of `E_x P E_y`.
    pub fn block(&self, x: usize, y: usize) -> Result<Mat2> {
        if x >= self.m || y >= self.m {
            let point = x.max(y);
            return Err(Error::PointOutOfRange { point, m: self.m });
        }
        Ok(Mat2::from_rows(
            [
                self.entries[(2 * x, 2 * y)],
                self.entries[(2 * x, 2 * y + 1)],
            ],
            [
                self.entries[(2 * x + 1, 2 * y)],
                self.entries[(2 * x + 1, 2 * y + 1)],
            ],
        ))
    }

    /// Projector invariants: `P^2 = P`, `(PS)^dag = PS`, `tr P = f`.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let p2 = self.entries.dot(&self.entries);
        let idem = p2
            .iter()
            .zip(self.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if idem > tol.idempotent {
            return Err(Error::NotIdempotent {
                residual: idem,
                tol: tol.idempotent,
            });
        }
        let dim = 2 * self.m;
        let mut sa = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                // (PS)_{rc} vs conj((PS)_{cr})
                let a = self.entries[(r, c)] * coordinate_signature(c);
                let b = (self.entries[(c, r)] * coordinate_signature(r)).conj();
                sa = sa.max((a - b).norm());
            }
        }
        if sa > tol.self_adjoint {
            return Err(Error::NotSelfAdjoint {
                residual: sa,
                tol: tol.self_adjoint,
            });
        }
        let tr = self.trace();
        if (tr - Complex64::new(self.f as f64, 0.0)).norm() > tol.idempotent {
            return Err(Error::Dimension(format!(
                "trace {:.6e}{:+.6e}i deviates from particle number {}",
                tr.re, tr.im, self.f
            )));
        }
        Ok(())
    }
}

/// Closed chain `A_xy = P(x,y) P(y,x)`.
pub fn closed_chain(p: &FermionicProjector, x: usize, y: usize) -> Result<Mat2> {
    Ok(p.block(x, y)? * p.block(y, x)?)
}

/// Roots of a closed chain's characteristic polynomial, ordered with
/// `lambda_plus` the root of larger real part (ties broken by larger
/// imaginary part).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpectrum {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Real trace of the chain.
    pub trace: f64,
    /// Real determinant of the chain.
    pub det: f64,
    /// Discriminant `trace^2 - 4 det`; its sign is the causal indicator.
    pub disc: f64,
}

impl ChainSpectrum {
    /// Spectral weight `|A| = |lambda_plus| + |lambda_minus|`.
    pub fn weight_one(&self) -> f64 {
        self.lambda_plus.norm() + self.lambda_minus.norm()
    }

    /// Spectral weight `|A^2| = |lambda_plus|^2 + |lambda_minus|^2`.
    pub fn weight_two(&self) -> f64 {
        self.lambda_plus.norm_sqr() + self.lambda_minus.norm_sqr()
    }
}

/// Computes the chain spectrum of a 2x2 closed chain.
///
/// The chain of an s-self-adjoint operator has a real characteristic
/// polynomial, which the routine verifies via `(A s)^dag = A s` with a
/// scale-relative tolerance before discarding imaginary round-off.
pub fn chain_roots(a: &Mat2, tol: &Tolerances) -> Result<ChainSpectrum> {
    let als = a.mul_signature();
    let residual = (als - als.adjoint()).max_abs();
    let scale = 1.0 + a.max_abs();
    if residual > tol.self_adjoint * scale {
        return Err(Error::NotSelfAdjoint {
            residual,
            tol: tol.self_adjoint * scale,
        });
    }
    let t = a.trace().re;
    let d = a.det().re;
    let disc = t * t - 4.0 * d;
    let (lp, lm) = if disc >= 0.0 {
        let r = disc.sqrt();
        (
            Complex64::new((t + r) / 2.0, 0.0),
            Complex64::new((t - r) / 2.0, 0.0),
        )
    } else {
        let r = (-disc).sqrt();
        (
            Complex64::new(t / 2.0, r / 2.0),
            Complex64::new(t / 2.0, -r / 2.0),
        )
    };
    Ok(ChainSpectrum {
        lambda_plus: lp,
        lambda_minus: lm,
        trace: t,
        det: d,
        disc,
    })
}

/// Two-parameter Lagrangian `|A^2| - mu |A|^2`.
pub fn lagrangian(spec: &ChainSpectrum, mu: f64) -> f64 {
    spec.weight_two() - mu * spec.weight_one() * spec.weight_one()
}

/// Critical Lagrangian `(|lambda_plus| - |lambda_minus|)^2 / 2`,
/// algebraically the `mu = 1/2` case.
pub fn critical_lagrangian(spec: &ChainSpectrum) -> f64 {
    let gap = spec.lambda_plus.norm() - spec.lambda_minus.norm();
    0.5 * gap * gap
}

fn sum_over_pairs<F: FnMut(&ChainSpectrum) -> f64>(
    p: &FermionicProjector,
    tol: &Tolerances,
    mut term: F,
) -> Result<f64> {
    let mut acc = 0.0;
    for x in 0..p.m() {
        for y in 0..p.m() {
            let spec = chain_roots(&closed_chain(p, x, y)?, tol)?;
            acc += term(&spec);
        }
    }
    Ok(acc)
}

/// Action `S_mu = sum_{x,y} (|A_xy^2| - mu |A_xy|^2)`.
pub fn action(p: &FermionicProjector, mu: f64, tol: &Tolerances) -> Result<f64> {
    sum_over_pairs(p, tol, |s| lagrangian(s, mu))
}

/// Critical action, the `mu = 1/2` case in gap form.
pub fn critical_action(p: &FermionicProjector, tol: &Tolerances) -> Result<f64> {
    sum_over_pairs(p, tol, critical_lagrangian)
}

/// Constraint functional `sum_{x,y} |A_xy|^2`.
pub fn constraint_value(p: &FermionicProjector, tol: &Tolerances) -> Result<f64> {
    sum_over_pairs(p, tol, |s| {
        let w = s.weight_one();
        w * w
    })
}

/// Target functional `sum_{x,y} |A_xy^2|`; identically equal to
/// `critical_action + constraint_value / 2`.
pub fn target_value(p: &FermionicProjector, tol: &Tolerances) -> Result<f64> {
    sum_over_pairs(p, tol, |s| s.weight_two())
}

/// Blockwise gauge transformation: one pseudo-unitary 2x2 block per
/// space-time point.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform {
    blocks: Vec<Mat2>,
}

impl GaugeTransform {
    /// Validates every block against `U^dag s U = s`.
    pub fn new(blocks: Vec<Mat2>, tol: &Tolerances) -> Result<Self> {
        for (x, u) in blocks.iter().enumerate() {
            let residual = (u.adjoint() * Mat2::signature() * *u - Mat2::signature()).max_abs();
            if residual > tol.pseudo_unitary {
                return Err(Error::NotPseudoUnitary {
                    block: x,
                    residual,
                    tol: tol.pseudo_unitary,
                });
            }
        }
        Ok(GaugeTransform { blocks })
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, x: usize) -> &Mat2 {
        &self.blocks[x]
    }

    /// `U^-1 = s U^dag s`, exact for pseudo-unitary blocks.
    pub fn inverse_block(&self, x: usize) -> Mat2 {
        Mat2::signature() * self.blocks[x].adjoint() * Mat2::signature()
    }

    /// `Psi -> U Psi`, acting blockwise on the rows of each point.
    pub fn apply_to_matrix(&self, psi: &FermionMatrix) -> Result<FermionMatrix> {
        if psi.m() != self.m() {
            return Err(Error::Dimension(format!(
                "gauge transform has {} blocks, matrix has m = {}",
                self.m(),
                psi.m()
            )));
        }
        let mut out = psi.entries().clone();
        for x in 0..psi.m() {
            let u = &self.blocks[x];
            for k in 0..psi.f() {
                let a = psi.entries()[(2 * x, k)];
                let b = psi.entries()[(2 * x + 1, k)];
                out[(2 * x, k)] = u.at(0, 0) * a + u.at(0, 1) * b;
                out[(2 * x + 1, k)] = u.at(1, 0) * a + u.at(1, 1) * b;
            }
        }
        FermionMatrix::new(psi.m(), psi.f(), out)
    }

    /// `P -> U P U^-1`, blockwise.
    pub fn apply_to_projector(&self, p: &FermionicProjector) -> Result<FermionicProjector> {
        if p.m() != self.m() {
            return Err(Error::Dimension(format!(
                "gauge transform has {} blocks, projector has m = {}",
                self.m(),
                p.m()
            )));
        }
        let dim = 2 * p.m();
        let mut out = Array2::zeros((dim, dim));
        for x in 0..p.m() {
            for y in 0..p.m() {
                let b = *self.block(x) * p.block(x, y)? * self.inverse_block(y);
                out[(2 * x, 2 * y)] = b.at(0, 0);
                out[(2 * x, 2 * y + 1)] = b.at(0, 1);
                out[(2 * x + 1, 2 * y)] = b.at(1, 0);
                out[(2 * x + 1, 2 * y + 1)] = b.at(1, 1);
            }
        }
        Ok(FermionicProjector {
            m: p.m(),
            f: p.f(),
            entries: out,
        })
    }

    /// Random gauge transform: per block a global phase, a relative
    /// phase pair and a boost of bounded rapidity.
    pub fn random<R: rand::Rng>(m: usize, rng: &mut R) -> Self {
        use std::f64::consts::TAU;
        let mut blocks = Vec::with_capacity(m);
        for _ in 0..m {
            let phi = rng.gen_range(0.0..TAU);
            let alpha = rng.gen_range(0.0..TAU);
            let beta = rng.gen_range(0.0..TAU);
            let t: f64 = rng.gen_range(-1.2..1.2);
            let (ch, sh) = (t.cosh(), t.sinh());
            let e = |a: f64| Complex64::from_polar(1.0, a);
            let u = Mat2::from_rows(
                [e(alpha) * ch, e(beta) * sh],
                [e(-beta) * sh, e(-alpha) * ch],
            )
            .scale(e(phi));
            blocks.push(u);
        }
        GaugeTransform { blocks }
    }
}

/// Candidate outer symmetry: a permutation of the points together with
/// a (generally non-block-diagonal) pseudo-unitary matrix implementing
/// it on `C^(2m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSymmetry {
    perm: Vec<usize>,
    matrix: Array2<Complex64>,
}

impl OuterSymmetry {
    pub fn new(perm: Vec<usize>, matrix: Array2<Complex64>) -> Result<Self> {
        let m = perm.len();
        let mut seen = vec![false; m];
        for &p in &perm {
            if p >= m || seen[p] {
                return Err(Error::Parameter {
                    name: "perm".into(),
                    detail: format!("{:?} is not a permutation of 0..{}", perm, m),
                });
            }
            seen[p] = true;
        }
        if matrix.dim() != (2 * m, 2 * m) {
            return Err(Error::Dimension(format!(
                "symmetry matrix must be {0}x{0}",
                2 * m
            )));
        }
        Ok(OuterSymmetry { perm, matrix })
    }

    /// Whole-block permutation matrix `e_{2 sigma(x)+r} <- e_{2x+r}`.
    pub fn block_permutation(perm: Vec<usize>) -> Result<Self> {
        let m = perm.len();
        let mut u = Array2::zeros((2 * m, 2 * m));
        for x in 0..m {
            let p = *perm.get(x).ok_or_else(|| Error::Parameter {
                name: "perm".into(),
                detail: "empty permutation".into(),
            })?;
            if p >= m {
                return Err(Error::Parameter {
                    name: "perm".into(),
                    detail: format!("entry {p} out of range for m = {m}"),
                });
            }
            u[(2 * p, 2 * x)] = ONE_C;
            u[(2 * p + 1, 2 * x + 1)] = ONE_C;
        }
        Self::new(perm, u)
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    fn inverse(&self) -> Array2<Complex64> {
        // U^-1 = S U^dag S.
        let dim = self.matrix.dim().0;
        let mut inv = Array2::zeros((dim, dim));
        for r in 0..dim {
            for c in 0..dim {
                inv[(r, c)] = self.matrix[(c, r)].conj()
                    * coordinate_signature(r)
                    * coordinate_signature(c);
            }
        }
        inv
    }

    /// Verifies pseudo-unitarity, `U P U^-1 = P` and the point
    /// permutation law `U E_x U^-1 = E_sigma(x)`.
    pub fn check(&self, p: &FermionicProjector, tol: &Tolerances) -> Result<()> {
        let m = self.perm.len();
        if p.m() != m {
            return Err(Error::Dimension(format!(
                "symmetry on {m} points, projector on {}",
                p.m()
            )));
        }
        let dim = 2 * m;
        let mut pu = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = ZERO_C;
                for k in 0..dim {
                    acc += self.matrix[(k, r)].conj()
                        * coordinate_signature(k)
                        * self.matrix[(k, c)];
                }
                let want = if r == c {
                    Complex64::new(coordinate_signature(r), 0.0)
                } else {
                    ZERO_C
                };
                pu = pu.max((acc - want).norm());
            }
        }
        if pu > tol.pseudo_unitary {
            return Err(Error::NotPseudoUnitary {
                block: 0,
                residual: pu,
                tol: tol.pseudo_unitary,
            });
        }
        let inv = self.inverse();
        let conj = self.matrix.dot(p.entries()).dot(&inv);
        let drift = conj
            .iter()
            .zip(p.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if drift > tol.outer_symmetry {
            return Err(Error::Infeasible {
                context: "outer symmetry".into(),
                detail: format!(
                    "U P U^-1 deviates from P by {drift:.3e} > {:.3e}",
                    tol.outer_symmetry
                ),
            });
        }
        // U E_x U^-1 = E_sigma(x) is equivalent to: the columns of point x
        // map into the coordinate pair of point sigma(x).
        for x in 0..m {
            let sx = self.perm[x];
            let mut err = 0.0f64;
            for r in 0..dim {
                let outside = r < 2 * sx || r > 2 * sx + 1;
                if outside {
                    err = err.max(self.matrix[(r, 2 * x)].norm());
                    err = err.max(self.matrix[(r, 2 * x + 1)].norm());
                }
            }
            if err > tol.outer_symmetry {
                return Err(Error::Infeasible {
                    context: "outer symmetry".into(),
                    detail: format!(
                        "U maps point {x} outside point {sx} by {err:.3e} > {:.3e}",
                        tol.outer_symmetry
                    ),
                });
            }
        }
        Ok(())
    }
}
