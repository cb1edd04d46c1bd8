//! Closed-form fermion systems and their exact values.
//!
//! Each constructor returns a validated fermion matrix or Bloch data
//! together with the analytic values that configuration attains. The
//! families serve as oracles for the optimizers and as witnesses for
//! the unbounded-action regimes.

use ndarray::Array2;
use num_complex::Complex64;

use crate::algebra::{FermionMatrix, OuterSymmetry};
use crate::bloch::{BlochConfiguration, LocalCorrelation};
use crate::causal::CausalLabel;
use crate::error::{Error, Result};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Fully delocalized one-particle minimizer: every point carries the
/// spinor (0, 1/sqrt m), so all local traces equal 1/m. The action at
/// weight `mu` is (1 - mu)/m^2; a minimum exists only for mu < 1 (at
/// mu = 1 the functional vanishes identically, above it is unbounded
/// below).
pub fn one_particle_minimizer(m: usize, mu: f64) -> Result<(FermionMatrix, f64)> {
    if m == 0 {
        return Err(Error::Dimension("m must be positive".into()));
    }
    if !(mu < 1.0) {
        return Err(Error::Parameter {
            name: "mu".into(),
            detail: format!("the one-particle minimum exists only for mu < 1, got {mu}"),
        });
    }
    let mut entries = Array2::zeros((2 * m, 1));
    let a = 1.0 / (m as f64).sqrt();
    for x in 0..m {
        entries[(2 * x + 1, 0)] = re(a);
    }
    let psi = FermionMatrix::new(m, 1, entries)?;
    let action = (1.0 - mu) / (m as f64 * m as f64);
    Ok((psi, action))
}

/// Two-point minimizer: each particle localized at its own point.
/// Local traces and Bloch lengths are all 1, the critical action is 1.
pub fn two_point_critical() -> FermionMatrix {
    let mut entries = Array2::zeros((4, 2));
    entries[(1, 0)] = re(1.0);
    entries[(3, 1)] = re(1.0);
    FermionMatrix::new(2, 2, entries).expect("static entries")
}

/// Permutation-symmetric three-point family, parametrized by a
/// hyperbolic angle. All local traces are 2/3; the Bloch vectors are
/// coplanar at mutual angles of 120 degrees with common length
/// `three_point_v(theta)`.
pub fn three_point_family(theta: f64) -> Result<FermionMatrix> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Parameter {
            name: "theta".into(),
            detail: format!("hyperbolic parameter must be finite and >= 0, got {theta}"),
        });
    }
    let (sh, ch) = (theta.sinh(), theta.cosh());
    let r3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let rows: [[f64; 2]; 6] = [
        [-2.0 * sh, 0.0],
        [0.0, -2.0 * ch],
        [sh, -r3 * sh],
        [r3 * ch, ch],
        [sh, r3 * sh],
        [-r3 * ch, ch],
    ];
    let mut entries = Array2::zeros((6, 2));
    for (r, row) in rows.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            entries[(r, k)] = re(c / s6);
        }
    }
    FermionMatrix::new(3, 2, entries)
}

/// Bloch length of the three-point family. The hyperbolic angle
/// enters through 2 sinh^2, as direct evaluation of the family's
/// local blocks shows.
pub fn three_point_v(theta: f64) -> f64 {
    (2.0 / 3.0) * (1.0 + 2.0 * theta.sinh().powi(2))
}

/// Hyperbolic parameter realizing a given Bloch length v >= 2/3.
pub fn three_point_theta(v: f64) -> Result<f64> {
    if !v.is_finite() || v < 2.0 / 3.0 {
        return Err(Error::Parameter {
            name: "v".into(),
            detail: format!("the family attains only v >= 2/3, got {v}"),
        });
    }
    Ok(((3.0 * v - 2.0) / 4.0).sqrt().asinh())
}

/// Critical action of the three-point family as a function of the
/// Bloch length. The correction term switches off at v^2 = 16/27,
/// where the off-diagonal chains turn degenerate; both pieces agree
/// there, so the function is continuous.
pub fn three_point_action(v: f64) -> f64 {
    let v2 = v * v;
    let mut s = (2.0 / 3.0) * v2;
    if v2 < 16.0 / 27.0 {
        s += v2 / 3.0 - (9.0 / 16.0) * v2 * v2;
    }
    s
}

/// Four-point system with even-permutation symmetry; the phase must
/// be one of +-2pi/3. The local traces and Bloch lengths are all 1/2
/// and the Bloch vectors form a regular tetrahedron whose labeled
/// orientation follows the sign of the phase.
pub fn four_point_family(phi: f64) -> Result<FermionMatrix> {
    let third = 2.0 * std::f64::consts::PI / 3.0;
    if !((phi - third).abs() < 1e-9 || (phi + third).abs() < 1e-9) {
        return Err(Error::Parameter {
            name: "phi".into(),
            detail: format!("only the phases +-2pi/3 give the symmetric system, got {phi}"),
        });
    }
    let s6 = 6f64.sqrt();
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let e = Complex64::from_polar(1.0, phi);
    let psi: [[Complex64; 2]; 4] = [
        [re(s3), re(0.0)],
        [re(1.0), re(s2)],
        [re(1.0), re(s2) * e],
        [re(1.0), re(s2) * e.conj()],
    ];
    let mut entries = Array2::zeros((8, 2));
    for (x, row) in psi.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            entries[(2 * x + 1, k)] = c / s6;
        }
    }
    FermionMatrix::new(4, 2, entries)
}

/// Generators of the four-point symmetry: a three-cycle on the last
/// three points and a double transposition, lifted to pseudo-unitary
/// block matrices. The cube of their product is +-i times the
/// identity, so the symmetry admits no plain group representation,
/// only a two-element central extension.
pub fn four_point_generators() -> Result<(OuterSymmetry, OuterSymmetry)> {
    let build =
        |perm: Vec<usize>, entries4: &[(usize, usize, Complex64)]| -> Result<OuterSymmetry> {
            let mut u = Array2::zeros((8, 8));
            for &(r, c, z) in entries4 {
                u[(2 * r, 2 * c)] = z;
                u[(2 * r + 1, 2 * c + 1)] = z;
            }
            OuterSymmetry::new(perm, u)
        };
    let i = Complex64::new(0.0, 1.0);
    let one = re(1.0);
    let sigma = build(
        vec![0, 2, 3, 1],
        &[(0, 0, one), (1, 3, one), (2, 1, one), (3, 2, one)],
    )?;
    let tau = build(
        vec![1, 0, 3, 2],
        &[(0, 1, one), (1, 0, one), (2, 3, i), (3, 2, -i)],
    )?;
    Ok((sigma, tau))
}

/// Signed volume spanned by the second, third and fourth Bloch
/// vectors relative to the first. Distinguishes the two labeled
/// tetrahedron orientations, which no rotation can exchange.
pub fn orientation_witness(config: &BlochConfiguration) -> Result<f64> {
    if config.m() < 4 {
        return Err(Error::Dimension(format!(
            "orientation needs at least four points, got {}",
            config.m()
        )));
    }
    let d: Vec<[f64; 3]> = (1..4)
        .map(|x| {
            let a = &config.points[x].v;
            let b = &config.points[0].v;
            [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
        })
        .collect();
    Ok(d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
        - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
        + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]))
}

/// Five-point Bloch data: an equilateral triangle of length `alpha`
/// in a plane and two opposite axis vectors of length
/// `beta = (2 - 3 alpha)/2`, with local traces matching the lengths.
pub fn five_point_bloch(alpha: f64) -> Result<BlochConfiguration> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 2.0 / 3.0) {
        return Err(Error::Parameter {
            name: "alpha".into(),
            detail: format!("triangle length must lie in (0, 2/3), got {alpha}"),
        });
    }
    let beta = (2.0 - 3.0 * alpha) / 2.0;
    let h = 3f64.sqrt() / 2.0;
    let axes: [[f64; 3]; 5] = [
        [1.0, 0.0, 0.0],
        [-0.5, h, 0.0],
        [-0.5, -h, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let points = axes
        .iter()
        .enumerate()
        .map(|(x, e)| {
            let len = if x < 3 { alpha } else { beta };
            LocalCorrelation {
                rho: len,
                v: [len * e[0], len * e[1], len * e[2]],
            }
        })
        .collect();
    BlochConfiguration::new(points)
}

/// Critical action of the five-point ansatz as a polynomial in the
/// triangle length.
pub fn five_point_action(alpha: f64) -> f64 {
    (81.0 / 8.0) * alpha.powi(4) - 18.0 * alpha.powi(3) + 15.0 * alpha * alpha - 6.0 * alpha + 1.0
}

/// Closed-form location of the unique real minimum of
/// `five_point_action`.
pub fn five_point_optimum() -> f64 {
    let c = (2.0 + 2.0 * 17f64.sqrt()).cbrt();
    -c / 9.0 + 4.0 / (9.0 * c) + 4.0 / 9.0
}

/// The same optimum found as the bracketed root of the derivative;
/// agrees with the closed form to well below 1e-10.
pub fn five_point_optimum_root() -> f64 {
    let d = |a: f64| 40.5 * a * a * a - 54.0 * a * a + 30.0 * a - 6.0;
    // d(0) = -6 and d(2/3) = 2, so the root is bracketed.
    let (mut lo, mut hi) = (0.0f64, 2.0 / 3.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if d(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Symmetric two-point family with Bloch length 1 + 2 sinh^2 theta;
/// the localized two-point minimizer is theta = 0.
pub fn two_point_family(theta: f64) -> Result<FermionMatrix> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Parameter {
            name: "theta".into(),
            detail: format!("hyperbolic parameter must be finite and >= 0, got {theta}"),
        });
    }
    let (sh, ch) = (theta.sinh(), theta.cosh());
    let mut entries = Array2::zeros((4, 2));
    entries[(0, 0)] = re(sh);
    entries[(1, 1)] = re(ch);
    entries[(2, 1)] = re(sh);
    entries[(3, 0)] = re(ch);
    FermionMatrix::new(2, 2, entries)
}

/// Constrained two-point action as a function of the Bloch length:
/// v^2 + (1/2 - mu)(1 + v^4). Its stationary point in v reproduces
/// the multiplier of `two_point_constrained`.
pub fn two_point_action_mu(v: f64, mu: f64) -> f64 {
    v * v + (0.5 - mu) * (1.0 + v.powi(4))
}

/// Exact two-point values at constraint level kappa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPointConstrained {
    /// Bloch length (kappa - 1)^(1/4).
    pub v: f64,
    /// Minimal target value sqrt(kappa - 1) + kappa/2.
    pub z: f64,
    /// Multiplier (1 + 1/sqrt(kappa - 1))/2 making v stationary.
    pub mu: f64,
    /// Hyperbolic parameter realizing v in `two_point_family`.
    pub theta: f64,
}

/// Minimal target value over symmetric two-point systems at fixed
/// constraint level; attainable exactly for kappa >= 2.
pub fn two_point_constrained(kappa: f64) -> Result<TwoPointConstrained> {
    if !kappa.is_finite() || kappa < 2.0 {
        return Err(Error::Infeasible {
            context: "two-point constraint".into(),
            detail: format!("attainable only for kappa >= 2, got {kappa}"),
        });
    }
    let v = (kappa - 1.0).powf(0.25);
    Ok(TwoPointConstrained {
        v,
        z: (kappa - 1.0).sqrt() + kappa / 2.0,
        mu: 0.5 * (1.0 + 1.0 / (kappa - 1.0).sqrt()),
        theta: ((v - 1.0) / 2.0).sqrt().asinh(),
    })
}

/// Exact three-point values at constraint level kappa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePointConstrained {
    /// Common Bloch length of the minimizer.
    pub v: f64,
    /// Minimal target value.
    pub z: f64,
    /// Second-branch value with the doubled leading coefficient, kept
    /// for comparison; equals `z` on the first branch.
    pub z_alt: f64,
    /// Hyperbolic parameter realizing v in `three_point_family`.
    pub theta: f64,
    /// Separation of distinct points: timelike on the first branch,
    /// spacelike on the second.
    pub separation: CausalLabel,
}

/// Minimal target value over symmetric three-point systems at fixed
/// constraint level; attainable exactly for kappa >= 2/3. The two
/// branches meet at kappa = 68/81, where the off-diagonal chains
/// degenerate and the separation flips from timelike to spacelike.
pub fn three_point_constrained(kappa: f64) -> Result<ThreePointConstrained> {
    if !kappa.is_finite() || kappa < 2.0 / 3.0 {
        return Err(Error::Infeasible {
            context: "three-point constraint".into(),
            detail: format!("attainable only for kappa >= 2/3, got {kappa}"),
        });
    }
    let boundary = 68.0 / 81.0;
    let (v, z, z_alt, separation) = if kappa <= boundary {
        let v = (72.0 * kappa - 32.0).powf(0.25) / 3.0;
        let z = (2.0 / 9.0) * ((18.0 * kappa - 8.0).sqrt() + 1.0);
        (v, z, z, CausalLabel::Timelike)
    } else {
        let root = (81.0 * kappa - 32.0).sqrt();
        let v = (12.0 + 6.0 * root).sqrt() / 9.0;
        let z = (4.0 / 81.0) * (2.0 + root) + kappa / 2.0;
        let z_alt = (8.0 / 81.0) * (2.0 + root) + kappa / 2.0;
        (v, z, z_alt, CausalLabel::Spacelike)
    };
    Ok(ThreePointConstrained {
        v,
        z,
        z_alt,
        theta: three_point_theta(v)?,
        separation,
    })
}

/// Two-particle witness with a coupling that grows with alpha: two
/// localized pairs joined through off-diagonal weight
/// sqrt(alpha (alpha + 1)). Its mu-action is unbounded below exactly
/// when mu > 1/2.
pub fn divergence_pair(m: usize, alpha: f64) -> Result<FermionMatrix> {
    if m < 2 {
        return Err(Error::ParticleCount { f: 2, m });
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Parameter {
            name: "alpha".into(),
            detail: format!("coupling must be finite and > 0, got {alpha}"),
        });
    }
    let a = alpha.sqrt();
    let b = (alpha + 1.0).sqrt();
    let mut entries = Array2::zeros((2 * m, 2));
    entries[(0, 0)] = re(a);
    entries[(3, 0)] = re(b);
    entries[(1, 1)] = re(b);
    entries[(2, 1)] = re(a);
    FermionMatrix::new(m, 2, entries)
}

/// Exact mu-action of `divergence_pair`; the quartic coefficient is
/// 8 (1 - 2 mu), negative exactly when mu > 1/2.
pub fn divergence_pair_action(alpha: f64, mu: f64) -> f64 {
    let p = alpha * alpha;
    let q = (alpha + 1.0) * (alpha + 1.0);
    2.0 * (p * p + q * q - mu * (p + q) * (p + q)) + 4.0 * p * q * (1.0 - 2.0 * mu)
}

/// One-particle witness concentrating signed weight on two points;
/// its mu-action (1 - mu)(alpha^2 + (alpha + 1)^2)^2 is unbounded
/// below exactly when mu > 1.
pub fn divergence_single(m: usize, alpha: f64) -> Result<FermionMatrix> {
    if m < 2 {
        return Err(Error::Dimension(format!(
            "the witness needs at least two points, got m = {m}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Parameter {
            name: "alpha".into(),
            detail: format!("coupling must be finite and > 0, got {alpha}"),
        });
    }
    let mut entries = Array2::zeros((2 * m, 1));
    entries[(0, 0)] = re(alpha.sqrt());
    entries[(3, 0)] = re((alpha + 1.0).sqrt());
    FermionMatrix::new(m, 1, entries)
}

/// Exact mu-action of `divergence_single`.
pub fn divergence_single_action(alpha: f64, mu: f64) -> f64 {
    let s = alpha * alpha + (alpha + 1.0) * (alpha + 1.0);
    (1.0 - mu) * s * s
}
