//! Small dense complex 2x2 matrices. The closed-chain and local
//! correlation algebra lives entirely in 2x2 blocks, so these avoid
//! general matrix machinery on the hot paths.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major complex 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn zero() -> Self {
        Mat2([[ZERO_C; 2]; 2])
    }

    pub fn identity() -> Self {
        Mat2([[ONE_C, ZERO_C], [ZERO_C, ONE_C]])
    }

    /// The 2x2 signature block `diag(1, -1)`.
    pub fn signature() -> Self {
        Mat2([[ONE_C, ZERO_C], [ZERO_C, -ONE_C]])
    }

    pub fn from_rows(r0: [Complex64; 2], r1: [Complex64; 2]) -> Self {
        Mat2([r0, r1])
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn adjoint(&self) -> Self {
        Mat2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Mat2([
            [self.0[0][0] * c, self.0[0][1] * c],
            [self.0[1][0] * c, self.0[1][1] * c],
        ])
    }

    /// Largest entry modulus; the elementwise norm used by validations.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Right multiplication by the signature block: columns (0,1) keep
    /// and flip sign respectively.
    pub fn mul_signature(&self) -> Self {
        Mat2([
            [self.0[0][0], -self.0[0][1]],
            [self.0[1][0], -self.0[1][1]],
        ])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = out.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = out.0[i][j] - rhs.0[i][j];
            }
        }
        out
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE_C)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_squares_to_identity() {
        let s = Mat2::signature();
        assert_eq!(s * s, Mat2::identity());
    }

    #[test]
    fn det_and_trace() {
        let a = Mat2::from_rows(
            [Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0)],
            [Complex64::new(3.0, 0.0), Complex64::new(-2.0, 1.0)],
        );
        let t = a.trace();
        assert_eq!(t, Complex64::new(-1.0, 3.0));
        let d = a.det();
        // (1+2i)(-2+i) - (-i)(3) = (-4 - 3i) + 3i = -4
        assert!((d - Complex64::new(-4.0, 0.0)).norm() < 1e-15);
    }
}
