/// Central tolerance record. Every validating operation takes one of
/// these; the defaults are the contract used throughout the test suite.
///
/// All comparisons are absolute unless noted. The causal band is the
/// single relative tolerance: a discriminant counts as zero when it is
/// within `causal_band * (tr^2 + |4 det| + 1)` of zero.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Pseudo-orthonormality of fermion-matrix columns.
    pub gram: f64,
    /// Idempotency `P^2 = P`, elementwise.
    pub idempotent: f64,
    /// Self-adjointness `(PS)^dag = PS`, elementwise.
    pub self_adjoint: f64,
    /// Pseudo-unitarity `U^dag S U = S`, elementwise.
    pub pseudo_unitary: f64,
    /// Outer symmetry checks `U P U^-1 = P` and `U E_x U^-1 = E_sigma(x)`.
    pub outer_symmetry: f64,
    /// Relative width of the causal boundary band.
    pub causal_band: f64,
    /// Bloch configuration sum rules (trace and vector sums).
    pub bloch_sums: f64,
    /// Reconstruction round trips (Bloch data -> matrix -> Bloch data).
    pub reconstruction: f64,
    /// Algebraic identities, e.g. target = critical action + constraint/2.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gram: 1e-10,
            idempotent: 1e-9,
            self_adjoint: 1e-10,
            pseudo_unitary: 1e-10,
            outer_symmetry: 1e-9,
            causal_band: 1e-9,
            bloch_sums: 1e-9,
            reconstruction: 1e-8,
            identity: 1e-10,
        }
    }
}
