//! Numerical minimizers: the penalty-method conjugate-gradient solver
//! for the critical action and the derivative-free random-neighbor
//! solver for constrained target minimization.

pub mod constrained;
pub mod critical;
