use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("space-time point {point} out of range for m = {m}")]
    PointOutOfRange { point: usize, m: usize },

    #[error("particle count f = {f} outside 1..=m for m = {m}")]
    ParticleCount { f: usize, m: usize },

    #[error("Gram entry ({i},{j}) = {value} violates pseudo-orthonormality (|error| = {error:.3e} > {tol:.3e})")]
    Gram {
        i: usize,
        j: usize,
        value: String,
        error: f64,
        tol: f64,
    },

    #[error("matrix is not self-adjoint with respect to the signature (residual {residual:.3e} > {tol:.3e})")]
    NotSelfAdjoint { residual: f64, tol: f64 },

    #[error("matrix is not idempotent (residual {residual:.3e} > {tol:.3e})")]
    NotIdempotent { residual: f64, tol: f64 },

    #[error("block {block} is not pseudo-unitary (residual {residual:.3e} > {tol:.3e})")]
    NotPseudoUnitary {
        block: usize,
        residual: f64,
        tol: f64,
    },

    #[error("Bloch configuration violates {relation}: {detail}")]
    BlochConstraint { relation: String, detail: String },

    #[error("invalid parameter {name}: {detail}")]
    Parameter { name: String, detail: String },

    #[error("unknown family '{0}'")]
    UnknownFamily(String),

    #[error("{context}: {detail}")]
    Infeasible { context: String, detail: String },

    #[error("state is not in the gauge-fixed normal form: {0}")]
    NotGaugeFixed(String),

    #[error("objective became non-finite during optimization")]
    NonFiniteObjective,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {format}: {detail}")]
    Format { format: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
