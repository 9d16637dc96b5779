//! Crate-wide error type. Variants carry enough position information to
//! name the offending field, index or invariant.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("enumeration cap exceeded: {needed:.3e} deterministic assignments > cap {cap:.3e}")]
    EnumerationCap { needed: f64, cap: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid projection valued measure: {0}")]
    InvalidPvm(String),

    #[error("wavefunction not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error(
        "non-commuting projections at (x={x}, y={y}, a={a}, b={b}): commutator norm {norm:.3e}"
    )]
    NonCommuting { x: usize, y: usize, a: usize, b: usize, norm: f64 },

    #[error("invalid sample space: {0}")]
    InvalidSpace(String),

    #[error("invalid observable: violated invariant `{invariant}`: {detail}")]
    InvalidObservable { invariant: String, detail: String },

    #[error("observation order {k} out of range for resolution {n}")]
    OrderOutOfRange { k: i64, n: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("observables are not consistent: {0}")]
    Inconsistent(String),

    #[error("invalid threshold ladder: {0}")]
    InvalidLadder(String),

    #[error("ladder annihilation violated: ||O_{{alpha,{threshold}}} f|| = {norm:.3e} > 1e-10")]
    LadderAnnihilation { threshold: i64, norm: f64 },

    #[error("rank-one extraction failed: residual {residual:.3e}")]
    NotRankOne { residual: f64 },

    #[error("Gram condition violated: <v,w> = {got}, expected cos(kappa-lambda) = {expected}")]
    GramCondition { got: f64, expected: f64 },

    #[error("degenerate angles: kappa and lambda coincide modulo pi")]
    DegenerateAngles,

    #[error("transformation orbits are not uniform: {0}")]
    NonUniformOrbits(String),

    #[error("transformations do not commute: {0}")]
    NonCommutingTransformations(String),

    #[error("representation is not multiplicative: {0}")]
    NonMultiplicativeRep(String),

    #[error("representation has complex residue {residue:.3e} above 1e-9")]
    ComplexResidue { residue: f64 },

    #[error("word enumeration guard: {0}")]
    WordExplosion(String),

    #[error("invalid JSON input: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
