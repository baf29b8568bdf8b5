//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by lattice construction, transforms and window solvers.
#[derive(Debug, Error)]
pub enum GaborError {
    /// The signal length is incompatible with the requested lattice
    /// parameters. Feasible lengths are the multiples of `l_min`.
    #[error("illegal transform length {l}: minimal feasible length for these parameters is {l_min} (use a multiple of it)")]
    IllegalLength { l: usize, l_min: usize },

    /// Parameters that can never describe a lattice (zero shifts, a non
    /// reduced shear fraction, shear out of range, ...).
    #[error("invalid lattice parameters: {0}")]
    InvalidParameters(String),

    /// `gcd(0, 0)` has no positive value.
    #[error("undefined gcd: both inputs are zero")]
    UndefinedGcd,

    /// Enumeration oracles refuse to run above their configured size bound.
    #[error("oracle size limit: L = {l} exceeds bound {bound}")]
    OracleSizeLimit { l: usize, bound: usize },

    /// Dilation parameter is not invertible modulo L.
    #[error("non-invertible dilation: gcd({a}, {l}) != 1")]
    NonInvertibleDilation { a: i64, l: i64 },

    /// Weil decomposition requires determinant 1 modulo L.
    #[error("not unimodular: det = {det} (mod {l})")]
    NotUnimodular { det: i64, l: i64 },

    /// The Gabor system does not form a frame, so no dual/tight window exists.
    #[error("not a frame: {0}")]
    NotAFrame(String),

    /// Signal, window or coefficient dimensions do not match the lattice.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Overlap-add block length must exceed the window support.
    #[error("block length must exceed window support: L_b = {l_b}, L_g = {l_g}")]
    BlockTooShort { l_b: usize, l_g: usize },

    /// File I/O and parsing failures for the CLI formats.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed signal/coefficient file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, GaborError>;
