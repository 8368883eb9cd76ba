//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Input matrix is not Hermitian within tolerance.
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    /// Input matrix is not unitary within tolerance.
    #[error("matrix is not unitary: ||U^H U - I||_F = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    /// An observable eigenvalue falls outside [-1, 1].
    #[error("observable spectrum outside [-1, 1]: eigenvalue {value:.12}")]
    SpectrumOutOfRange { value: f64 },

    /// An effect operator has a negative eigenvalue beyond tolerance.
    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// State vector norm or density-matrix trace is off.
    #[error("state is not normalized: norm/trace = {norm:.12}")]
    NotNormalized { norm: f64 },

    /// Requested a normalization that does not exist (zero spectrum).
    #[error("degenerate zero spectrum: normalization undefined")]
    DegenerateSpectrum,

    #[error("coordinate {value} outside [{lo}, {hi})")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Resolution doubling changed the result by more than the quadrature
    /// convergence tolerance.
    #[error(
        "quadrature did not converge: resolution doubling changed the result by {delta:.3e} \
         at resolution {resolution}"
    )]
    QuadratureNotConverged { delta: f64, resolution: usize },

    #[error("resolution {requested} exceeds the node budget {budget}")]
    ResolutionBudget { requested: usize, budget: usize },

    #[error("sweep row {row} failed: {source}")]
    SweepRow {
        row: usize,
        #[source]
        source: Box<CoreError>,
    },

    #[error(
        "no sign change in bracket [{lo}, {hi}]: max<B>-2 = {f_lo:.4} and {f_hi:.4} at the ends"
    )]
    NoBracketCrossing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// Truncated series tail exceeds the requested bound.
    #[error("series tail {tail:.3e} above bound {bound:.1e}; increase m_max")]
    TailBound { tail: f64, bound: f64 },

    /// Density grid fails its normalization or positivity invariant.
    #[error("density is not normalized on its grid: integral = {integral:.12}")]
    DensityNotNormalized { integral: f64 },

    #[error("density has a negative value {value:.3e} at node {index}")]
    DensityNegative { value: f64, index: usize },

    /// Unsupported interferometer setting.
    #[error("unsupported setting: phi must be 0 or pi/2")]
    UnsupportedSetting,
}

pub type Result<T> = std::result::Result<T, CoreError>;
