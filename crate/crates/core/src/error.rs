//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building models or evaluating the
/// physics on them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix or vector does not match the model dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// φ(n) was requested beyond the end of a custom deformation table.
    #[error("phi({n}) requested but the custom table has only {len} entries (indices 0..={})", len - 1)]
    PhiIndexOutOfRange { n: usize, len: usize },

    /// A custom φ table violates φ(0) = 0 or φ(n) > 0 for n ≥ 1.
    #[error("invalid custom phi table: {reason}")]
    InvalidPhiTable { reason: String },

    /// A scalar argument is outside its allowed range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An energy level outside 0..=n_max was requested.
    #[error("level n = {n} out of range (n_max = {n_max})")]
    LevelOutOfRange { n: usize, n_max: usize },

    /// A thermal coefficient was evaluated at x ≤ 0 with T > 0, where
    /// coth(ωx/2T) is undefined or negative.
    #[error("thermal coefficient requested at non-positive argument x = {x}")]
    NonPositiveCothArgument { x: f64 },

    /// An operation that is only defined for thermal baths received
    /// another kind.
    #[error("operation requires a thermal bath, got bath `{label}`")]
    NonThermalBath { label: String },

    /// An operation restricted to T = 0 received a bath at T > 0.
    #[error("operation requires a zero-temperature thermal bath, got T = {temperature}")]
    NonzeroTemperature { temperature: f64 },

    /// A matrix offered as a density matrix is not Hermitian.
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// A matrix offered as a density matrix does not have unit trace.
    #[error("trace is {trace} but must equal 1 within {tol:.1e}")]
    NotUnitTrace { trace: f64, tol: f64 },

    /// A population vector does not sum to one.
    #[error("populations sum to {sum}, expected 1 within {tol:.1e}")]
    NotNormalized { sum: f64, tol: f64 },

    /// A population entry is negative.
    #[error("population p({n}) = {value} is negative")]
    NegativePopulation { n: usize, value: f64 },

    /// The steady-state product hit a negative factor, i.e. the bath
    /// produces negative transition rates.
    #[error("steady-state ratio at n = {n} is {ratio}; the bath violates rate positivity")]
    NegativeSteadyRatio { n: usize, ratio: f64 },

    /// Partition-function terms stopped decaying, so no geometric tail
    /// bound exists.
    #[error("partition terms stopped decaying after {terms} terms (last ratio {ratio})")]
    NonDecayingPartitionTerms { ratio: f64, terms: usize },

    /// The adaptive integrator could not meet the tolerance with any
    /// representable step size.
    #[error("adaptive step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    /// The adaptive integrator exceeded its step budget before reaching
    /// the final time.
    #[error("integration stalled at t = {t} after {max_steps} steps")]
    TooManySteps { t: f64, max_steps: usize },
}
