use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid Bell-diagonal coefficients ({c1}, {c2}, {c3}): {reason}")]
    InvalidCoefficients {
        c1: f64,
        c2: f64,
        c3: f64,
        reason: String,
    },

    /// Measurement outcome probability below threshold; the conditional
    /// state is undefined and the caller is expected to skip the term.
    #[error("measurement outcome probability below {0:e}; conditional state undefined")]
    ZeroProbability(f64),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Kraus set violates completeness: max |sum(M^dag M) - I| = {deviation:e}")]
    KrausCompleteness { deviation: f64 },

    /// Carries the best estimate reached and the error bound that could
    /// not be brought under tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    QuadratureNonConvergence { estimate: f64, error_bound: f64 },

    /// The decohered-mutual-information shortcut disagreed with the closed
    /// form, signalling that classical correlations are not constant here.
    #[error("decohered-mutual-information shortcut invalid: got {got}, closed form gives {expected}")]
    ShortcutInvalid { got: f64, expected: f64 },

    #[error("unsupported parameter regime: {0}")]
    UnsupportedParameter(String),

    /// The asymptotic plateau estimate sits inside the tolerance band of
    /// the threshold, so no invariant/transition verdict can be given.
    #[error("plateau {plateau} within tolerance band of threshold {threshold}; verdict undecided")]
    UndecidedPlateau { plateau: f64, threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
