//! Error type shared across the crate.

/// Failure modes surfaced by the library.
///
/// Variants are grouped so the CLI can map them onto distinct exit codes:
/// configuration problems, numerical blow-up, and monitor violations are
/// different kinds of bad news and must stay distinguishable.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The analytic weight would overflow `exp`; radius or grid must shrink.
    #[error(
        "weight exponent {exponent:.1} exceeds the overflow guard {limit} \
         (radius {radius}, max |xi| {xi_max})"
    )]
    WeightOverflow {
        radius: f64,
        xi_max: f64,
        exponent: f64,
        limit: f64,
    },

    /// An operation required a vertical-mean-free field and got one that is not.
    #[error("vertical mean not zero (residual {residual:.3e})")]
    NonzeroVerticalMean { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    /// Every validation failure, not just the first one.
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),

    /// NaN/Inf or norm past the configured ceiling during time stepping.
    #[error("numerical blow-up at t = {t:.6}: {what}")]
    Blowup { t: f64, what: String },

    /// The shrinking analyticity radius reached zero; the run cannot continue.
    #[error("analyticity band exhausted at t = {t:.6} (radius {radius:.3e})")]
    BandExhausted { t: f64, radius: f64 },

    /// A run finished but an asserted monitor failed.
    #[error("monitor violation: {0}")]
    MonitorViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
