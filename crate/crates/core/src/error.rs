use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error(
        "quadrature did not reach tolerance {requested:e}: estimate {estimate:e}, \
         achieved error {achieved:e}"
    )]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("arrival probability q(offset={offset}, age={age}): {source}")]
    ArrivalCell {
        age: usize,
        offset: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("slot {slot} outside horizon 1..={horizon}")]
    SlotOutOfRange { slot: usize, horizon: usize },

    #[error("degenerate relay/prior regime: {violated} must be positive (got {value:e})")]
    DegenerateRegime { violated: &'static str, value: f64 },

    #[error("threshold nonnegativity violated: {quantity} = {value:e}")]
    ThresholdNegative { quantity: &'static str, value: f64 },

    #[error("hypothesis variances coincide (sigma1^2 - sigma0^2 = {gap:e}); no signal molecules reach the receiver")]
    EqualVariances { gap: f64 },

    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("every candidate prior fell in a degenerate regime")]
    NoFeasiblePrior,

    #[error("config: {0}")]
    Config(String),

    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_slot(self, slot: usize) -> Self {
        Error::Slot {
            slot,
            source: Box::new(self),
        }
    }

    /// True for errors caused by user input (config contents, paths) rather
    /// than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter { .. } | Error::Io { .. })
    }
}
