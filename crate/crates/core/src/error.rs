use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("signal coefficients must be finite")]
    NonFinite,
    #[error("truncation level must be at least 1")]
    EmptyTruncation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("system must have at least one patch")]
    Empty,
    #[error("{field} has {got} entries, expected {expected}")]
    Shape { field: &'static str, got: usize, expected: usize },
    #[error("delay of patch {patch} must be positive and finite, got {value}")]
    BadDelay { patch: usize, value: f64 },
    #[error("self-migration a[{0}][{0}] must be identically zero")]
    SelfMigration(usize),
    #[error("Mackey-Glass exponent must be finite and >= 1, got {0}")]
    BadExponent(f64),
    #[error("negative state value {value} in component {component}")]
    NegativeState { component: usize, value: f64 },
    #[error("invalid index set: {0}")]
    BadIndexSet(String),
    #[error("grid step and horizon must be positive and finite")]
    BadGrid,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("block structure is inconsistent with the zero pattern: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step {0} must be positive, finite and at most a quarter of the smallest delay")]
    BadStep(f64),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("no step at or below {requested} makes every delay an integer multiple")]
    IncommensurableDelays { requested: f64 },
    #[error("initial history has {got} components, system has {expected}")]
    HistoryShape { got: usize, expected: usize },
    #[error("initial history of component {component} is invalid: {reason}")]
    BadHistory { component: usize, reason: String },
    #[error("solution overflow at t = {t} (|y| > 1e150); renormalize")]
    Overflow { t: f64 },
    #[error("non-finite solution value at t = {t}")]
    NonFinite { t: f64 },
    #[error("time {t} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("component {0} out of range")]
    BadComponent(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("horizon {horizon} is below the minimum {min} (100 x max delay)")]
    HorizonTooShort { horizon: f64, min: f64 },
    #[error("renormalization period {0} must be a positive multiple of the step")]
    BadRenormPeriod(f64),
    #[error("solution segment vanished at t = {t}; exponent undefined")]
    ZeroNorm { t: f64 },
    #[error("block {block}: {source}")]
    Block { block: usize, source: Box<LyapunovError> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersistenceError {
    #[error("system failed hypothesis validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error("history {history}: {source}")]
    History { history: usize, source: IntegrationError },
    #[error("tail window {window} must lie strictly inside (0, {horizon})")]
    BadWindow { window: f64, horizon: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}
