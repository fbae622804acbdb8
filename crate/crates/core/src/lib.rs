//! Persistence at zero for almost periodic Nicholson-type delay systems.
//!
//! The pipeline: validate the hypotheses on the coefficients ([`model`]),
//! decompose the migration pattern into irreducible blocks ([`structure`]),
//! estimate the top Lyapunov exponent of each linearized block
//! ([`lyapunov`]), and read off uniform and strict persistence from the
//! exponents on the deciding index sets ([`persistence`]). [`robustness`]
//! shows how persistence of a scalar linear equation can fail along its hull.

pub mod error;
pub mod integrator;
pub mod lyapunov;
pub mod model;
pub mod persistence;
pub mod robustness;
pub mod signals;
pub mod structure;

pub use error::{IntegrationError, LyapunovError, ModelError, PersistenceError, SignalError, StructureError};
pub use integrator::{integrate, HistoryFn, InitialHistory, Trajectory};
pub use model::{DelayRhs, DelaySystem, LinearDelaySystem, Nonlinearity, ValidationReport};
pub use signals::{QuasiPeriodicSignal, Term, Waveform};
pub use structure::{BlockStructure, ZeroPattern};
