//! Capacity analysis and finite-field simulation of two-user parallel
//! interference channels whose cross links are active in random bursts,
//! with output feedback at both transmitters.
//!
//! The analysis modules ([`capacity`], [`gn`]) are generic over [`Scalar`]
//! and are normally used through the exact [`ExactRegion`] and floating-point
//! [`GnRegion`] instantiations. The [`schemes`] module runs the coding schemes
//! over an actual prime-field channel and the [`harness`] aggregates trials.

pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod field;
pub mod gn;
pub mod harness;
pub mod region;
pub mod report;
pub mod scalar;
pub mod schemes;
pub mod state;

pub use channel::{LevelVector, Regime, SubcarrierConfig};
pub use error::{ChannelError, ConfigError, MdsError, ParseError, SchemeError, StateError};
pub use field::PrimeField;
pub use region::{Corner, Halfplane, Membership, RateRegion};
pub use scalar::{Rational, Scalar};
pub use state::{JointStateDistribution, StateVector};

/// Region with exact rational coefficients.
pub type ExactRegion = RateRegion<Rational>;
/// Region with binary64 coefficients, as produced by the Gaussian bounds.
pub type GnRegion = RateRegion<f64>;
