//! Two-prover commitments over GF(2^n): the CHSH^n scheme and its multi-round
//! relativistic composition, a round-based protocol engine with per-party
//! visibility, explicit classical attacks, exact binding/hiding analysis, and
//! a timed network mode.

pub mod adversary;
pub mod analysis;
pub mod engine;
pub mod field;
pub mod net;
pub mod rng;
pub mod scheme;

pub use field::{FieldElement, FieldError, FieldSpec};
pub use scheme::{Commitment, OpenOutcome, Role, SchemeDescriptor, SchemeError, SchemeParams};
