//! Single-shot entropic quantities, decoupling estimates and one-way state
//! merging protocols for small finite-dimensional quantum systems.

pub mod builtin;
pub mod channel;
pub mod decoupling;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod io;
pub mod layout;
pub mod linalg;
pub mod merging;
pub mod metrics;
pub mod random;
pub mod report;
pub mod sdp;
pub mod smoothing;
pub mod state;
pub mod tolerances;

pub use error::{Error, Result};
pub use layout::{Factor, SystemLayout};
pub use state::{max_entangled, DensityOperator, PureState, SchmidtForm};
