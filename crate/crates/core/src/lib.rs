//! Canard cycles near a folded saddle-node of type II.
//!
//! The crate builds the family of periodic orbits that grows out of the
//! singular Hopf bifurcation of the normal form
//!
//! ```text
//! x' = eps (y - (mu + 1) z + F)
//! y' = eps (mu / 2 + G)
//! z' = x + z^2 + z H
//! ```
//!
//! using two blowup charts: a scaling chart for the small cycles (slow
//! manifold series, Melnikov functions) and an entry chart for the large
//! ones (center manifolds, Shilnikov passage, connection problem).

pub mod blowup;
pub mod connection;
pub mod error;
pub mod layer;
pub mod melnikov;
pub mod numerics;
pub mod poly;
pub mod shilnikov;
pub mod slow_manifold;
pub mod system;

pub use error::{CanardError, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use numerics::Tolerances;
pub use system::{AmbientState, Params, SlowFastSystem};
