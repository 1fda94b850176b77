//! Epidemic dynamics with endogenously mutating virus variants.
//!
//! The crate bundles three layers:
//!
//! - [`ode`]: the deterministic SEPAIRD compartment model with uniform social
//!   distancing and symptomatic isolation, closed-form reproduction numbers
//!   and finite-difference fitness sensitivities.
//! - [`abm`]: an agent-based engine in which every infection may spawn a new
//!   variant, some mutations carry an antigenic drift into a new cluster, and
//!   recovered agents acquire (partial, tree-propagated) cross-immunity.
//! - [`montecarlo`]: seeded replications over parameter grids plus the
//!   per-step quantile bands and notched box statistics used to read them.
//!
//! Every run is a pure function of its [`SimParams`] (which carry the seed).

pub mod abm;
pub mod error;
pub mod montecarlo;
pub mod ode;
pub mod params;
pub mod phylo;
pub mod rng;
pub mod variant;

pub use error::{Error, Result};
pub use params::SimParams;
pub use rng::RngStream;
