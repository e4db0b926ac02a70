//! Joint activity detection and channel estimation for fluid-antenna
//! uplinks.
//!
//! A base station with a long fluid antenna serves a large population of
//! sporadically active users.  Each active user's uplink channel across the
//! activated ports is a short sum of steering vectors scaled by its
//! large-scale fading, and the base station sees the superposition of all
//! active pilots through that channel plus noise.  This crate recovers, from
//! one received block, which users are active, their per-port channels, and
//! their large-scale fading statistics.
//!
//! The solver family is approximate message passing under a
//! Bernoulli-Gaussian prior, with per-iteration expectation-maximization
//! learning of the prior.  Two structured refinements are included: variance
//! learning clipped to the geographic range of path losses, and angular
//! re-projection of likely active rows onto a steering-vector codebook.  A
//! greedy simultaneous matching pursuit with joint least squares serves as
//! the baseline, and closed-form references predict its error floor and the
//! noise advantage of angular estimation.
//!
//! Modules:
//! - [`scene`]: geometry, channels, pilots, and received-block synthesis.
//! - [`bg`]: the Bernoulli-Gaussian prior and its scalar denoiser.
//! - [`amp`]: the message-passing engine and run driver.
//! - [`em`]: hyperparameter learning rules between iterations.
//! - [`angular`]: steering codebook, matching pursuit, and the greedy
//!   baseline.
//! - [`metrics`]: detection and estimation quality measures.
//! - [`oracle`]: slow quadrature cross-checks of the denoiser.
//! - [`linalg`]: dense complex least squares with operation counting.
//! - [`harness`]: Monte-Carlo sweeps, configuration, and reports.

pub mod amp;
pub mod angular;
pub mod bg;
pub mod em;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod scene;

pub use error::{Error, Result};
