//! Desk-scale numerical laboratory for random-hopping operators on the line.
//!
//! The crate builds finite zero-diagonal tridiagonal operators from sampled
//! edge-weight processes and counts their eigenvalues at spectral scales as
//! small as `exp(-sqrt(n))`, exactly, through two independent routes: Sturm
//! inertia in signed-log arithmetic ([`operator`]) and a shear-product
//! dynamical system on the boundary circle ([`transfer`]). On top of the
//! counters sit the crossing/well calculus ([`crossings`]), Brownian-motion
//! limit oracles ([`brownian`]), the group-ring weight constructions
//! ([`groups`]), and the Monte Carlo estimators ([`estimators`]) that
//! reproduce the logarithmic spectral spike at zero, the local eigenvalue
//! statistics, and small-scale spectral exponents.

pub mod brownian;
pub mod crossings;
pub mod error;
pub mod estimators;
pub mod groups;
pub mod operator;
pub mod seeding;
pub mod signedlog;
pub mod stats;
pub mod transfer;
pub mod weights;

pub use error::{Error, Result};
pub use signedlog::SignedLog;
