//! Sharp finite-time ruin asymptotics and conditioned first-passage
//! simulation for compound-Poisson risk models whose claim tails carry an
//! exponential tilt on a regularly-varying factor.
//!
//! The probability that the claim surplus exceeds a large reserve `u` before
//! time `T` factorizes as `Π̄⁺(u) · B(T)` to leading order, where `Π̄⁺` is
//! the jump-measure tail and `B(T)` combines the tilted supremum transform
//! with an exponential time weight. This crate computes `B(T)` three
//! independent ways (shared-path quadrature, exponential-time Monte Carlo,
//! numerical Laplace inversion), provides the classical ladder / geometric
//! compound machinery as closed-form oracles, and simulates the limiting
//! conditioned path triple — tilted segment, jump time, conditioned
//! post-jump segment — with cross-validation against direct conditional
//! Monte Carlo.

pub mod asymptotics;
pub mod claims;
pub mod conditioned;
pub mod error;
pub mod estimators;
pub mod fluctuation;
pub mod laplace;
pub mod model;
pub mod path;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod validation;

pub use claims::ClaimDistribution;
pub use error::{Error, Result};
pub use model::{CumulantInfo, Regime, RiskModel};
pub use rng::McEstimate;
