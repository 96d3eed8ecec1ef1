//! Master equations for spin-selective radical-pair recombination and
//! numerical checks of how they relate.
//!
//! * [`spinspace`]: singlet/triplet spaces, density matrices, validation.
//! * [`models`]: Jones-Hore, Haberkorn and the two normalized flows.
//! * [`kinetics`]: the kinetic-mixture decomposition of the surviving state.
//! * [`integrator`]: RK4 / Dormand-Prince evolution and closed-form propagators.
//! * [`verify`]: route-equivalence, mixture-identity and discrepancy checks.
//! * [`cli`]: scenario configs and the `run` / `verify` / `compare` commands.

// NaN must fail range checks, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod integrator;
pub mod kinetics;
pub mod models;
pub mod parallel;
pub mod spinspace;
pub mod verify;

pub use error::{Error, Result};
pub use integrator::{integrate, Method, TimeGrid, Trajectory};
pub use kinetics::{MixtureState, WeightScheme, Weights};
pub use models::{ModelKind, RateParams};
pub use spinspace::{random_density_matrix, CMatrix, DensityMatrix, SpinSpace, Tolerances};
