//! Simulation and verification of foliated stochastic flows.
//!
//! The crate realizes three concrete foliated dynamics and checks the
//! properties their semigroups are expected to have:
//!
//! * [`geometry`]: the torus winding, rotation+jump cylinder and coalescing
//!   circle models, vertical projections and leaf-membership defects.
//! * [`drivers`]: seeded, splittable Brownian and Poisson noise keyed by
//!   [`drivers::StreamKey`].
//! * [`flows`]: pathwise simulation, n-point motions under common noise and
//!   the coalescing overlay.
//! * [`kernels`]: exact finite transition kernels and the compatibility,
//!   diagonal-preserving, foliated and coalescing constructions.
//! * [`averaging`]: leaf averages, the averaged transversal ODE, the
//!   four-term error decomposition, rate bounds and Monte Carlo errors.
//! * [`harness`]: TOML experiment configs, deterministic execution and
//!   report/plot-data emission, used by the `foliated-flows` binary.

pub mod averaging;
pub mod drivers;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod ode;
pub mod stats;

pub use error::{Error, Result};
