//! Simulation and analysis toolkit for the collective emission of N
//! two-level emitters coupled to a single lossy cavity mode.
//!
//! Two complementary solvers share one observable contract:
//!
//! * [`lindblad`] — exact density-matrix integration of the driven-dissipative
//!   Tavis–Cummings model, feasible for small N;
//! * [`cluster`] — a doublet-level cluster-expansion rate model that tracks
//!   the mean inversion, photon number, and uniform pair correlations, and
//!   scales to arbitrary N.
//!
//! Supporting modules: [`dicke`] (collective angular-momentum algebra),
//! [`analysis`] (entanglement witness and sector decomposition), [`model`]
//! (parameters, initial conditions, time grids), plus the numeric backends
//! [`linalg`] and [`ode`].

pub mod analysis;
pub mod cluster;
pub mod dicke;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod model;
pub mod ode;

pub use error::{Error, Result};
pub use model::{InitialCondition, SystemParams, TimeGrid};
