//! Implicit time stepping for the Allen-Cahn equation
//! `phi_t = lap(phi) - (phi^3 - phi) / eps^2` on `[-1, 1]^d` with
//! homogeneous Neumann data, together with step-size stability bounds and
//! the backward (preimage) analysis of spatially constant states.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod robustness;
pub mod schemes;
pub mod solver;
pub mod stability;
pub mod tableau;

pub use error::{Error, Result};
pub use grid::{make_grid, AcParams, GridSpec, ModeIndex, ScalarField};
pub use schemes::{simulate, step, SchemeKind, SimulateConfig, Trajectory};
pub use solver::{HomotopyConfig, NewtonConfig, NewtonReport};
pub use tableau::ButcherTableau;
