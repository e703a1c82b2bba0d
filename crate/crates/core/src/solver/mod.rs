//! Newton iteration, continuation and closed-form cubic roots.

mod cubic;
mod homotopy;
mod newton;

pub use cubic::{discriminant, real_cubic_roots, CubicRoots, DISCRIMINANT_ZERO_TOL};
pub use homotopy::{continuation, homotopy_path, HomotopyConfig, HomotopyOutcome, MAX_HALVINGS};
pub use newton::{default_fd_step, fd_jacobian, newton_raw, newton_scalar, newton_solve, NewtonConfig, NewtonReport, NonlinearProblem};
