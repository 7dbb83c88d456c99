//! Parallel-in-time integration for a 2D magnetoquasistatic (eddy-current) model.
//!
//! * [`time_grid`]: nested uniform time grids and C/F splittings.
//! * [`propagator`]: the one-step map abstraction and sequential time stepping.
//! * [`mgrit`]: FAS multigrid reduction in time and Parareal.
//! * [`parallel`]: worker partitioning, ghost exchange, and the counted-work speedup model.
//! * [`sparse`]: compressed-row matrices and a direct solver for the spatial systems.
//! * [`eddy`]: coaxial-cable mesh, P1 assembly, PWM source, nonlinear reluctivity and
//!   the backward-Euler/Newton propagator.

pub mod eddy;
pub mod mgrit;
pub mod parallel;
pub mod propagator;
pub mod space_time;
pub mod sparse;
pub mod time_grid;

pub use mgrit::{ConvergenceRecord, Mgrit, MgritError, MgritOptions, Relaxation};
pub use propagator::{sequential_solve, Dahlquist, Propagator};
pub use space_time::{Forcing, SpaceTimeVector};
pub use time_grid::{build_hierarchy, TemporalGrid, TemporalHierarchy};
