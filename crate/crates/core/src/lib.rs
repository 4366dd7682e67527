//! Spreading processes on graphs as positive linear systems.
//!
//! A burning-state vector `x` evolves as `x' = A x` with a Metzler dynamics
//! matrix `A`. From it the crate computes surveillance priorities (the
//! discounted cost-to-go of an outbreak at each node), budgeted intervention
//! maps via iterated linear programs, validation simulations, and tours over
//! the resulting targets.

pub mod error;
pub mod graph;
pub mod intervention;
pub mod landscape;
pub mod lp;
pub mod mmatrix;
pub mod routing;
pub mod simulate;
pub mod sparse;
pub mod surveillance;

pub use error::{Error, Result};
pub use graph::{build_dynamics, grid16_fixture, DynamicsMatrix, Edge, NodeParams, SpreadGraph};
pub use intervention::{
    solve_intervention, Budget, ControlMatrix, ControlMode, InterventionOptions,
};
pub use lp::{LpBackend, MicroLp};
pub use surveillance::{priority_direct, priority_lp, PriorityMap};
