//! Discretization and optimization of a control-constrained optimal control
//! problem governed by a time-fractional diffusion equation on (0, 1).
//!
//! Time is discretized by piecewise constants on graded grids, space by
//! linear finite elements, and the control by projecting the discrete
//! co-state onto the admissible box.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod fem;
pub mod fracops;
pub mod harness;
pub mod mesh;
pub mod mittag;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod special;

pub use control::{fixed_point_solve, optimality_residual, ControlField, CostReport, DiscreteProblem, FixedPointOptions, OcpSolution};
pub use error::{Error, Result};
pub use fracops::CouplingMatrix;
pub use harness::{
    emit_table, error_l2l2, estimate_order, run_spatial_study, run_temporal_study, ConvergenceTable, ExperimentConfig,
    Grading, StudyKind, TableFormat,
};
pub use mesh::{default_sigmas, SpatialGrid, TemporalGrid};
pub use mittag::{ml, SpectralSolution};
pub use problem::{default_experiment_spec, FunctionDescriptor, ProblemSpec};
pub use solver::{DiscreteSystem, SpaceTimeField};
