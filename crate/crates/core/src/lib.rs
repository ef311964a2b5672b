//! Nonlinear conjugate gradient methods for multiobjective optimization
//! with interval-valued objectives.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod bench;
pub mod cg;
pub mod cli;
pub mod error;
pub mod interval;
pub mod ivm;
pub mod linesearch;
pub mod problems;
pub mod qp;
pub mod subproblem;

pub use cg::{run, BetaKind, BetaVariant, RunRecord, RunStatus, SolverConfig};
pub use error::{Error, Result};
pub use interval::Interval;
pub use ivm::{GHGradient, IntervalFunction, MultiObjective};
pub use linesearch::{WolfeMode, WolfeParams};
pub use problems::{lookup, registry, sample_start, ProblemSpec};
pub use qp::{QpInstance, QpSettings, QpSolution, QpSolver, QpStatus};
pub use subproblem::{solve_direction, DirectionResult, LinearizationData};
