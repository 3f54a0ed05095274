//! Numerical laboratory for nonlocal equations (m - L) u = f with rapidly
//! oscillating coefficients and general singular kernels.
//!
//! The crate discretizes the weak forms on a truncated box with a
//! piecewise-constant Galerkin basis, computes explicit homogenized limits,
//! and runs epsilon-sweep experiments that make the qualitative limit
//! theorems measurable: strong L^2 convergence, energy convergence, fixed
//! weak-test gaps, and the nonlinear p-growth extension.
//!
//! Module map:
//! - [`kernel`]: singular kernel zoo and structural-assumption verifiers
//! - [`coeff`]: oscillating coefficient fields and effective coefficients
//! - [`grid`] / [`assembly`]: Galerkin grids, projections and form matrices
//! - [`solver`]: preconditioned CG and convex functional minimization
//! - [`harness`]: sweep experiments, diagnostics and CSV output
//! - [`config`]: the typed experiment configuration shared with the CLI

pub mod assembly;
pub mod coeff;
pub mod config;
pub mod error;
pub mod geom;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod matrix;
pub mod quad;
pub mod rng;
pub mod solver;

pub use assembly::{
    assemble_system, assemble_unit, gagliardo_p_from_unit, gagliardo_seminorm_sq,
    seminorm_sq_from_unit, AssembledSystem, CoeffWeight, EffectiveWeight, PairWeight, TailPolicy,
    UnitWeight,
};
pub use coeff::{
    effective_coefficient, CellFunction, CoefficientField, EffectiveCoefficient, EffectiveKind,
    EffectiveQuad, Structure, SymmetricSpec,
};
pub use config::{ExperimentConfig, Mode};
pub use error::{Error, Result};
pub use geom::{Cell, Point};
pub use grid::{build_grid, project, FunctionSpec, Grid, GridFunction};
pub use harness::{
    csv_string, energy_gap, ensemble_summary, fit_rate, run_sweep, EnsembleStat, RateFit,
    SweepFailure, SweepRecord, CSV_HEADER,
};
pub use kernel::{
    verify_all, verify_assumption, AssumptionKind, AssumptionReport, Kernel, KernelValue,
    ProbeConfig, Thresholds,
};
pub use solver::{
    functional_gradient, functional_value, minimize_functional, solve_linear, LinearSolveReport,
    NonlinearSolveReport, PhiSpec,
};
