//! Sparse identification of dynamical systems and interaction networks
//! from time series.
//!
//! The crate is organised around a single pipeline: simulate or load data
//! ([`timeseries`], [`fields`], [`game`], [`simkit`]), evaluate a basis
//! library on it ([`basis`]), estimate derivatives or increments
//! ([`diffest`]), and solve a sparse regression per output channel
//! ([`solvers`]). The discovery front-ends ([`odedisc`], [`netdisc`],
//! [`gamedisc`], [`weakpde`]) wire those stages together and return a
//! [`model::RecoveredModel`] or a network estimate.

pub mod basis;
pub mod diffest;
pub mod error;
pub mod fields;
pub mod game;
pub mod gamedisc;
pub mod model;
pub mod netdisc;
pub mod odedisc;
pub mod simkit;
pub mod solvers;
pub mod timeseries;
pub mod weakpde;

pub use basis::{
    build_fourier_library, build_polynomial_library, build_time_augmented_library,
    build_total_degree_library,
    evaluate_library, BasisLibrary, FourierConfig, TermDescriptor, TermKind,
};
pub use diffest::{differentiate, map_increments, Derivatives, DiffScheme};
pub use error::{Error, Result};
pub use fields::{FieldData, FieldMeta};
pub use game::{GameKind, GameParams, GameRecord, Strategy};
pub use model::{ModelDiagnostics, ModelKind, RecoveredModel, RowDiagnostics};
pub use odedisc::{
    discover_map, discover_ode, discover_time_varying, scan_bifurcation, BifurcationReport,
    DiscoveryConfig, MapLibrary, ScanConfig, ScanOutcome,
};
pub use solvers::{
    cross_validate_lambda, mutual_coherence, solve, solve_lasso_cd, solve_omp, solve_stls,
    RegressionProblem, SolverTag, SparseSolution,
};
pub use timeseries::TimeSeries;
