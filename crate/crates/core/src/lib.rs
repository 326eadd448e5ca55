//! Brownian motion on a star graph: boundary classification, closed-form kernels,
//! scattering matrices, path simulation and a numerical verification suite.

// reference values in tests keep every digit they were frozen with
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod error;
pub mod graph;
pub mod kernels;
pub mod quad;
pub mod scattering;
pub mod simulate;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{classify_boundary, distances, BoundaryCondition, GraphPoint, ProcessParams, Regime, StarGraph};
pub use special::SpecialFnConfig;
pub use kernels::{resolvent, transition, KernelKind, KernelMeasure};
pub use scattering::{boundary_matrices, onshell, process_smatrix, sticky_spectral, BoundaryMatrices, SMatrix};
pub use simulate::{simulate_path, terminal_state, RngConfig, SimConfig, Terminal, Trajectory};
pub use verify::{
    chapman_kolmogorov, generator_domain_check, ks_edge_test, laplace_consistency, mean_checks, run_suite, CriterionReport,
    McConfig, Suite, SuiteConfig, TestFunction, TestReport,
};
