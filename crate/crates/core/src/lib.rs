//! Steady-state 2D heat conduction with isoparametric quadrilateral finite
//! elements, and a refinement-study harness for the hot-top half-square
//! thermal-bridge benchmark.
//!
//! Pipeline: [`mesh`] → [`fem`] (assemble + solve) → [`flux`] (recovery and
//! boundary heat flow) → [`benchmark`] (study and report). [`analytic`] holds
//! the series solution used as the temperature and heat-flow oracle.

pub mod analytic;
pub mod benchmark;
pub mod cli;
pub mod element;
pub mod export;
pub mod fem;
pub mod flux;
pub mod mesh;
pub mod sparse;

pub use analytic::{AnalyticError, Case1Exact, ReferencePoint};
pub use benchmark::{
    compare_subdivisions, run_case1, serendipity_study, solve_case1, Case1Solution, ConvergenceReport, ReportRow,
    StudyConfig, StudyError, Verdicts,
};
pub use element::ElementOrder;
pub use fem::{assemble, element_stiffness, solve, BoundarySpec, FemError, LinearSystem, Material, TemperatureField};
pub use flux::{average_to_nodes, boundary_heat_flow, recover_gauss_flux, BoundaryHeatFlow, FluxError, FluxField};
pub use mesh::{build_graded_grid, build_uniform_grid, Corner, EdgeTag, Mesh, MeshError};
pub use sparse::SolverKind;

/// Any failure of the solve pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Study(#[from] StudyError),
}

impl Error {
    /// True for solver breakdowns, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Fem(FemError::NumericalFailure { .. }) => true,
            Error::Study(StudyError::LevelFailed { source, .. }) => source.is_numerical(),
            _ => false,
        }
    }
}
