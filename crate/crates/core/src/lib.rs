//! Dissipative Fano model: Lindblad steady states, emission spectra,
//! closed-form wideband profiles and profile fitting.

pub mod analytic;
pub mod blocks;
pub mod fitting;
pub mod linalg;
pub mod liouvillian;
pub mod model;
pub mod spectra;
pub mod steadystate;

pub use analytic::{
    excited_population_analytic, extinction_coefficient, extract_parameters, fano_h, prefactor_constants,
    profile_f, table1_row, AnalyticError, ExtractedParams, LineshapeSpec, Prefactors, Process, ProfileSpec,
};
pub use blocks::{BlockSolver, SolveError};
pub use fitting::{fit_profile, model_error_study, synth_profile, FitError, FitInit, FitReport, ModelKind};
pub use liouvillian::{assemble_liouvillian, Superoperator};
pub use model::{discretize, reduced_parameters, validate_spec, DiscretizedModel, ReducedParams, SystemSpec};
pub use spectra::{absorption_scan, component_analysis, emission_spectrum, PeakReport, ScanMethod, SpectrumSeries};
pub use steadystate::{solve_direct, solve_perturbative, DensityMatrix};
