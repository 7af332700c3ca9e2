//! Optimal continuous designs for linear regression by multiplicative
//! fixed-point iteration, with equivalence-theorem certificates.
//!
//! The usual flow: build a [`QuadratureGrid`] over the design region, pair
//! it with a [`ModelSpec`] in a [`DesignProblem`], then [`solve`] for a
//! D- or A-optimal density and [`certify`] the result.
//!
//! ```
//! use optdes::{grid_box, solve, Criterion, DesignProblem, ModelSpec, SolveOptions};
//!
//! let model = ModelSpec::from_exponents(1, vec![vec![0], vec![1]]).unwrap();
//! let problem = DesignProblem::new(model, grid_box(&[[-1.0, 1.0]], 20).unwrap()).unwrap();
//! let report = solve(&problem, &SolveOptions::new(Criterion::D)).unwrap();
//! assert!(report.converged);
//! ```

pub mod certify;
pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod report;
pub mod solver;
pub mod space;

pub use certify::{
    attach_support, certify, certify_info, extract_support, radial_band_masses,
    refine_support_weights, ring_uniformity, Certificate, RefinedDesign, Support, SupportPoint,
    DEFAULT_MASS_FLOOR,
};
pub use config::{preset, reference, ModelConfig, Reference, RegionConfig, RunConfig};
pub use design::{info_matrix, uniform_density, Criterion, DesignDensity, DesignProblem, InfoMatrix};
pub use error::{Error, Result};
pub use io::{read_density_csv, write_density_csv, write_grid_csv, write_history_csv, write_support_csv};
pub use model::{ModelSpec, MonomialTerm};
pub use report::{execute, write_outputs, RunOutput};
pub use solver::{
    a_step, d_step, pinsker_check, solve, solve_vdm, vdm_d_step, IterationRecord,
    MonotonicityAction, PinskerCheck, RunDiagnostics, SolveOptions, SolveReport, StepRule,
    TerminationReason,
};
pub use space::{
    grid_box, grid_box_with, grid_disc, grid_disc_with, region_volume, BoxRule, GridId,
    GridLayout, GridLimits, QuadratureGrid, Region,
};
