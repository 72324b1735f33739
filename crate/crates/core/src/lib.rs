//! Shape–size estimation for recurrent-event rate functions.
//!
//! The rate of a recurrent event process given covariates `Z` is modeled as
//! `mu(t | Z) = f(t, beta'Z) g(gamma'Z)`: a shape `f` (a density in time on
//! `[0, tau]`) driven by the shape index `beta'Z`, times a size `g` (the
//! expected total count) driven by the size index `gamma'Z`.
//!
//! * [`shape`] estimates the unit direction `beta` by maximizing a kernel
//!   pseudolikelihood built from the event times given each subject's count.
//! * [`size`] projects the observed counts onto the full window and estimates
//!   `gamma` with an exponential link or by maximum rank estimation.
//! * [`inference`] provides bootstrap standard errors and Monte Carlo tables.
//! * [`simulate`] generates data from three reference scenarios.
//!
//! ```no_run
//! use shapesize::{fit_shape, simulate_dataset, ObjectiveKind, OptimizerOptions, ScenarioSpec, Scenario, Frailty};
//! use shapesize::{KernelSpec, TrimSpec};
//!
//! let ds = simulate_dataset(&ScenarioSpec::new(Scenario::M1, 200, Frailty::DegenerateOne, 7)).unwrap();
//! let fit = fit_shape(
//!     &ds,
//!     &KernelSpec::shape_default(),
//!     &TrimSpec::untrimmed(ds.tau()),
//!     ObjectiveKind::Simplified,
//!     &OptimizerOptions::default(),
//! )
//! .unwrap();
//! println!("{:?}", fit.beta);
//! ```
//!
//! The estimators are generic over the floating-point type (see [`Real`]);
//! `f64` aliases are provided for the common case.

pub mod data;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod optim;
pub mod scalar;
pub mod shape;
pub mod simulate;
pub mod size;

pub use data::{load_dataset, read_dataset, save_dataset, validate, write_dataset, Dataset, Diagnostic, Subject, TrimSpec, ZRegion};
pub use error::{Error, Result};
pub use inference::{
    bootstrap, bootstrap_many, monte_carlo_study, run_pipeline, BootstrapOptions, BootstrapResult, Estimator,
    MonteCarloOptions, MonteCarloTable, PipelineConfig, PipelineFits, SizeRegion, TableRow,
};
pub use kernels::{kernel_eval, kernel_moments, KernelFamily, KernelRole, KernelSpec};
pub use scalar::Real;
pub use shape::{
    fit_shape, objective_full, objective_simplified, polyspherical_map, tail_count_statistic, AngleVector,
    ObjectiveKind, OptimizerOptions, ShapeFit,
};
pub use simulate::{simulate_dataset, Frailty, Scenario, ScenarioSpec, Truth};
pub use size::{
    estimate_cumulative_shape, fit_size_exp, fit_size_mre, project_counts, in_index_slab, ProjectedCounts, SizeFit,
    SizeFitExp, SizeFitMre,
};

pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type KernelSpecF64 = KernelSpec<f64>;
pub type TrimSpecF64 = TrimSpec<f64>;
pub type ShapeFitF64 = ShapeFit<f64>;
pub type ShapeFitF32 = ShapeFit<f32>;
pub type ProjectedCountsF64 = ProjectedCounts<f64>;
pub type SizeFitExpF64 = SizeFitExp<f64>;
pub type SizeFitMreF64 = SizeFitMre<f64>;
pub type BootstrapResultF64 = BootstrapResult<f64>;
pub type PipelineConfigF64 = PipelineConfig<f64>;
