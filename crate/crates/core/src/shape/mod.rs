//! Shape index estimation.
//!
//! Kernel estimators of the reverse-time hazard of event times given the shape
//! index, the pseudolikelihood objectives built on them (full and simplified),
//! and the search over unit directions in polyspherical coordinates.

mod estimators;
mod fit;
mod objective;
mod sphere;

pub use estimators::{estimate_cumulative_reverse_hazard, estimate_reverse_hazard, PointEstimate, DEN_FLOOR};
pub use fit::{fit_shape, OptimizerOptions, OptimizerTrace, Restart, ShapeDiagnostics, ShapeFit};
pub use objective::{
    mean_trimmed_count, objective_full, objective_simplified, tail_count_statistic, ObjectiveKind, ObjectiveValue,
    ShapeObjective,
};
pub use sphere::{polyspherical_angles, polyspherical_map, sign_normalize, AngleVector};
