//! Boundary curves, the annular domain and tangent machinery.

mod curve;
pub mod diagnostics;
mod domain;
mod point;

pub use curve::{BoundaryCurve, InverseFn, ParamRange, PointFn};
pub use diagnostics::{
    check_divergence_condition, check_ray_condition, check_unbounded, DivergenceReport,
    DivergenceVerdict, RayProbe, RayReport,
};
pub use domain::{
    ConvexRegion, Domain, Exit, ExitKind, LevelFn, RegionTest, Side, Tangent,
    DEFAULT_SEGMENT_SAMPLES, LEVEL_TOL,
};
pub use point::Point;
