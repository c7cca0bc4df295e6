//! Bellman functions on annular convex domains.
//!
//! A domain here is `Ω = cl(Ω₀ \ Ω₁)` for two nested, strictly convex open
//! planar sets. The crate provides
//!
//! * [`geometry`]: boundary curves, region tests, tangents from `∂Ω₀` to `Ω₁`
//!   and the admissibility diagnostics built on them;
//! * [`lace`]: the lifted space curve `γ = (g₁, g₂, f̃)`, its torsion sign,
//!   cup equations and chord inequalities;
//! * [`force`]: the force integral coming from `∓∞`;
//! * [`concavify`]: the minimal locally concave majorant on a mesh;
//! * [`simulate`]: admissible step functions and certified lower bounds;
//! * [`presets`]: the BMO, `A_{p₁,p₂}` and reverse Jensen families;
//! * [`cli`]: the command-line front end.

pub mod concavify;
pub mod error;
pub mod force;
pub mod geometry;
pub mod lace;
pub mod presets;
pub mod quad;
pub mod report;
pub mod simulate;

pub mod cli;

pub use error::{Error, Result};
pub use geometry::{BoundaryCurve, ConvexRegion, Domain, Point, Side, Tangent};
pub use lace::{BoundaryData, Chord, LiftedCurve};
