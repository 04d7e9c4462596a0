//! Numerical verification engine for para-Sasakian and para-Hermitian
//! geometry.
//!
//! Scalar fields are written in a small arithmetic language over chart
//! coordinates and evaluated with exact first and second derivatives through
//! truncated jet arithmetic. On top of that sit the metric layer (Levi-Civita
//! connection, covariant derivatives, traces, frames), the structure layer
//! (almost paracontact and almost para-Hermitian axioms, normality, the
//! `(p, q)` classification) and the map layer (second fundamental form,
//! tension field, paraholomorphy and the transfer identities between them).
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the scenario runner
//! and the CLI use.

pub mod chart;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod linalg;
pub mod maps;
pub mod metric;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod scenario;
pub mod structures;

pub use chart::{Chart, Point, TensorField, TensorValue};
pub use error::{Error, Result};
pub use expr::{Expression, Jet2};
pub use maps::{MapKind, SectionAlongMap, SmoothMapSpec};
pub use metric::{ChristoffelValue, FrameValue, MetricField};
pub use report::CheckReport;
pub use scalar::Scalar;
pub use scenario::{Scenario, SuiteOptions};
pub use structures::{ParaHermitianStructure, ParacontactStructure, StructureClass};

/// Second-order jet over `f64`.
pub type Jet = Jet2<f64>;
/// Point with `f64` coordinates.
pub type Pt = Point<f64>;
/// Section along a map with `f64` components.
pub type Section = SectionAlongMap<f64>;
/// Christoffel table over `f64`.
pub type Christoffel = ChristoffelValue<f64>;
/// Frame over `f64`.
pub type Frame = FrameValue<f64>;

/// Default absolute tolerance on scaled residuals.
pub const DEFAULT_TOL: f64 = 1e-7;
