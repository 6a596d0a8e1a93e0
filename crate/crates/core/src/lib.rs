//! Reachable-set computation for discrete-time polynomial systems using
//! parallelotope bundles.
//!
//! The pipeline: polynomial dynamics are composed into unit-box coordinates
//! over each member of a parallelotope bundle, bounded per template
//! direction by a Bernstein enclosure, and re-assembled into the next
//! step's bundle. Template directions are either fixed (axis, diagonal,
//! random baselines) or regenerated every step from a local linear
//! approximation of the dynamics and from principal component analysis of
//! propagated support points.

pub mod bernstein;
pub mod geometry;
pub mod io;
pub mod models;
pub mod poly;
pub mod reach;
pub mod templates;

pub use geometry::{Bundle, GeneratorRep, GeometryError, Parallelotope};
pub use models::{builtin, parse_model, serialize_model, CovidParams, MapKind, ModelDef,
    ModelError};
pub use poly::{ExponentVec, MultiPoly, PolyError};
pub use reach::{
    reach, reach_dynamic, reach_static, sample_box, simulate, transform_bundle, Flowpipe,
    ReachConfig, ReachError, ReachEvent, ReachMode, TransformError,
};
pub use templates::{
    approx_linear_trans, assemble_active_templates, diagonal_template_sets, get_support_points,
    pca_directions, propagate_points, random_template_sets, update_linapp_template,
    SupportPoints, TemplateError, TemplateOrigin, TemplateSet,
};
