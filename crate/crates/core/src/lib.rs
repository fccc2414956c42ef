//! Field-line winding of braided vector fields on tubular domains.
//!
//! The pipeline runs: build a [`geometry::TubularDomain`], mesh it, solve for the
//! harmonic reference field ([`harmonic`]), construct the reference map
//! ([`embedding`]), trace field lines ([`tracing`]), and integrate pairwise
//! windings over the lower cap ([`winding`], [`helicity`]).

// Comparisons written as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harmonic;
pub mod helicity;
pub mod io;
pub mod sparse;
pub mod tracing;
pub mod winding;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Absolute slack for geometric membership tests.
pub const EPS_GEOM: f64 = 1e-12;

pub use embedding::{EmbeddingMap, EmbeddingMode, GeometricMap, ReferenceMap};
pub use error::{Error, Result};
pub use fields::{make_field, validate_braided, BraidedField, FieldSpec, ValidationReport, WeightFunction};
pub use geometry::{
    build_domain, generate_mesh, BoundaryTag, DomainPoint, DomainSpec, Mesh, ReferencePoint,
    TubularDomain,
};
pub use harmonic::{
    check_nonnull, gradient_field, solve_phi, solve_surface_coords, NullAuditReport, ScalarFieldP1,
    SurfaceCoords, VectorFieldNodal,
};
pub use helicity::{
    check_solenoidal, field_line_helicity, total_helicity, winding_gauge_potential, DivergenceReport,
};
pub use tracing::{
    field_line_mapping, split_monotone, trace_field_line, DiscreteMapping, FieldLine, TraceError,
    TraceOptions,
};
pub use winding::{
    angle, appendix_b_oracle, field_line_winding, gradient_identity_residual, pairwise_winding,
    weighted_winding, DistributionKind, GridLayout, QuadratureGrid, WindingDistribution,
};
