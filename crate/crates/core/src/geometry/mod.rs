//! Tubular domains and their tetrahedral meshes.

mod domain;
mod locate;
mod mesh;

pub use domain::{
    build_domain, Centerline, DomainKind, DomainPoint, DomainSpec, RadiusProfile, ReferencePoint,
    TubularDomain,
};
pub use locate::{Hint, Location, TetLocator};
pub use mesh::{generate_mesh, tet_volume, triangle_area, BoundaryFace, BoundaryTag, DiscMesh, Mesh};
