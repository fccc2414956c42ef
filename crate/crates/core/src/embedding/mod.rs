//! Reference maps `M → C`: the least-distorted harmonic map and the plain
//! geometric inverse of a domain embedding.

mod cap;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{generate_mesh, DomainPoint, Hint, Location, Mesh, ReferencePoint, TubularDomain};
use crate::harmonic::{
    gradient_field, solve_phi, solve_surface_coords, ScalarFieldP1, SurfaceCoords, VectorFieldNodal, SOLVER_TOL,
};
use crate::tracing::{split_monotone, Crossing, FieldLine, Foliation, Integrator, Target, TraceOptions};
use crate::Vec3;

pub use cap::CapSurface;

/// A map from the tube to the reference cylinder, restricted on `S0` to a map
/// onto the unit disc.
pub trait ReferenceMap: Foliation + Send + Sync {
    fn to_reference(&self, y: &Vec3) -> Result<ReferencePoint>;
    /// Point of `S0` whose reference position is `(x, 0)`.
    fn cap_point(&self, x: &[f64; 2]) -> Result<DomainPoint>;
    /// Area of `S0` per unit area of the disc at `x`.
    fn cap_jacobian(&self, x: &[f64; 2]) -> Result<f64>;
    /// Unit normal of `S0` at `cap_point(x)`, pointing into the tube.
    fn cap_normal(&self, x: &[f64; 2]) -> Result<Vec3>;
}

/// Adds reference coordinates to every sample and re-splits sections on the
/// reference height.
pub fn map_curve(map: &dyn ReferenceMap, mut line: FieldLine) -> Result<FieldLine> {
    for (i, s) in line.samples.iter_mut().enumerate() {
        let r = map.to_reference(&s.y).map_err(|e| Error::InvalidArgument(format!(
            "mapping sample {i} of a field line failed: {e}"
        )))?;
        s.reference = Some(r);
    }
    Ok(split_monotone(line))
}

/// Inverse of the domain's own parametrization; exact but not least-distorted.
#[derive(Debug, Clone)]
pub struct GeometricMap {
    domain: TubularDomain,
}

impl GeometricMap {
    pub fn new(domain: TubularDomain) -> Self {
        GeometricMap { domain }
    }
}

impl Foliation for GeometricMap {
    fn domain(&self) -> &TubularDomain {
        &self.domain
    }

    fn level(&self, y: &Vec3, _: &mut Hint) -> Result<f64> {
        Ok(self.domain.inverse(y).z)
    }
}

impl ReferenceMap for GeometricMap {
    fn to_reference(&self, y: &Vec3) -> Result<ReferencePoint> {
        Ok(self.domain.inverse(y))
    }

    fn cap_point(&self, x: &[f64; 2]) -> Result<DomainPoint> {
        Ok(self.domain.embed(&ReferencePoint::new(x[0], x[1], 0.0)))
    }

    fn cap_jacobian(&self, x: &[f64; 2]) -> Result<f64> {
        let j = self.domain.jacobian(&ReferencePoint::new(x[0], x[1], 0.0));
        Ok(j.column(0).cross(&j.column(1)).norm())
    }

    fn cap_normal(&self, x: &[f64; 2]) -> Result<Vec3> {
        Ok(self.domain.axial_normal(&ReferencePoint::new(x[0], x[1], 0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    /// Backward `u`-trace for every query.
    Exact,
    /// Backward traces at mesh vertices only, then linear interpolation.
    Bulk,
}

/// The least-distorted map: `z = φ`, `(x1, x2)` carried along `u`-lines from
/// the harmonic coordinates on `S0`.
#[derive(Debug, Clone)]
pub struct EmbeddingMap {
    domain: TubularDomain,
    phi: Arc<ScalarFieldP1>,
    u: Arc<VectorFieldNodal>,
    cap: CapSurface,
    mode: EmbeddingMode,
    opts: TraceOptions,
    cache: Option<Vec<[f64; 2]>>,
}

impl EmbeddingMap {
    pub fn new(
        domain: TubularDomain,
        phi: Arc<ScalarFieldP1>,
        u: Arc<VectorFieldNodal>,
        surface: SurfaceCoords,
        mode: EmbeddingMode,
        opts: TraceOptions,
    ) -> Result<Self> {
        let mut map = EmbeddingMap {
            domain,
            phi,
            u,
            cap: CapSurface::new(surface),
            mode,
            opts,
            cache: None,
        };
        if mode == EmbeddingMode::Bulk {
            let n = map.mesh().vertices.len();
            let cache = (0..n)
                .into_par_iter()
                .map(|v| {
                    let r = map.exact_reference(&map.mesh().vertices[v])?;
                    Ok([r.x1, r.x2])
                })
                .collect::<Result<Vec<_>>>()?;
            map.cache = Some(cache);
        }
        Ok(map)
    }

    /// Meshes `domain`, solves for `φ`, `u` and the cap coordinates.
    pub fn build(domain: &TubularDomain, resolution: f64, mode: EmbeddingMode, opts: TraceOptions) -> Result<Self> {
        let mesh = Arc::new(generate_mesh(domain, resolution)?);
        let phi = Arc::new(solve_phi(mesh.clone(), SOLVER_TOL)?);
        let u = Arc::new(gradient_field(&phi, domain));
        let surface = solve_surface_coords(&mesh, 0.0)?;
        Self::new(domain.clone(), phi, u, surface, mode, opts)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.phi.mesh
    }

    pub fn phi(&self) -> &Arc<ScalarFieldP1> {
        &self.phi
    }

    pub fn u(&self) -> &Arc<VectorFieldNodal> {
        &self.u
    }

    pub fn cap(&self) -> &CapSurface {
        &self.cap
    }

    pub fn mode(&self) -> EmbeddingMode {
        self.mode
    }

    /// Foot point on `S0` of the `u`-line through `y`.
    pub fn foot_point(&self, y: &Vec3) -> Result<Vec3> {
        let mut it = Integrator {
            rhs: |p: &Vec3, h: &mut Hint| self.u.eval(p, h),
            fol: self,
            sign: -1.0,
            opts: &self.opts,
            hint: Hint::default(),
            record: false,
        };
        let samples = it.run(
            *y,
            Target {
                level: 0.0,
                crossing: Crossing::Falling,
            },
        )?;
        Ok(samples.last().expect("trace has samples").y)
    }

    /// Nearest element to `y` with unclamped barycentric coordinates, so
    /// that P1 data extends linearly just outside the mesh.
    fn locate(&self, y: &Vec3, hint: &mut Hint) -> Result<Location> {
        let loc = self
            .u
            .locator
            .locate_clamped(y, hint, 0.5 * self.mesh().resolution)
            .ok_or(Error::OutsideMesh(y.x, y.y, y.z))?;
        if loc.outside > 0.0 {
            return Ok(Location {
                bary: self.u.locator.barycentric(loc.tet, y),
                ..loc
            });
        }
        Ok(loc)
    }

    fn exact_reference(&self, y: &Vec3) -> Result<ReferencePoint> {
        let z = self.level(y, &mut Hint::default())?;
        let foot = self.foot_point(y)?;
        let x = self.cap.coords_at(&foot)?;
        Ok(ReferencePoint::new(x[0], x[1], z))
    }
}

impl Foliation for EmbeddingMap {
    fn domain(&self) -> &TubularDomain {
        &self.domain
    }

    fn level(&self, y: &Vec3, hint: &mut Hint) -> Result<f64> {
        self.locate(y, hint).map(|l| self.phi.interpolate(&l))
    }
}

impl ReferenceMap for EmbeddingMap {
    fn to_reference(&self, y: &Vec3) -> Result<ReferencePoint> {
        match &self.cache {
            None => self.exact_reference(y),
            Some(cache) => {
                let loc = self.locate(y, &mut Hint::default())?;
                let tet = self.mesh().tets[loc.tet];
                let mut x = [0.0; 2];
                for k in 0..4 {
                    x[0] += loc.bary[k] * cache[tet[k]][0];
                    x[1] += loc.bary[k] * cache[tet[k]][1];
                }
                Ok(ReferencePoint::new(x[0], x[1], self.phi.interpolate(&loc)))
            }
        }
    }

    fn cap_point(&self, x: &[f64; 2]) -> Result<DomainPoint> {
        self.cap.point_at(x).map(DomainPoint)
    }

    fn cap_jacobian(&self, x: &[f64; 2]) -> Result<f64> {
        self.cap.jacobian_at(x)
    }

    fn cap_normal(&self, x: &[f64; 2]) -> Result<Vec3> {
        self.cap.normal_at(x)
    }
}
