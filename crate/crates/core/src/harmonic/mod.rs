//! The least-distorted field `u = ∇φ` and harmonic coordinates on the lower cap.

mod surface;

use std::sync::Arc;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Hint, Location, Mesh, TetLocator, TubularDomain};
use crate::sparse::{conjugate_gradient, CgReport, CsrMatrix};
use crate::Vec3;

pub use surface::{solve_surface_coords, solve_surface_coords_on, SurfaceCoords, TriSurface};

/// Default relative residual for the Laplace solves.
pub const SOLVER_TOL: f64 = 1e-10;

/// Gradients of the four barycentric coordinates of tetrahedron `t`.
pub fn tet_gradients(mesh: &Mesh, t: usize) -> [Vec3; 4] {
    let [a, b, c, d] = mesh.tet_points(t);
    let inv = Matrix3::from_columns(&[b - a, c - a, d - a])
        .try_inverse()
        .expect("positive-volume tetrahedron");
    let g1: Vec3 = inv.row(0).transpose();
    let g2: Vec3 = inv.row(1).transpose();
    let g3: Vec3 = inv.row(2).transpose();
    [-(g1 + g2 + g3), g1, g2, g3]
}

/// P1 stiffness matrix of the Laplacian on `mesh`.
pub fn stiffness(mesh: &Mesh) -> CsrMatrix {
    let local: Vec<_> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|t| {
            let g = tet_gradients(mesh, t);
            let vol = mesh.tet_volume(t);
            let mut k = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    k[i][j] = vol * g[i].dot(&g[j]);
                }
            }
            k
        })
        .collect();
    let mut trip = Vec::with_capacity(16 * mesh.tets.len());
    for (t, k) in local.iter().enumerate() {
        let tet = mesh.tets[t];
        for i in 0..4 {
            for j in 0..4 {
                trip.push((tet[i], tet[j], k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.vertices.len(), trip)
}

/// Piecewise-linear scalar on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarFieldP1 {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    /// `K φ`; nonzero only at Dirichlet vertices, where it is the discrete flux.
    pub reaction: Vec<f64>,
    pub solver: CgReport,
}

impl ScalarFieldP1 {
    pub fn interpolate(&self, loc: &Location) -> f64 {
        let tet = self.mesh.tets[loc.tet];
        (0..4).map(|k| loc.bary[k] * self.values[tet[k]]).sum()
    }

    /// Flux of `∇φ` out of the mesh through the vertices of `tag`.
    pub fn flux(&self, tag: BoundaryTag) -> f64 {
        let tags = self.mesh.vertex_tags();
        tags.iter()
            .zip(&self.reaction)
            .filter(|(t, _)| t[tag.code() as usize])
            .map(|(_, r)| r)
            .sum()
    }

    /// Dirichlet energy `∫ |∇φ|²`.
    pub fn energy(&self) -> f64 {
        dirichlet_energy(&self.mesh, &self.values)
    }
}

pub fn dirichlet_energy(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.tets.len())
        .map(|t| {
            let g = tet_gradients(mesh, t);
            let grad: Vec3 = (0..4).map(|k| values[mesh.tets[t][k]] * g[k]).sum();
            mesh.tet_volume(t) * grad.norm_squared()
        })
        .sum()
}

/// Solves `Δφ = 0` with `φ = 0` on `S0`, `φ = 1` on `S1` and zero normal
/// derivative on the side.
pub fn solve_phi(mesh: Arc<Mesh>, rel_tol: f64) -> Result<ScalarFieldP1> {
    mesh.require_tags()?;
    let n = mesh.vertices.len();
    let tags = mesh.vertex_tags();
    let fixed: Vec<Option<f64>> = tags
        .iter()
        .map(|t| {
            if t[0] {
                Some(0.0)
            } else if t[1] {
                Some(1.0)
            } else {
                None
            }
        })
        .collect();
    let k = stiffness(&mesh);

    let mut free_index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for v in 0..n {
        if fixed[v].is_none() {
            free_index[v] = free.len();
            free.push(v);
        }
    }
    let mut trip = Vec::with_capacity(k.vals.len());
    let mut rhs = vec![0.0; free.len()];
    for (fi, &v) in free.iter().enumerate() {
        for p in k.row_ptr[v]..k.row_ptr[v + 1] {
            let c = k.cols[p];
            match fixed[c] {
                Some(g) => rhs[fi] -= k.vals[p] * g,
                None => trip.push((fi, free_index[c], k.vals[p])),
            }
        }
    }
    let a = CsrMatrix::from_triplets(free.len(), trip);
    let mut x = vec![0.0; free.len()];
    let report = conjugate_gradient(&a, &rhs, &mut x, rel_tol, 20 * free.len() + 1000)?;

    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (fi, &v) in free.iter().enumerate() {
        values[v] = x[fi];
    }
    let mut reaction = vec![0.0; n];
    k.mul_vec(&values, &mut reaction);
    for v in free {
        reaction[v] = 0.0;
    }
    Ok(ScalarFieldP1 {
        mesh,
        values,
        reaction,
        solver: report,
    })
}

/// Vector field with one value per mesh vertex, interpolated linearly in each tetrahedron.
#[derive(Debug, Clone)]
pub struct VectorFieldNodal {
    pub mesh: Arc<Mesh>,
    pub locator: Arc<TetLocator>,
    pub vectors: Vec<Vec3>,
}

impl VectorFieldNodal {
    pub fn new(mesh: Arc<Mesh>, vectors: Vec<Vec3>) -> Self {
        let locator = Arc::new(TetLocator::new(&mesh));
        Self::with_locator(mesh, locator, vectors)
    }

    pub fn with_locator(mesh: Arc<Mesh>, locator: Arc<TetLocator>, vectors: Vec<Vec3>) -> Self {
        assert_eq!(mesh.vertices.len(), vectors.len());
        VectorFieldNodal {
            mesh,
            locator,
            vectors,
        }
    }

    pub fn interpolate(&self, loc: &Location) -> Vec3 {
        let tet = self.mesh.tets[loc.tet];
        (0..4).map(|k| loc.bary[k] * self.vectors[tet[k]]).sum()
    }

    /// Evaluates at `p`, accepting points within half a mesh cell outside the
    /// polygonal boundary.
    pub fn eval(&self, p: &Vec3, hint: &mut Hint) -> Result<Vec3> {
        self.locator
            .locate_clamped(p, hint, 0.5 * self.mesh.resolution)
            .map(|l| self.interpolate(&l))
            .ok_or(Error::OutsideMesh(p.x, p.y, p.z))
    }

    /// Curl of the interpolant in each tetrahedron (constant per element).
    pub fn element_curl(&self, t: usize) -> Vec3 {
        let g = tet_gradients(&self.mesh, t);
        (0..4)
            .map(|k| g[k].cross(&self.vectors[self.mesh.tets[t][k]]))
            .sum()
    }

    /// Divergence of the interpolant in each tetrahedron.
    pub fn element_divergence(&self, t: usize) -> f64 {
        let g = tet_gradients(&self.mesh, t);
        (0..4)
            .map(|k| g[k].dot(&self.vectors[self.mesh.tets[t][k]]))
            .sum()
    }
}

/// Volume-weighted nodal recovery of `∇φ`.
///
/// On side vertices away from the caps the normal component with respect to
/// the analytic side boundary is removed, so the interpolant is tangent there.
pub fn gradient_field(phi: &ScalarFieldP1, domain: &TubularDomain) -> VectorFieldNodal {
    let mesh = &phi.mesh;
    let n = mesh.vertices.len();
    let mut acc = vec![Vec3::zeros(); n];
    let mut vol = vec![0.0; n];
    for t in 0..mesh.tets.len() {
        let g = tet_gradients(mesh, t);
        let tet = mesh.tets[t];
        let grad: Vec3 = (0..4).map(|k| phi.values[tet[k]] * g[k]).sum();
        let v = mesh.tet_volume(t);
        for &i in &tet {
            acc[i] += v * grad;
            vol[i] += v;
        }
    }
    let tags = mesh.vertex_tags();
    let vectors = (0..n)
        .map(|i| {
            let mut u = acc[i] / vol[i];
            if tags[i][2] {
                let nrm = domain.side_normal(&mesh.reference[i]);
                u -= u.dot(&nrm) * nrm;
            }
            u
        })
        .collect();
    VectorFieldNodal::new(phi.mesh.clone(), vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullAuditReport {
    /// `min |u| / median |u|` over interior vertices.
    pub min_ratio: f64,
    pub median: f64,
    pub worst_vertex: Option<usize>,
    pub floor: f64,
    pub pass: bool,
}

/// Checks that `u` does not (nearly) vanish at any interior vertex.
pub fn check_nonnull(u: &VectorFieldNodal, floor: f64) -> NullAuditReport {
    let tags = u.mesh.vertex_tags();
    let interior: Vec<(usize, f64)> = (0..u.vectors.len())
        .filter(|&i| !tags[i].iter().any(|&t| t))
        .map(|i| (i, u.vectors[i].norm()))
        .collect();
    if interior.is_empty() {
        return NullAuditReport {
            min_ratio: f64::NAN,
            median: f64::NAN,
            worst_vertex: None,
            floor,
            pass: false,
        };
    }
    let mut mags: Vec<f64> = interior.iter().map(|&(_, m)| m).collect();
    mags.sort_by(f64::total_cmp);
    let m = mags.len();
    let median = if m % 2 == 1 {
        mags[m / 2]
    } else {
        0.5 * (mags[m / 2 - 1] + mags[m / 2])
    };
    let (worst, min) = interior
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let min_ratio = if median > 0.0 { min / median } else { 0.0 };
    NullAuditReport {
        min_ratio,
        median,
        worst_vertex: Some(worst),
        floor,
        pass: min_ratio >= floor,
    }
}
