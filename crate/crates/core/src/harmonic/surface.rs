//! Harmonic coordinates on a disc-like boundary surface.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh};
use crate::sparse::{conjugate_gradient, CsrMatrix};
use crate::Vec3;

use super::SOLVER_TOL;

/// Triangulated surface extracted from tagged boundary faces.
///
/// Triangles are oriented so that their normals point along the tube axis
/// (into `M` on `S0`, out of it on `S1`); the boundary loop runs
/// counter-clockwise with respect to that orientation.
#[derive(Debug, Clone)]
pub struct TriSurface {
    /// Global mesh index of each surface vertex.
    pub vertices: Vec<usize>,
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Closed boundary loop, starting at the vertex with the smallest global index.
    pub boundary: Vec<usize>,
}

impl TriSurface {
    pub fn from_faces(mesh: &Mesh, tag: BoundaryTag) -> Result<Self> {
        let mut local: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for f in mesh.faces_with(tag) {
            let mut tri = f.vertices.map(|g| {
                *local.entry(g).or_insert_with(|| {
                    vertices.push(g);
                    vertices.len() - 1
                })
            });
            if tag == BoundaryTag::S0 {
                tri.swap(1, 2);
            }
            triangles.push(tri);
        }
        if triangles.is_empty() {
            return Err(Error::MissingBoundaryTag(tag));
        }
        let positions = vertices.iter().map(|&g| mesh.vertices[g]).collect();
        Self::new(vertices, positions, triangles)
    }

    pub fn new(vertices: Vec<usize>, positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                *edges.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (&(a, b), _) in edges.iter().filter(|(&(a, b), _)| !edges.contains_key(&(b, a))) {
            if next.insert(a, b).is_some() {
                return Err(Error::InvalidMesh("surface boundary is not a simple loop".into()));
            }
        }
        let start = *next
            .keys()
            .min_by_key(|&&v| vertices[v])
            .ok_or_else(|| Error::InvalidMesh("surface has no boundary".into()))?;
        let mut boundary = vec![start];
        let mut v = next[&start];
        while v != start {
            boundary.push(v);
            if boundary.len() > next.len() {
                return Err(Error::InvalidMesh("surface boundary is not a simple loop".into()));
            }
            v = *next
                .get(&v)
                .ok_or_else(|| Error::InvalidMesh("open surface boundary".into()))?;
        }
        if boundary.len() != next.len() {
            return Err(Error::InvalidMesh(
                "surface boundary has several components; expected a disc".into(),
            ));
        }
        Ok(TriSurface {
            vertices,
            positions,
            triangles,
            boundary,
        })
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| (self.positions[self.boundary[(i + 1) % n]] - self.positions[self.boundary[i]]).norm())
            .sum()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.positions[v]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Cotangent-weight Laplacian (positive semi-definite).
    fn cotangent_matrix(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(12 * self.triangles.len());
        for t in &self.triangles {
            for k in 0..3 {
                let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let u = self.positions[i] - self.positions[o];
                let v = self.positions[j] - self.positions[o];
                let w = 0.5 * u.dot(&v) / u.cross(&v).norm();
                trip.push((i, j, -w));
                trip.push((j, i, -w));
                trip.push((i, i, w));
                trip.push((j, j, w));
            }
        }
        CsrMatrix::from_triplets(self.positions.len(), trip)
    }
}

/// Harmonic coordinates `(x1, x2)` on a disc-like surface.
#[derive(Debug, Clone)]
pub struct SurfaceCoords {
    pub surface: TriSurface,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub perimeter: f64,
    pub origin_arc: f64,
}

impl SurfaceCoords {
    pub fn coords(&self, local: usize) -> [f64; 2] {
        [self.x1[local], self.x2[local]]
    }

    pub fn flipped_triangles(&self) -> usize {
        (0..self.surface.triangles.len())
            .filter(|&t| !(self.mapped_area(t) > 0.0))
            .count()
    }

    /// Signed area of triangle `t` in the `(x1, x2)` plane.
    pub fn mapped_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.surface.triangles[t].map(|v| self.coords(v));
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }
}

/// Harmonic coordinates on the lower cap of `mesh`.
pub fn solve_surface_coords(mesh: &Mesh, origin_arc: f64) -> Result<SurfaceCoords> {
    solve_surface_coords_on(TriSurface::from_faces(mesh, BoundaryTag::S0)?, origin_arc)
}

/// Solves two surface Laplace problems with boundary data
/// `(cos θ(s), sin θ(s))`, `θ(s) = 2π (s - origin_arc) / L`.
pub fn solve_surface_coords_on(surface: TriSurface, origin_arc: f64) -> Result<SurfaceCoords> {
    let perimeter = surface.perimeter();
    if !(0.0..perimeter).contains(&origin_arc) {
        return Err(Error::InvalidArgument(format!(
            "origin_arc {origin_arc} outside [0, {perimeter})"
        )));
    }
    let n = surface.positions.len();
    let mut fixed = vec![None; n];
    let mut s = 0.0;
    let nb = surface.boundary.len();
    for i in 0..nb {
        let v = surface.boundary[i];
        let theta = TAU * (s - origin_arc) / perimeter;
        fixed[v] = Some([theta.cos(), theta.sin()]);
        s += (surface.positions[surface.boundary[(i + 1) % nb]] - surface.positions[v]).norm();
    }

    let k = surface.cotangent_matrix();
    let mut free_index = vec![usize::MAX; n];
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    for (fi, &v) in free.iter().enumerate() {
        free_index[v] = fi;
    }
    let mut trip = Vec::new();
    let mut rhs = [vec![0.0; free.len()], vec![0.0; free.len()]];
    for (fi, &v) in free.iter().enumerate() {
        for p in k.row_ptr[v]..k.row_ptr[v + 1] {
            let c = k.cols[p];
            match fixed[c] {
                Some(g) => {
                    rhs[0][fi] -= k.vals[p] * g[0];
                    rhs[1][fi] -= k.vals[p] * g[1];
                }
                None => trip.push((fi, free_index[c], k.vals[p])),
            }
        }
    }
    let a = CsrMatrix::from_triplets(free.len(), trip);
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for c in 0..2 {
        let mut x = vec![0.0; free.len()];
        if !free.is_empty() {
            conjugate_gradient(&a, &rhs[c], &mut x, SOLVER_TOL * 1e-2, 20 * free.len() + 1000)?;
        }
        for v in 0..n {
            out[c][v] = match fixed[v] {
                Some(g) => g[c],
                None => x[free_index[v]],
            };
        }
    }
    let [x1, x2] = out;
    let coords = SurfaceCoords {
        surface,
        x1,
        x2,
        perimeter,
        origin_arc,
    };
    let flipped = coords.flipped_triangles();
    if flipped > 0 {
        return Err(Error::FlippedSurfaceMap(flipped));
    }
    Ok(coords)
}
