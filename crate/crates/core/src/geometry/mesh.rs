//! Structured tetrahedral meshes of tubular domains.
//!
//! The unit disc is covered by a hexagonal ring pattern (ring `i` carries `6i`
//! vertices at radius `i/n`), which has no coordinate singularity at the axis.
//! Layers of this disc are stacked in `z`, each triangular prism is split into
//! three tetrahedra, and every vertex is mapped through the domain embedding.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::domain::{ReferencePoint, TubularDomain};
use crate::error::{Error, Result};
use crate::Vec3;

/// Boundary piece a face belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    S0,
    S1,
    Sside,
}

impl BoundaryTag {
    pub fn code(self) -> i32 {
        match self {
            BoundaryTag::S0 => 0,
            BoundaryTag::S1 => 1,
            BoundaryTag::Sside => 2,
        }
    }
}

/// Triangle on the mesh boundary, oriented with its normal pointing out of `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub tag: BoundaryTag,
}

/// Triangulated unit disc used as the mesh cross-section.
#[derive(Debug, Clone)]
pub struct DiscMesh {
    pub rings: usize,
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
}

impl DiscMesh {
    pub fn ring_offset(i: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + 3 * i * (i - 1)
        }
    }

    pub fn new(rings: usize) -> Self {
        assert!(rings >= 1);
        let mut points = vec![[0.0, 0.0]];
        for i in 1..=rings {
            let r = i as f64 / rings as f64;
            let m = 6 * i;
            for j in 0..m {
                let a = 2.0 * PI * j as f64 / m as f64;
                points.push([r * a.cos(), r * a.sin()]);
            }
        }
        points[Self::ring_offset(rings)..]
            .iter_mut()
            .for_each(|p| {
                // Rim vertices sit exactly on the unit circle.
                let n = p[0].hypot(p[1]);
                p[0] /= n;
                p[1] /= n;
            });

        let mut triangles = Vec::with_capacity(6 * rings * rings);
        for i in 1..=rings {
            let outer = |k: usize| Self::ring_offset(i) + k % (6 * i);
            let inner = |k: usize| {
                if i == 1 {
                    0
                } else {
                    Self::ring_offset(i - 1) + k % (6 * (i - 1))
                }
            };
            for s in 0..6 {
                let a = |k: usize| inner(s * (i - 1) + k);
                let b = |k: usize| outer(s * i + k);
                for k in 0..i {
                    triangles.push([a(k), b(k), b(k + 1)]);
                }
                for k in 0..i.saturating_sub(1) {
                    triangles.push([a(k), b(k + 1), a(k + 1)]);
                }
            }
        }
        DiscMesh {
            rings,
            points,
            triangles,
        }
    }

    /// Vertices of the outer ring in counter-clockwise order.
    pub fn rim(&self) -> std::ops::Range<usize> {
        Self::ring_offset(self.rings)..self.points.len()
    }
}

/// Conforming tetrahedral mesh of a tubular domain with tagged boundary.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    /// Reference-cylinder position each vertex was generated from.
    pub reference: Vec<ReferencePoint>,
    /// Tetrahedra with positive signed volume.
    pub tets: Vec<[usize; 4]>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Requested characteristic edge length.
    pub resolution: f64,
    pub rings: usize,
    pub layers: usize,
}

pub fn tet_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn ref_vec(x: &ReferencePoint) -> Vec3 {
    Vec3::new(x.x1, x.x2, x.z)
}

impl Mesh {
    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        tet_volume(&a, &b, &c, &d)
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn face_area(&self, f: &BoundaryFace) -> f64 {
        let [a, b, c] = f.vertices.map(|v| self.vertices[v]);
        triangle_area(&a, &b, &c)
    }

    /// Area-weighted outward normal (length = area).
    pub fn face_vector(&self, f: &BoundaryFace) -> Vec3 {
        let [a, b, c] = f.vertices.map(|v| self.vertices[v]);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn faces_with(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryFace> + '_ {
        self.boundary_faces.iter().filter(move |f| f.tag == tag)
    }

    pub fn tagged_area(&self, tag: BoundaryTag) -> f64 {
        self.faces_with(tag).map(|f| self.face_area(f)).sum()
    }

    /// Per-vertex membership in each boundary piece.
    pub fn vertex_tags(&self) -> Vec<[bool; 3]> {
        let mut tags = vec![[false; 3]; self.vertices.len()];
        for f in &self.boundary_faces {
            for &v in &f.vertices {
                tags[v][f.tag.code() as usize] = true;
            }
        }
        tags
    }

    /// Checks that the tagged boundary contains all three pieces.
    pub fn require_tags(&self) -> Result<()> {
        for tag in [BoundaryTag::S0, BoundaryTag::S1, BoundaryTag::Sside] {
            if self.faces_with(tag).next().is_none() {
                return Err(Error::MissingBoundaryTag(tag));
            }
        }
        Ok(())
    }
}

/// Meshes `domain` with characteristic edge length `resolution`.
pub fn generate_mesh(domain: &TubularDomain, resolution: f64) -> Result<Mesh> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    if 2.0 * domain.min_radius() / resolution < 4.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} leaves fewer than 4 cells across the tube diameter {}",
            2.0 * domain.min_radius()
        )));
    }
    let rings = ((domain.max_radius() / resolution - 1e-9).ceil() as usize).max(2);
    let layers = ((domain.fiber_length() / resolution - 1e-9).ceil() as usize).max(1);
    let disc = DiscMesh::new(rings);
    let nv2 = disc.points.len();

    let mut reference = Vec::with_capacity(nv2 * (layers + 1));
    for l in 0..=layers {
        let z = l as f64 / layers as f64;
        reference.extend(disc.points.iter().map(|p| ReferencePoint::new(p[0], p[1], z)));
    }
    let vertices: Vec<Vec3> = reference.iter().map(|x| domain.embed(x).0).collect();

    let mut tets = Vec::with_capacity(3 * disc.triangles.len() * layers);
    for l in 0..layers {
        let lo = l * nv2;
        let hi = (l + 1) * nv2;
        for tri in &disc.triangles {
            let mut s = *tri;
            s.sort_unstable();
            let [a, b, c] = s;
            // Quad-face diagonals always start at the lower-numbered bottom vertex,
            // so neighbouring prisms agree on every shared face.
            for t in [
                [lo + a, lo + b, lo + c, hi + c],
                [lo + a, lo + b, hi + b, hi + c],
                [lo + a, hi + a, hi + b, hi + c],
            ] {
                let [p, q, r, w] = t.map(|v| ref_vec(&reference[v]));
                let t = if tet_volume(&p, &q, &r, &w) < 0.0 {
                    [t[0], t[1], t[3], t[2]]
                } else {
                    t
                };
                tets.push(t);
            }
        }
    }

    let mut bad = 0;
    for t in &tets {
        let [a, b, c, d] = t.map(|v| vertices[v]);
        if !(tet_volume(&a, &b, &c, &d) > 0.0) {
            bad += 1;
        }
    }
    if bad > 0 {
        return Err(Error::InvalidMesh(format!(
            "{bad} tetrahedra have non-positive volume after mapping; domain too distorted for resolution {resolution}"
        )));
    }

    let boundary_faces = extract_boundary(&tets, &reference, &vertices)?;
    Ok(Mesh {
        vertices,
        reference,
        tets,
        boundary_faces,
        resolution,
        rings,
        layers,
    })
}

/// Faces owned by exactly one tetrahedron, oriented outward and tagged from
/// their reference position.
fn extract_boundary(
    tets: &[[usize; 4]],
    reference: &[ReferencePoint],
    vertices: &[Vec3],
) -> Result<Vec<BoundaryFace>> {
    const LOCAL: [[usize; 4]; 4] = [[1, 2, 3, 0], [0, 3, 2, 1], [0, 1, 3, 2], [0, 2, 1, 3]];
    let mut owners: HashMap<[usize; 3], (usize, [usize; 3], usize)> = HashMap::new();
    for (ti, t) in tets.iter().enumerate() {
        for l in LOCAL {
            let face = [t[l[0]], t[l[1]], t[l[2]]];
            let mut key = face;
            key.sort_unstable();
            match owners.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    if e.get().0 == usize::MAX {
                        return Err(Error::InvalidMesh(format!(
                            "face {key:?} shared by more than two tetrahedra"
                        )));
                    }
                    *e.into_mut() = (usize::MAX, face, 0);
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert((ti, face, t[l[3]]));
                }
            }
        }
    }
    let mut faces: Vec<BoundaryFace> = owners
        .into_values()
        .filter(|(owner, _, _)| *owner != usize::MAX)
        .map(|(_, mut face, opposite)| {
            let [a, b, c] = face.map(|v| vertices[v]);
            let n = (b - a).cross(&(c - a));
            if n.dot(&(a - vertices[opposite])) < 0.0 {
                face.swap(1, 2);
            }
            let zs = face.map(|v| reference[v].z);
            let tag = if zs.iter().all(|&z| z == 0.0) {
                BoundaryTag::S0
            } else if zs.iter().all(|&z| z == 1.0) {
                BoundaryTag::S1
            } else {
                BoundaryTag::Sside
            };
            BoundaryFace {
                vertices: face,
                tag,
            }
        })
        .collect();
    // HashMap iteration order is unspecified; sort for determinism.
    faces.sort_by_key(|f| (f.tag.code(), {
        let mut k = f.vertices;
        k.sort_unstable();
        k
    }));

    for f in faces.iter().filter(|f| f.tag == BoundaryTag::Sside) {
        for &v in &f.vertices {
            let r = reference[v].radius();
            if (r - 1.0).abs() > crate::EPS_GEOM {
                return Err(Error::InvalidMesh(format!(
                    "side face vertex {v} at reference radius {r} is not on the rim"
                )));
            }
        }
    }
    Ok(faces)
}
