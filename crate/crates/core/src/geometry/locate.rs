//! Point location in tetrahedral meshes: neighbour walk from a hint, with a
//! uniform bucket grid as fallback.

use std::collections::HashMap;

use nalgebra::Matrix3;

use super::mesh::Mesh;
use crate::Vec3;

const NONE: usize = usize::MAX;
const INSIDE_EPS: f64 = 1e-12;

/// Last tetrahedron a query landed in; reused as the walk start of the next query.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hint {
    pub(crate) tet: Option<usize>,
}

/// A located point: containing tetrahedron and barycentric weights.
#[derive(Debug, Clone, Copy)]
pub struct Location {
    pub tet: usize,
    pub bary: [f64; 4],
    /// Distance from the query to the mesh (zero when inside).
    pub outside: f64,
}

#[derive(Debug, Clone)]
pub struct TetLocator {
    origins: Vec<Vec3>,
    inverses: Vec<Matrix3<f64>>,
    neighbors: Vec<[usize; 4]>,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    cell_start: Vec<usize>,
    cell_items: Vec<usize>,
}

impl TetLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.tets.len();
        let mut origins = Vec::with_capacity(n);
        let mut inverses = Vec::with_capacity(n);
        for t in 0..n {
            let [a, b, c, d] = mesh.tet_points(t);
            let m = Matrix3::from_columns(&[b - a, c - a, d - a]);
            origins.push(a);
            inverses.push(m.try_inverse().expect("positive-volume tetrahedron"));
        }

        let mut faces: HashMap<[usize; 3], (usize, usize)> = HashMap::with_capacity(2 * n);
        let mut neighbors = vec![[NONE; 4]; n];
        for (t, tet) in mesh.tets.iter().enumerate() {
            for k in 0..4 {
                let mut key = [tet[(k + 1) % 4], tet[(k + 2) % 4], tet[(k + 3) % 4]];
                key.sort_unstable();
                if let Some((u, kk)) = faces.remove(&key) {
                    neighbors[t][k] = u;
                    neighbors[u][kk] = t;
                } else {
                    faces.insert(key, (t, k));
                }
            }
        }

        let mut lo = Vec3::repeat(f64::MAX);
        let mut hi = Vec3::repeat(f64::MIN);
        for v in &mesh.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let ext = hi - lo;
        let cell = (ext.x * ext.y * ext.z / n.max(1) as f64).cbrt().max(1e-9) * 1.5;
        lo -= Vec3::repeat(1e-9 * cell);
        let dims = [0, 1, 2].map(|i| ((ext[i] / cell).floor() as usize + 1).max(1));
        let ncell = dims[0] * dims[1] * dims[2];

        let mut ranges = Vec::with_capacity(n);
        let mut counts = vec![0usize; ncell + 1];
        for t in 0..n {
            let pts = mesh.tet_points(t);
            let mut bl = pts[0];
            let mut bh = pts[0];
            for p in &pts[1..] {
                bl = bl.inf(p);
                bh = bh.sup(p);
            }
            let cl = [0, 1, 2].map(|i| (((bl[i] - lo[i]) / cell).floor().max(0.0) as usize).min(dims[i] - 1));
            let ch = [0, 1, 2].map(|i| (((bh[i] - lo[i]) / cell).floor().max(0.0) as usize).min(dims[i] - 1));
            for i in cl[0]..=ch[0] {
                for j in cl[1]..=ch[1] {
                    for k in cl[2]..=ch[2] {
                        counts[(k * dims[1] + j) * dims[0] + i + 1] += 1;
                    }
                }
            }
            ranges.push((cl, ch));
        }
        for c in 1..=ncell {
            counts[c] += counts[c - 1];
        }
        let mut fill = counts.clone();
        let mut cell_items = vec![0; counts[ncell]];
        for (t, (cl, ch)) in ranges.into_iter().enumerate() {
            for i in cl[0]..=ch[0] {
                for j in cl[1]..=ch[1] {
                    for k in cl[2]..=ch[2] {
                        let c = (k * dims[1] + j) * dims[0] + i;
                        cell_items[fill[c]] = t;
                        fill[c] += 1;
                    }
                }
            }
        }

        TetLocator {
            origins,
            inverses,
            neighbors,
            lo,
            cell,
            dims,
            cell_start: counts,
            cell_items,
        }
    }

    pub fn barycentric(&self, t: usize, p: &Vec3) -> [f64; 4] {
        let l = self.inverses[t] * (p - self.origins[t]);
        [1.0 - l.x - l.y - l.z, l.x, l.y, l.z]
    }

    fn cell_of(&self, p: &Vec3) -> [isize; 3] {
        [0, 1, 2].map(|i| ((p[i] - self.lo[i]) / self.cell).floor() as isize)
    }

    fn cell_items(&self, c: [isize; 3]) -> &[usize] {
        if (0..3).any(|i| c[i] < 0 || c[i] >= self.dims[i] as isize) {
            return &[];
        }
        let idx = (c[2] as usize * self.dims[1] + c[1] as usize) * self.dims[0] + c[0] as usize;
        &self.cell_items[self.cell_start[idx]..self.cell_start[idx + 1]]
    }

    fn walk(&self, start: usize, p: &Vec3) -> Option<(usize, [f64; 4])> {
        let mut t = start;
        for _ in 0..64 {
            let b = self.barycentric(t, p);
            let (k, min) = b
                .iter()
                .enumerate()
                .fold((0, f64::MAX), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            if min >= -INSIDE_EPS {
                return Some((t, b));
            }
            let next = self.neighbors[t][k];
            if next == NONE {
                return None;
            }
            t = next;
        }
        None
    }

    /// Exact containment query.
    pub fn locate(&self, p: &Vec3, hint: &mut Hint) -> Option<Location> {
        if let Some(h) = hint.tet {
            if let Some((t, bary)) = self.walk(h, p) {
                hint.tet = Some(t);
                return Some(Location {
                    tet: t,
                    bary,
                    outside: 0.0,
                });
            }
        }
        for &t in self.cell_items(self.cell_of(p)) {
            let b = self.barycentric(t, p);
            if b.iter().all(|&v| v >= -INSIDE_EPS) {
                hint.tet = Some(t);
                return Some(Location {
                    tet: t,
                    bary: b,
                    outside: 0.0,
                });
            }
        }
        None
    }

    /// Like [`locate`](Self::locate), but points up to `max_dist` outside the
    /// mesh snap to the nearest tetrahedron with clamped weights.
    pub fn locate_clamped(&self, p: &Vec3, hint: &mut Hint, max_dist: f64) -> Option<Location> {
        if let Some(loc) = self.locate(p, hint) {
            return Some(loc);
        }
        let c = self.cell_of(p);
        let reach = ((max_dist / self.cell).ceil() as isize).max(1);
        let mut best: Option<(f64, usize, [f64; 4])> = None;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                for dk in -reach..=reach {
                    for &t in self.cell_items([c[0] + di, c[1] + dj, c[2] + dk]) {
                        let mut b = self.barycentric(t, p);
                        b.iter_mut().for_each(|v| *v = v.max(0.0));
                        let s: f64 = b.iter().sum();
                        b.iter_mut().for_each(|v| *v /= s);
                        let q = self.point_of(t, &b);
                        let d = (q - p).norm();
                        if best.is_none_or(|(bd, _, _)| d < bd) {
                            best = Some((d, t, b));
                        }
                    }
                }
            }
        }
        match best {
            Some((d, t, b)) if d <= max_dist => {
                hint.tet = Some(t);
                Some(Location {
                    tet: t,
                    bary: b,
                    outside: d,
                })
            }
            _ => None,
        }
    }

    fn point_of(&self, t: usize, b: &[f64; 4]) -> Vec3 {
        // Recover vertices from the affine frame.
        let m = self.inverses[t].try_inverse().unwrap_or_else(Matrix3::zeros);
        self.origins[t] + m * Vec3::new(b[1], b[2], b[3])
    }
}
