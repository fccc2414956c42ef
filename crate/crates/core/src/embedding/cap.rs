//! Lookups on the lower cap in both directions between `S0` and the unit disc.

use crate::error::{Error, Result};
use crate::harmonic::SurfaceCoords;
use crate::Vec3;

#[derive(Debug, Clone)]
struct Tri {
    origin: Vec3,
    e1: Vec3,
    e2: Vec3,
    /// Inverse Gram matrix of `(e1, e2)`.
    ginv: [[f64; 2]; 2],
    img: [[f64; 2]; 3],
    img_area: f64,
    area: f64,
}

/// Triangulated `S0` together with its harmonic disc coordinates.
#[derive(Debug, Clone)]
pub struct CapSurface {
    coords: SurfaceCoords,
    tris: Vec<Tri>,
}

fn bary2(img: &[[f64; 2]; 3], x: &[f64; 2]) -> [f64; 3] {
    let [a, b, c] = img;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (x[1] - a[1]) * (c[0] - a[0])) / det;
    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn min3(l: &[f64; 3]) -> f64 {
    l[0].min(l[1]).min(l[2])
}

impl CapSurface {
    pub fn new(coords: SurfaceCoords) -> Self {
        let s = &coords.surface;
        let tris = (0..s.triangles.len())
            .map(|t| {
                let [i, j, k] = s.triangles[t];
                let origin = s.positions[i];
                let e1 = s.positions[j] - origin;
                let e2 = s.positions[k] - origin;
                let (g11, g12, g22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
                let det = g11 * g22 - g12 * g12;
                Tri {
                    origin,
                    e1,
                    e2,
                    ginv: [[g22 / det, -g12 / det], [-g12 / det, g11 / det]],
                    img: [coords.coords(i), coords.coords(j), coords.coords(k)],
                    img_area: coords.mapped_area(t),
                    area: s.triangle_area(t),
                }
            })
            .collect();
        CapSurface { coords, tris }
    }

    pub fn coords(&self) -> &SurfaceCoords {
        &self.coords
    }

    fn bary3(&self, t: &Tri, p: &Vec3) -> [f64; 3] {
        let q = p - t.origin;
        let (r1, r2) = (t.e1.dot(&q), t.e2.dot(&q));
        let l1 = t.ginv[0][0] * r1 + t.ginv[0][1] * r2;
        let l2 = t.ginv[1][0] * r1 + t.ginv[1][1] * r2;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle whose barycentric coordinates are least negative, with the
    /// coordinates clamped onto it.
    fn best<F: Fn(&Tri) -> [f64; 3]>(&self, f: F) -> (usize, [f64; 3]) {
        let mut best = (0, [f64::NAN; 3], f64::NEG_INFINITY);
        for (i, t) in self.tris.iter().enumerate() {
            let l = f(t);
            let m = min3(&l);
            if m > best.2 {
                best = (i, l, m);
                if m >= 0.0 {
                    break;
                }
            }
        }
        let mut l = best.1.map(|v| v.max(0.0));
        let s: f64 = l.iter().sum();
        l.iter_mut().for_each(|v| *v /= s);
        (best.0, l)
    }

    fn in_disc(x: &[f64; 2]) -> Result<()> {
        if x[0].hypot(x[1]) > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!("({}, {}) is outside the unit disc", x[0], x[1])));
        }
        Ok(())
    }

    /// Disc coordinates of a point on `S0`.
    pub fn coords_at(&self, p: &Vec3) -> Result<[f64; 2]> {
        let (t, l) = self.best(|t| self.bary3(t, p));
        let img = &self.tris[t].img;
        Ok([
            l[0] * img[0][0] + l[1] * img[1][0] + l[2] * img[2][0],
            l[0] * img[0][1] + l[1] * img[1][1] + l[2] * img[2][1],
        ])
    }

    pub fn point_at(&self, x: &[f64; 2]) -> Result<Vec3> {
        Self::in_disc(x)?;
        let (t, l) = self.best(|t| bary2(&t.img, x));
        let t = &self.tris[t];
        Ok(t.origin + l[1] * t.e1 + l[2] * t.e2)
    }

    /// Ratio of `S0` area to disc area on the triangle containing `x`.
    pub fn jacobian_at(&self, x: &[f64; 2]) -> Result<f64> {
        Self::in_disc(x)?;
        let (t, _) = self.best(|t| bary2(&t.img, x));
        Ok(self.tris[t].area / self.tris[t].img_area)
    }

    pub fn normal_at(&self, x: &[f64; 2]) -> Result<Vec3> {
        Self::in_disc(x)?;
        let (t, _) = self.best(|t| bary2(&t.img, x));
        Ok(self.tris[t].e1.cross(&self.tris[t].e2).normalize())
    }
}
