//! End-vanishing in-plane deformations `Ψ_z` of the reference disc.
//!
//! Conjugating a field by `Ψ̂(x, z) = (Ψ_z(x), z)` moves its field lines
//! without changing their endpoints on the caps, since `Ψ_0 = Ψ_1 = id`.
//! Both deformations fix the unit circle with vanishing normal derivative.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ReferencePoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Perturbation {
    /// `Ψ(x) = x + ε s(z) (1 - r²)² c`.
    Shift { epsilon: f64, direction: [f64; 2] },
    /// Rotation about the axis by `ε s(z) (1 - r²)`.
    Swirl { epsilon: f64 },
}

/// `s(z) = 16 z² (1 - z)²`: exactly zero, with zero slope, on both caps.
fn bump(z: f64) -> (f64, f64) {
    let z = z.clamp(0.0, 1.0);
    let q = z * (1.0 - z);
    (16.0 * q * q, 32.0 * q * (1.0 - 2.0 * z))
}

fn rot(b: f64) -> Matrix2<f64> {
    let (s, c) = b.sin_cos();
    Matrix2::new(c, -s, s, c)
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Shift { epsilon, direction } => {
                // max |∇(1 - r²)²| = 8 / (3√3); keeps Ψ_z a diffeomorphism.
                let lip = epsilon.abs() * direction[0].hypot(direction[1]) * 8.0 / (3.0 * 3f64.sqrt());
                if !(lip < 1.0) {
                    return Err(Error::InvalidField(format!(
                        "shift perturbation too strong (Lipschitz bound {lip:.3} >= 1)"
                    )));
                }
            }
            Perturbation::Swirl { epsilon } => {
                if !epsilon.is_finite() {
                    return Err(Error::InvalidField("swirl epsilon must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Overall amplitude at height `z`; zero on both caps.
    pub fn strength(&self, z: f64) -> f64 {
        let eps = match *self {
            Perturbation::Shift { epsilon, .. } | Perturbation::Swirl { epsilon } => epsilon,
        };
        eps * bump(z).0
    }

    pub fn apply(&self, x: &ReferencePoint) -> ReferencePoint {
        let p = Vector2::new(x.x1, x.x2);
        let q = self.apply2(p, x.z);
        ReferencePoint::new(q.x, q.y, x.z)
    }

    fn apply2(&self, p: Vector2<f64>, z: f64) -> Vector2<f64> {
        let (s, _) = bump(z);
        let r2 = p.norm_squared();
        match *self {
            Perturbation::Shift { epsilon, direction } => {
                let f = (1.0 - r2).max(0.0).powi(2);
                p + epsilon * s * f * Vector2::new(direction[0], direction[1])
            }
            Perturbation::Swirl { epsilon } => rot(epsilon * s * (1.0 - r2).max(0.0)) * p,
        }
    }

    /// Inverse of `apply` at fixed `z`.
    pub fn inverse(&self, xp: &ReferencePoint) -> ReferencePoint {
        let q = Vector2::new(xp.x1, xp.x2);
        match *self {
            Perturbation::Swirl { epsilon } => {
                // Radius is preserved, so the angle can be undone directly.
                let (s, _) = bump(xp.z);
                let p = rot(-epsilon * s * (1.0 - q.norm_squared()).max(0.0)) * q;
                ReferencePoint::new(p.x, p.y, xp.z)
            }
            Perturbation::Shift { .. } => {
                let mut p = q;
                for _ in 0..50 {
                    let res = self.apply2(p, xp.z) - q;
                    if res.norm() < 1e-15 {
                        break;
                    }
                    let j = self.jacobian(&ReferencePoint::new(p.x, p.y, xp.z));
                    let j2 = j.fixed_view::<2, 2>(0, 0).into_owned();
                    p -= j2.try_inverse().unwrap_or_else(Matrix2::identity) * res;
                }
                ReferencePoint::new(p.x, p.y, xp.z)
            }
        }
    }

    /// Jacobian of `Ψ̂(x, z) = (Ψ_z(x), z)` with respect to `(x1, x2, z)`.
    pub fn jacobian(&self, x: &ReferencePoint) -> Matrix3<f64> {
        let (s, ds) = bump(x.z);
        let p = Vector2::new(x.x1, x.x2);
        let r2 = p.norm_squared();
        let (dxy, dz) = if r2 >= 1.0 {
            (Matrix2::identity(), Vector2::zeros())
        } else {
            match *self {
                Perturbation::Shift { epsilon, direction } => {
                    let c = Vector2::new(direction[0], direction[1]);
                    let g = -4.0 * (1.0 - r2) * p;
                    (
                        Matrix2::identity() + epsilon * s * c * g.transpose(),
                        epsilon * ds * (1.0 - r2).powi(2) * c,
                    )
                }
                Perturbation::Swirl { epsilon } => {
                    let beta = epsilon * s * (1.0 - r2);
                    let r = rot(beta);
                    let jp = r * Vector2::new(-p.y, p.x);
                    let grad_beta = -2.0 * epsilon * s * p;
                    (r + jp * grad_beta.transpose(), epsilon * ds * (1.0 - r2) * jp)
                }
            }
        };
        Matrix3::new(
            dxy[(0, 0)], dxy[(0, 1)], dz.x,
            dxy[(1, 0)], dxy[(1, 1)], dz.y,
            0.0, 0.0, 1.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CASES: [Perturbation; 2] = [
        Perturbation::Shift { epsilon: 0.4, direction: [1.0, -0.7] },
        Perturbation::Swirl { epsilon: 3.0 },
    ];

    proptest! {
        #[test]
        fn inverse_undoes_apply(r in 0.0f64..1.0, a in 0.0f64..6.3, z in 0.0f64..1.0) {
            for p in CASES {
                let x = ReferencePoint::new(r * a.cos(), r * a.sin(), z);
                let back = p.inverse(&p.apply(&x));
                prop_assert!((back.x1 - x.x1).abs() < 1e-12 && (back.x2 - x.x2).abs() < 1e-12);
                prop_assert!(p.apply(&x).radius() <= 1.0 + 1e-15);
            }
        }

        #[test]
        fn jacobian_matches_finite_differences(r in 0.0f64..0.98, a in 0.0f64..6.3, z in 0.01f64..0.99) {
            let h = 1e-6;
            for p in CASES {
                let x = ReferencePoint::new(r * a.cos(), r * a.sin(), z);
                let j = p.jacobian(&x);
                let f = |x: ReferencePoint| { let q = p.apply(&x); nalgebra::Vector3::new(q.x1, q.x2, q.z) };
                for c in 0..3 {
                    let mut xp = x; let mut xm = x;
                    match c { 0 => { xp.x1 += h; xm.x1 -= h } 1 => { xp.x2 += h; xm.x2 -= h } _ => { xp.z += h; xm.z -= h } }
                    let fd = (f(xp) - f(xm)) / (2.0 * h);
                    prop_assert!((fd - j.column(c)).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn identity_on_caps_and_rim() {
        for p in CASES {
            for z in [0.0, 1.0] {
                let x = ReferencePoint::new(0.2, -0.4, z);
                assert_eq!(p.apply(&x), x);
            }
            let x = ReferencePoint::new(0.6, 0.8, 0.5);
            assert!((p.apply(&x).x1 - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_folding_shift() {
        assert!(Perturbation::Shift { epsilon: 2.0, direction: [1.0, 0.0] }.validate().is_err());
    }
}
