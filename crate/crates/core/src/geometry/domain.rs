//! Analytic tubular domains: smooth embeddings of the unit reference cylinder.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Vec3, EPS_GEOM};

/// Point of the reference cylinder `x1² + x2² ≤ 1`, `0 ≤ z ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub x1: f64,
    pub x2: f64,
    pub z: f64,
}

impl ReferencePoint {
    pub const fn new(x1: f64, x2: f64, z: f64) -> Self {
        Self { x1, x2, z }
    }

    pub fn radius(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn angle(&self) -> f64 {
        self.x2.atan2(self.x1)
    }

    /// True when the point satisfies the cylinder constraints up to `EPS_GEOM`.
    pub fn in_cylinder(&self) -> bool {
        self.x1 * self.x1 + self.x2 * self.x2 <= 1.0 + EPS_GEOM
            && self.z >= -EPS_GEOM
            && self.z <= 1.0 + EPS_GEOM
    }
}

/// Physical point of a tubular domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainPoint(pub Vec3);

impl DomainPoint {
    pub fn new(y1: f64, y2: f64, y3: f64) -> Self {
        Self(Vec3::new(y1, y2, y3))
    }
}

impl std::ops::Deref for DomainPoint {
    type Target = Vec3;
    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// Tube radius as a polynomial in the axial reference coordinate:
/// `r(z) = c0 + c1 z + c2 z² + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RadiusProfile(pub Vec<f64>);

impl RadiusProfile {
    pub fn constant(r: f64) -> Self {
        Self(vec![r])
    }

    pub fn linear(r0: f64, slope: f64) -> Self {
        Self(vec![r0, slope])
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * z + i as f64 * c)
    }

    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=1000).map(move |i| self.eval(i as f64 / 1000.0))
    }

    pub fn max(&self) -> f64 {
        self.samples().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples().fold(f64::MAX, f64::min)
    }
}

/// Centerline of a curved tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Centerline {
    /// Circular arc in the `y1–y3` plane starting at the origin heading along `+y3`,
    /// bending toward `+y1`.
    Arc { bend_radius: f64, sweep: f64 },
}

/// Declarative description of a built-in domain family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    StraightCylinder {
        radius: f64,
        length: f64,
    },
    ExpandingTube {
        radius: RadiusProfile,
        length: f64,
    },
    CurvedTube {
        centerline: Centerline,
        radius: RadiusProfile,
    },
}

impl DomainSpec {
    pub fn unit_cylinder() -> Self {
        DomainSpec::StraightCylinder {
            radius: 1.0,
            length: 1.0,
        }
    }

    /// The `r(z) = 1 + z` cone frustum of unit height.
    pub fn unit_expanding() -> Self {
        DomainSpec::ExpandingTube {
            radius: RadiusProfile::linear(1.0, 1.0),
            length: 1.0,
        }
    }

    pub fn quarter_arc(bend_radius: f64, radius: f64) -> Self {
        DomainSpec::CurvedTube {
            centerline: Centerline::Arc {
                bend_radius,
                sweep: PI / 2.0,
            },
            radius: RadiusProfile::constant(radius),
        }
    }
}

/// Kind tag of a built-in domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    StraightCylinder,
    CurvedTube,
    ExpandingTube,
}

/// An embedding `G: C → M` of the reference cylinder with its analytic jacobian.
///
/// `G` only fixes the geometry of `M`; the least-distorted reference map is
/// constructed separately from the harmonic field.
#[derive(Debug, Clone, PartialEq)]
pub struct TubularDomain {
    spec: DomainSpec,
}

impl TubularDomain {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn kind(&self) -> DomainKind {
        match self.spec {
            DomainSpec::StraightCylinder { .. } => DomainKind::StraightCylinder,
            DomainSpec::ExpandingTube { .. } => DomainKind::ExpandingTube,
            DomainSpec::CurvedTube { .. } => DomainKind::CurvedTube,
        }
    }

    /// Tube radius at reference height `z`.
    pub fn radius_at(&self, z: f64) -> f64 {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, .. } => *radius,
            DomainSpec::ExpandingTube { radius, .. } | DomainSpec::CurvedTube { radius, .. } => {
                radius.eval(z)
            }
        }
    }


    pub fn max_radius(&self) -> f64 {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, .. } => *radius,
            DomainSpec::ExpandingTube { radius, .. } | DomainSpec::CurvedTube { radius, .. } => {
                radius.max()
            }
        }
    }

    pub fn min_radius(&self) -> f64 {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, .. } => *radius,
            DomainSpec::ExpandingTube { radius, .. } | DomainSpec::CurvedTube { radius, .. } => {
                radius.min()
            }
        }
    }

    /// Largest length of any axial fiber `z ↦ G(x1, x2, z)` probed on the axis and rim.
    pub fn fiber_length(&self) -> f64 {
        const N: usize = 400;
        let fibers = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        fibers
            .iter()
            .map(|&(x1, x2)| {
                (0..N)
                    .map(|i| {
                        let z = (i as f64 + 0.5) / N as f64;
                        self.jacobian(&ReferencePoint::new(x1, x2, z))
                            .column(2)
                            .norm()
                    })
                    .sum::<f64>()
                    / N as f64
            })
            .fold(0.0, f64::max)
    }

    /// Scale used to turn dimensionless tolerances into lengths.
    pub fn length_scale(&self) -> f64 {
        (2.0 * self.max_radius()).max(self.fiber_length())
    }

    pub fn embed(&self, x: &ReferencePoint) -> DomainPoint {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, length } => {
                DomainPoint::new(radius * x.x1, radius * x.x2, length * x.z)
            }
            DomainSpec::ExpandingTube { radius, length } => {
                let r = radius.eval(x.z);
                DomainPoint::new(r * x.x1, r * x.x2, length * x.z)
            }
            DomainSpec::CurvedTube {
                centerline: Centerline::Arc { bend_radius, sweep },
                radius,
            } => {
                let r = radius.eval(x.z);
                let (s, c) = (sweep * x.z).sin_cos();
                let center = Vec3::new(bend_radius * (1.0 - c), 0.0, bend_radius * s);
                let e1 = Vec3::new(c, 0.0, -s);
                let e2 = Vec3::new(0.0, 1.0, 0.0);
                DomainPoint(center + r * (x.x1 * e1 + x.x2 * e2))
            }
        }
    }

    /// Derivative of `embed`; columns are `∂/∂x1`, `∂/∂x2`, `∂/∂z`.
    pub fn jacobian(&self, x: &ReferencePoint) -> Matrix3<f64> {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, length } => {
                Matrix3::from_diagonal(&Vec3::new(*radius, *radius, *length))
            }
            DomainSpec::ExpandingTube { radius, length } => {
                let r = radius.eval(x.z);
                let dr = radius.derivative(x.z);
                Matrix3::new(r, 0.0, dr * x.x1, 0.0, r, dr * x.x2, 0.0, 0.0, *length)
            }
            DomainSpec::CurvedTube {
                centerline: Centerline::Arc { bend_radius, sweep },
                radius,
            } => {
                let r = radius.eval(x.z);
                let dr = radius.derivative(x.z);
                let (s, c) = (sweep * x.z).sin_cos();
                let e1 = Vec3::new(c, 0.0, -s);
                let e2 = Vec3::new(0.0, 1.0, 0.0);
                let t = Vec3::new(s, 0.0, c);
                let dz = sweep * (bend_radius - r * x.x1) * t + dr * (x.x1 * e1 + x.x2 * e2);
                Matrix3::from_columns(&[r * e1, r * e2, dz])
            }
        }
    }

    /// Closed-form inverse of `embed`. The result is not clamped to the cylinder.
    pub fn inverse(&self, y: &Vec3) -> ReferencePoint {
        match &self.spec {
            DomainSpec::StraightCylinder { radius, length } => {
                ReferencePoint::new(y.x / radius, y.y / radius, y.z / length)
            }
            DomainSpec::ExpandingTube { radius, length } => {
                let z = y.z / length;
                let r = radius.eval(z);
                ReferencePoint::new(y.x / r, y.y / r, z)
            }
            DomainSpec::CurvedTube {
                centerline: Centerline::Arc { bend_radius, sweep },
                radius,
            } => {
                let alpha = y.z.atan2(bend_radius - y.x);
                let z = alpha / sweep;
                let rho = (bend_radius - y.x).hypot(y.z);
                let r = radius.eval(z);
                ReferencePoint::new((bend_radius - rho) / r, y.y / r, z)
            }
        }
    }

    /// Outward unit normal of the side boundary at reference angle position `x`.
    pub fn side_normal(&self, x: &ReferencePoint) -> Vec3 {
        let jit = self
            .jacobian(x)
            .try_inverse()
            .expect("validated domain has invertible jacobian")
            .transpose();
        (jit * Vec3::new(x.x1, x.x2, 0.0)).normalize()
    }

    /// Unit normal of the cross-section `S_z` at `x`, oriented toward increasing `z`.
    pub fn axial_normal(&self, x: &ReferencePoint) -> Vec3 {
        let jit = self
            .jacobian(x)
            .try_inverse()
            .expect("validated domain has invertible jacobian")
            .transpose();
        (jit * Vec3::new(0.0, 0.0, 1.0)).normalize()
    }

    /// Pulls a point that drifted across the side boundary back onto it.
    ///
    /// Returns the corrected point and the radial overshoot in reference units
    /// (zero when no correction was needed).
    pub fn clamp_to_side(&self, y: &Vec3) -> (Vec3, f64) {
        let x = self.inverse(y);
        let r = x.radius();
        if r <= 1.0 {
            return (*y, 0.0);
        }
        let back = ReferencePoint::new(x.x1 / r, x.x2 / r, x.z);
        (self.embed(&back).0, r - 1.0)
    }
}

/// Builds and validates a domain from its descriptor.
pub fn build_domain(spec: &DomainSpec) -> Result<TubularDomain> {
    let bad = |m: String| Err(Error::InvalidDomain(m));
    match spec {
        DomainSpec::StraightCylinder { radius, length } => {
            if !(*radius > 0.0 && radius.is_finite()) {
                return bad(format!("radius must be positive, got {radius}"));
            }
            if !(*length > 0.0 && length.is_finite()) {
                return bad(format!("length must be positive, got {length}"));
            }
        }
        DomainSpec::ExpandingTube { radius, length } => {
            if radius.0.is_empty() {
                return bad("empty radius profile".into());
            }
            if radius.min() <= 0.0 {
                return bad(format!("radius profile reaches {} <= 0", radius.min()));
            }
            if !(*length > 0.0 && length.is_finite()) {
                return bad(format!("length must be positive, got {length}"));
            }
        }
        DomainSpec::CurvedTube { centerline, radius } => {
            if radius.0.is_empty() {
                return bad("empty radius profile".into());
            }
            if radius.min() <= 0.0 {
                return bad(format!("radius profile reaches {} <= 0", radius.min()));
            }
            let Centerline::Arc { bend_radius, sweep } = centerline;
            if !(*bend_radius > 0.0) || !(*sweep > 0.0) {
                return bad("arc needs positive bend radius and sweep".into());
            }
            check_self_intersection(centerline, radius.max())?;
        }
    }
    let domain = TubularDomain { spec: spec.clone() };
    check_orientation(&domain)?;
    Ok(domain)
}

fn centerline_point(c: &Centerline, t: f64) -> Vec3 {
    let Centerline::Arc { bend_radius, sweep } = c;
    let (s, co) = (sweep * t).sin_cos();
    Vec3::new(bend_radius * (1.0 - co), 0.0, bend_radius * s)
}

fn check_self_intersection(c: &Centerline, max_radius: f64) -> Result<()> {
    const N: usize = 400;
    let pts: Vec<Vec3> = (0..=N).map(|i| centerline_point(c, i as f64 / N as f64)).collect();
    let mut arc = vec![0.0; N + 1];
    for i in 1..=N {
        arc[i] = arc[i - 1] + (pts[i] - pts[i - 1]).norm();
    }
    // Samples closer than half a tube circumference along the curve count as adjacent.
    let min_sep = PI * max_radius;
    for i in 0..=N {
        for j in (i + 1)..=N {
            if arc[j] - arc[i] < min_sep {
                continue;
            }
            let d = (pts[j] - pts[i]).norm();
            if d < 2.0 * max_radius {
                return Err(Error::InvalidDomain(format!(
                    "centerline self-intersects: samples {i} and {j} are {d:.4} apart (< 2 x radius {max_radius})"
                )));
            }
        }
    }
    Ok(())
}

fn check_orientation(domain: &TubularDomain) -> Result<()> {
    const NR: usize = 6;
    const NA: usize = 12;
    const NZ: usize = 24;
    for iz in 0..=NZ {
        let z = iz as f64 / NZ as f64;
        for ir in 0..=NR {
            let r = ir as f64 / NR as f64;
            for ia in 0..NA {
                let a = 2.0 * PI * ia as f64 / NA as f64;
                let x = ReferencePoint::new(r * a.cos(), r * a.sin(), z);
                let det = domain.jacobian(&x).determinant();
                if !(det > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "degenerate jacobian (det = {det:e}) at reference point ({:.3}, {:.3}, {:.3})",
                        x.x1, x.x2, x.z
                    )));
                }
                if ir == 0 {
                    break;
                }
            }
        }
    }
    Ok(())
}
