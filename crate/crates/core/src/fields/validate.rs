//! Boundary-condition checks for braided fields.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BraidedField;
use crate::geometry::{BoundaryTag, Hint, Mesh, ReferencePoint};
use crate::Vec3;

/// Relative normal component allowed on the side for analytic fields.
pub const SIDE_TOL: f64 = 1e-8;
/// Same, for fields interpolated from a polygonal mesh and probed on the
/// analytic boundary.
pub const MESH_SIDE_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `v · n` on the side exceeds tolerance.
    SideFlux,
    /// `v` does not enter through `S0` or leave through `S1`.
    CapDirection,
    Vanishing,
    Unevaluable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub reference: ReferencePoint,
    pub point: Vec3,
    /// Offending quantity (relative normal component, axial component or `|v|`).
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::SideFlux => "field crosses the side boundary",
            ViolationKind::CapDirection => "field does not cross the end cap in the +z direction",
            ViolationKind::Vanishing => "field vanishes",
            ViolationKind::Unevaluable => "field cannot be evaluated",
        };
        write!(
            f,
            "{what} at y = ({:.6}, {:.6}, {:.6}) (value {:e})",
            self.point.x, self.point.y, self.point.z, self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub probes: usize,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

enum Probe {
    Side,
    Cap,
    Interior,
}

struct Checker<'a> {
    field: &'a BraidedField,
    side_tol: f64,
    hint: Hint,
    probes: usize,
    violations: Vec<Violation>,
}

impl Checker<'_> {
    fn new(field: &BraidedField) -> Checker<'_> {
        Checker {
            side_tol: if field.is_mesh_backed() { MESH_SIDE_TOL } else { SIDE_TOL },
            field,
            hint: Hint::default(),
            probes: 0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, x: ReferencePoint, probe: Probe) {
        self.probes += 1;
        let d = self.field.domain();
        let y = d.embed(&x).0;
        let mut fail = |kind, value| {
            self.violations.push(Violation {
                kind,
                reference: x,
                point: y,
                value,
            })
        };
        let v = match self.field.eval(&y, &mut self.hint) {
            Ok(v) if v.iter().all(|c| c.is_finite()) => v,
            _ => return fail(ViolationKind::Unevaluable, f64::NAN),
        };
        let m = v.norm();
        if !(m > 1e-300) {
            return fail(ViolationKind::Vanishing, m);
        }
        match probe {
            Probe::Side => {
                let rel = v.dot(&d.side_normal(&x)).abs() / m;
                if rel > self.side_tol {
                    fail(ViolationKind::SideFlux, rel);
                }
            }
            Probe::Cap => {
                let vz = v.dot(&d.axial_normal(&x));
                if !(vz > 0.0) {
                    fail(ViolationKind::CapDirection, vz);
                }
            }
            Probe::Interior => {}
        }
    }

    fn finish(self) -> ValidationReport {
        ValidationReport {
            probes: self.probes,
            pass: self.violations.is_empty(),
            violations: self.violations,
        }
    }
}

fn random_disc(rng: &mut ChaCha8Rng, rmax: f64) -> (f64, f64) {
    let r = rmax * rng.gen::<f64>().sqrt();
    let a = TAU * rng.gen::<f64>();
    (r * a.cos(), r * a.sin())
}

/// Checks the braiding conditions at `n` random points of the analytic boundary.
pub fn validate_analytic(field: &BraidedField, n: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Checker::new(field);
    for i in 0..n {
        match i % 4 {
            0 | 1 => {
                let a = TAU * rng.gen::<f64>();
                c.check(ReferencePoint::new(a.cos(), a.sin(), rng.gen()), Probe::Side);
            }
            k => {
                let (x1, x2) = random_disc(&mut rng, 1.0);
                let z = if k == 2 { 0.0 } else { 1.0 };
                c.check(ReferencePoint::new(x1, x2, z), Probe::Cap);
            }
        }
    }
    c.finish()
}

/// Checks the braiding conditions at every boundary-face centroid of `mesh`
/// (side centroids pushed onto the analytic side) and at 1000 interior points.
pub fn validate_braided(field: &BraidedField, mesh: &Mesh) -> ValidationReport {
    let mut c = Checker::new(field);
    for f in &mesh.boundary_faces {
        let r = f.vertices.map(|v| mesh.reference[v]);
        let mut x = ReferencePoint::new(
            (r[0].x1 + r[1].x1 + r[2].x1) / 3.0,
            (r[0].x2 + r[1].x2 + r[2].x2) / 3.0,
            (r[0].z + r[1].z + r[2].z) / 3.0,
        );
        match f.tag {
            BoundaryTag::Sside => {
                let rr = x.radius();
                x.x1 /= rr;
                x.x2 /= rr;
                c.check(x, Probe::Side);
            }
            _ => c.check(x, Probe::Cap),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xb4a1d);
    for _ in 0..1000 {
        let (x1, x2) = random_disc(&mut rng, 0.999);
        c.check(ReferencePoint::new(x1, x2, rng.gen()), Probe::Interior);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_field, FieldSpec};
    use crate::geometry::{build_domain, generate_mesh, DomainSpec};

    fn setup() -> (crate::geometry::TubularDomain, Mesh) {
        let d = build_domain(&DomainSpec::unit_cylinder()).unwrap();
        let m = generate_mesh(&d, 0.2).unwrap();
        (d, m)
    }

    #[test]
    fn twist_passes() {
        let (d, m) = setup();
        let f = make_field(&FieldSpec::UniformTwist { k: 2.0 }, &d, None).unwrap();
        let r = validate_braided(&f, &m);
        assert!(r.pass, "{:?}", r.violations.first());
        assert!(r.probes > 1000);
    }

    #[test]
    fn downward_field_fails_on_caps() {
        let (d, m) = setup();
        let f = BraidedField::from_fn(d, |_| Vec3::new(0.0, 0.0, -1.0));
        let r = validate_braided(&f, &m);
        assert!(!r.pass);
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::CapDirection));
        assert!(r.violations.iter().any(|v| v.reference.z == 0.0));
    }

    #[test]
    fn radial_field_fails_on_side() {
        let (d, m) = setup();
        let f = BraidedField::from_fn(d, |y| Vec3::new(y.x, y.y, 1.0));
        let r = validate_braided(&f, &m);
        assert!(!r.pass);
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::SideFlux));
    }

    #[test]
    fn zero_field_is_flagged() {
        let (d, m) = setup();
        let f = BraidedField::from_fn(d, |_| Vec3::zeros());
        let r = validate_braided(&f, &m);
        assert!(r.violations.iter().all(|v| v.kind == ViolationKind::Vanishing));
        assert_eq!(r.violations.len(), r.probes);
    }
}
