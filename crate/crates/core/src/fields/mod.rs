//! Braided vector fields on tubular domains.
//!
//! Analytic generators are written in reference coordinates as
//! `dx/dz = w(x, z)`, i.e. the reference-space field `(w, 1)`, and pushed
//! forward through the domain jacobian. Side tangency then holds by
//! construction whenever `w` is tangent to the unit circle at `r = 1`.

mod perturb;
mod validate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Hint, Mesh, ReferencePoint, TubularDomain};
use crate::harmonic::VectorFieldNodal;
use crate::Vec3;

pub use perturb::Perturbation;
pub use validate::{validate_analytic, validate_braided, ValidationReport, Violation, ViolationKind};

/// Twist by a total angle `k` about the axis, spread uniformly over `z0..z1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSegment {
    pub z0: f64,
    pub z1: f64,
    pub k: f64,
}

/// Localized rotation about `center`: a line at distance `d` from the centre
/// turns by `k (1 - d²/ρ²)²` over `z0..z1`, lines with `d ≥ ρ` stay put.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistRegion {
    pub center: [f64; 2],
    pub radius: f64,
    pub k: f64,
    pub z0: f64,
    pub z1: f64,
}

/// Positive rescaling `λ(y) v(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Scale {
    Constant { factor: f64 },
    /// `λ = 1 + amplitude · sin(π z)` in reference height.
    Sine { amplitude: f64 },
}

impl Scale {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Scale::Constant { factor } => factor,
            Scale::Sine { amplitude } => 1.0 + amplitude * (std::f64::consts::PI * z).sin(),
        }
    }
}

/// Declarative field description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSpec {
    HarmonicU,
    /// Rigid rotation by total angle `k` over the tube.
    UniformTwist { k: f64 },
    StackedTwist { segments: Vec<TwistSegment> },
    BraidComposite { regions: Vec<TwistRegion> },
    Perturbed {
        base: Box<FieldSpec>,
        perturbation: Perturbation,
    },
    Scaled { base: Box<FieldSpec>, scale: Scale },
    /// CSV rows `vertex,v1,v2,v3` on the solve mesh.
    MeshSampled { path: PathBuf },
}

impl FieldSpec {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldSpec::HarmonicU => FieldKind::HarmonicU,
            FieldSpec::UniformTwist { .. } | FieldSpec::StackedTwist { .. } => FieldKind::UniformTwist,
            FieldSpec::BraidComposite { .. } => FieldKind::BraidComposite,
            FieldSpec::Perturbed { .. } => FieldKind::Perturbed,
            FieldSpec::Scaled { base, .. } => base.kind(),
            FieldSpec::MeshSampled { .. } => FieldKind::MeshSampled,
        }
    }

    /// True when the field needs the solved mesh.
    pub fn needs_mesh(&self) -> bool {
        match self {
            FieldSpec::HarmonicU | FieldSpec::MeshSampled { .. } => true,
            FieldSpec::Perturbed { base, .. } | FieldSpec::Scaled { base, .. } => base.needs_mesh(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    HarmonicU,
    UniformTwist,
    BraidComposite,
    Perturbed,
    MeshSampled,
    Custom,
}

/// In-plane reference velocity `w(x, z)` of a vertical generator.
#[derive(Debug, Clone)]
enum Generator {
    Twist(Vec<TwistSegment>),
    Regions(Vec<TwistRegion>),
}

impl Generator {
    fn velocity(&self, x: [f64; 2], z: f64) -> [f64; 2] {
        match self {
            Generator::Twist(segs) => {
                let rate: f64 = segs
                    .iter()
                    .filter(|s| in_range(z, s.z0, s.z1))
                    .map(|s| s.k / (s.z1 - s.z0))
                    .sum();
                [-rate * x[1], rate * x[0]]
            }
            Generator::Regions(regions) => {
                let mut w = [0.0, 0.0];
                for g in regions {
                    if !in_range(z, g.z0, g.z1) {
                        continue;
                    }
                    let dx = [x[0] - g.center[0], x[1] - g.center[1]];
                    let s2 = (dx[0] * dx[0] + dx[1] * dx[1]) / (g.radius * g.radius);
                    if s2 >= 1.0 {
                        continue;
                    }
                    let span = g.z1 - g.z0;
                    let profile = std::f64::consts::FRAC_PI_2 / span
                        * (std::f64::consts::PI * (z - g.z0) / span).sin();
                    let omega = g.k * (1.0 - s2).powi(2) * profile;
                    w[0] -= omega * dx[1];
                    w[1] += omega * dx[0];
                }
                w
            }
        }
    }
}

fn in_range(z: f64, z0: f64, z1: f64) -> bool {
    // Half-open so stacked segments never double count, closed at the top cap.
    (z >= z0 && z < z1) || (z1 >= 1.0 && z >= z1)
}

type CustomFn = Arc<dyn Fn(&Vec3) -> Vec3 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Vertical(Generator),
    Nodal(Arc<VectorFieldNodal>),
    Perturbed(Box<BraidedField>, Perturbation),
    Scaled(Box<BraidedField>, Scale),
    Custom(CustomFn),
}

/// An evaluable field on a tubular domain.
#[derive(Clone)]
pub struct BraidedField {
    domain: TubularDomain,
    kind: FieldKind,
    spec: Option<FieldSpec>,
    repr: Repr,
}

impl fmt::Debug for BraidedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BraidedField")
            .field("kind", &self.kind)
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl BraidedField {
    /// Wraps an arbitrary closure; used for fixtures that are not braided.
    pub fn from_fn(domain: TubularDomain, f: impl Fn(&Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        BraidedField {
            domain,
            kind: FieldKind::Custom,
            spec: None,
            repr: Repr::Custom(Arc::new(f)),
        }
    }

    /// Field given by nodal values on a mesh.
    pub fn nodal(domain: TubularDomain, kind: FieldKind, u: Arc<VectorFieldNodal>) -> Self {
        BraidedField {
            domain,
            kind,
            spec: None,
            repr: Repr::Nodal(u),
        }
    }

    pub fn domain(&self) -> &TubularDomain {
        &self.domain
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn spec(&self) -> Option<&FieldSpec> {
        self.spec.as_ref()
    }

    /// True when evaluation involves mesh interpolation.
    pub fn is_mesh_backed(&self) -> bool {
        match &self.repr {
            Repr::Nodal(_) => true,
            Repr::Perturbed(b, _) | Repr::Scaled(b, _) => b.is_mesh_backed(),
            _ => false,
        }
    }

    pub fn scaled(self, scale: Scale) -> Self {
        let spec = self.spec.clone().map(|s| FieldSpec::Scaled {
            base: Box::new(s),
            scale,
        });
        BraidedField {
            domain: self.domain.clone(),
            kind: self.kind,
            spec,
            repr: Repr::Scaled(Box::new(self), scale),
        }
    }

    pub fn perturbed(self, p: Perturbation) -> Self {
        let spec = self.spec.clone().map(|s| FieldSpec::Perturbed {
            base: Box::new(s),
            perturbation: p,
        });
        BraidedField {
            domain: self.domain.clone(),
            kind: FieldKind::Perturbed,
            spec,
            repr: Repr::Perturbed(Box::new(self), p),
        }
    }

    pub fn eval(&self, y: &Vec3, hint: &mut Hint) -> Result<Vec3> {
        match &self.repr {
            Repr::Vertical(g) => {
                let x = self.domain.inverse(y);
                let w = g.velocity([x.x1, x.x2], x.z);
                Ok(self.domain.jacobian(&x) * Vec3::new(w[0], w[1], 1.0))
            }
            Repr::Nodal(u) => u.eval(y, hint),
            Repr::Perturbed(base, p) => {
                let xp = self.domain.inverse(y);
                if p.strength(xp.z) == 0.0 {
                    return base.eval(y, hint);
                }
                let x = p.inverse(&xp);
                let y0 = self.domain.embed(&x);
                let v0 = base.eval(&y0, hint)?;
                let w0 = self
                    .domain
                    .jacobian(&x)
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidField("singular domain jacobian".into()))?
                    * v0;
                Ok(self.domain.jacobian(&xp) * (p.jacobian(&x) * w0))
            }
            Repr::Scaled(base, s) => {
                let z = self.domain.inverse(y).z;
                Ok(s.eval(z) * base.eval(y, hint)?)
            }
            Repr::Custom(f) => Ok(f(y)),
        }
    }

    /// Evaluates at a reference point.
    pub fn eval_reference(&self, x: &ReferencePoint, hint: &mut Hint) -> Result<Vec3> {
        self.eval(&self.domain.embed(x).0, hint)
    }
}

/// Builds a field from its descriptor.
///
/// `u` is the solved harmonic field; it is required by mesh-based kinds.
/// Analytic results are validated at boundary probes before returning.
pub fn make_field(spec: &FieldSpec, domain: &TubularDomain, u: Option<&Arc<VectorFieldNodal>>) -> Result<BraidedField> {
    let field = build(spec, domain, u)?;
    let report = validate_analytic(&field, 1000, 0x5eed);
    if let Some(v) = report.violations.first() {
        return Err(Error::InvalidField(format!("{} (first of {} violations)", v, report.violations.len())));
    }
    Ok(field)
}

fn build(spec: &FieldSpec, domain: &TubularDomain, u: Option<&Arc<VectorFieldNodal>>) -> Result<BraidedField> {
    let need_u = || {
        u.cloned()
            .ok_or_else(|| Error::InvalidField("field kind needs the solved harmonic field".into()))
    };
    let vertical = |g: Generator| BraidedField {
        domain: domain.clone(),
        kind: spec.kind(),
        spec: Some(spec.clone()),
        repr: Repr::Vertical(g),
    };
    let f = match spec {
        FieldSpec::HarmonicU => BraidedField {
            spec: Some(spec.clone()),
            ..BraidedField::nodal(domain.clone(), FieldKind::HarmonicU, need_u()?)
        },
        FieldSpec::UniformTwist { k } => {
            check_finite(*k, "twist k")?;
            vertical(Generator::Twist(vec![TwistSegment { z0: 0.0, z1: 1.0, k: *k }]))
        }
        FieldSpec::StackedTwist { segments } => {
            for s in segments {
                check_finite(s.k, "segment k")?;
                if !(0.0 <= s.z0 && s.z0 < s.z1 && s.z1 <= 1.0) {
                    return Err(Error::InvalidField(format!("bad segment range {}..{}", s.z0, s.z1)));
                }
            }
            vertical(Generator::Twist(segments.clone()))
        }
        FieldSpec::BraidComposite { regions } => {
            for g in regions {
                check_finite(g.k, "region k")?;
                let c = g.center[0].hypot(g.center[1]);
                if !(g.radius > 0.0) || c + g.radius > 1.0 {
                    return Err(Error::InvalidField(format!(
                        "twist region at {:?} with radius {} leaves the unit disc",
                        g.center, g.radius
                    )));
                }
                if !(0.0 <= g.z0 && g.z0 < g.z1 && g.z1 <= 1.0) {
                    return Err(Error::InvalidField(format!("bad region range {}..{}", g.z0, g.z1)));
                }
            }
            vertical(Generator::Regions(regions.clone()))
        }
        FieldSpec::Perturbed { base, perturbation } => {
            perturbation.validate()?;
            let mut f = build(base, domain, u)?.perturbed(*perturbation);
            f.spec = Some(spec.clone());
            f
        }
        FieldSpec::Scaled { base, scale } => {
            let ok = match *scale {
                Scale::Constant { factor } => factor > 0.0 && factor.is_finite(),
                Scale::Sine { amplitude } => amplitude.abs() < 1.0,
            };
            if !ok {
                return Err(Error::InvalidField(format!("scale {scale:?} is not positive")));
            }
            let mut f = build(base, domain, u)?.scaled(*scale);
            f.spec = Some(spec.clone());
            f
        }
        FieldSpec::MeshSampled { path } => {
            let u = need_u()?;
            let vectors = read_nodal_csv(path, &u.mesh)?;
            let nodal = VectorFieldNodal::with_locator(u.mesh.clone(), u.locator.clone(), vectors);
            BraidedField {
                spec: Some(spec.clone()),
                ..BraidedField::nodal(domain.clone(), FieldKind::MeshSampled, Arc::new(nodal))
            }
        }
    };
    Ok(f)
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidField(format!("{what} must be finite")))
    }
}

/// Reads `vertex,v1,v2,v3` rows; every mesh vertex must appear exactly once.
pub fn read_nodal_csv(path: &Path, mesh: &Mesh) -> Result<Vec<Vec3>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let n = mesh.vertices.len();
    let mut out: Vec<Option<Vec3>> = vec![None; n];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        // Tolerate a header row.
        if line == 0 && rec.get(0).is_some_and(|s| s.parse::<usize>().is_err()) {
            continue;
        }
        if rec.len() != 4 {
            return Err(Error::Parse(format!("row {}: expected 4 columns", line + 1)));
        }
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))
        };
        let v: usize = rec[0]
            .parse()
            .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
        if v >= n {
            return Err(Error::Parse(format!("row {}: vertex {v} out of range", line + 1)));
        }
        if out[v].replace(Vec3::new(num(1)?, num(2)?, num(3)?)).is_some() {
            return Err(Error::Parse(format!("vertex {v} given twice")));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::Parse(format!("vertex {i} missing"))))
        .collect()
}

/// Scalar weight on the lower cap, `w: D0 → R`.
#[derive(Clone)]
pub struct WeightFunction(Arc<WeightFn>);

type WeightFn = dyn Fn(&[f64; 2]) -> f64 + Send + Sync;

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("WeightFunction")
    }
}

impl WeightFunction {
    pub fn new(f: impl Fn(&[f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction(Arc::new(f))
    }

    pub fn one() -> Self {
        Self::new(|_| 1.0)
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0)
    }

    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        (self.0)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainSpec};
    use std::f64::consts::PI;

    fn cyl() -> TubularDomain {
        build_domain(&DomainSpec::unit_cylinder()).unwrap()
    }

    #[test]
    fn uniform_twist_formula() {
        let f = make_field(&FieldSpec::UniformTwist { k: 2.0 * PI }, &cyl(), None).unwrap();
        let v = f.eval(&Vec3::new(0.5, 0.0, 0.3), &mut Hint::default()).unwrap();
        assert!((v - Vec3::new(0.0, PI, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn twist_on_curved_tube_is_tangent_to_side() {
        let d = build_domain(&DomainSpec::quarter_arc(2.0, 0.2)).unwrap();
        let f = make_field(&FieldSpec::UniformTwist { k: 3.0 }, &d, None).unwrap();
        for i in 0..50 {
            let a = i as f64 * 0.37;
            let x = ReferencePoint::new(a.cos(), a.sin(), (i as f64 / 50.0).fract());
            let v = f.eval_reference(&x, &mut Hint::default()).unwrap();
            assert!(v.dot(&d.side_normal(&x)).abs() < 1e-12 * v.norm());
        }
    }

    #[test]
    fn perturbation_vanishes_on_caps() {
        let d = cyl();
        let base = make_field(&FieldSpec::UniformTwist { k: 1.0 }, &d, None).unwrap();
        for p in [
            Perturbation::Shift { epsilon: 0.3, direction: [1.0, 0.5] },
            Perturbation::Swirl { epsilon: 2.0 },
        ] {
            let f = base.clone().perturbed(p);
            for &z in &[0.0, 1.0] {
                for i in 0..20 {
                    let a = i as f64;
                    let y = Vec3::new(0.6 * a.cos(), 0.6 * a.sin(), z);
                    let mut h = Hint::default();
                    assert_eq!(f.eval(&y, &mut h).unwrap(), base.eval(&y, &mut h).unwrap());
                }
            }
            let y = Vec3::new(0.3, 0.1, 0.3);
            let mut h = Hint::default();
            assert!((f.eval(&y, &mut h).unwrap() - base.eval(&y, &mut h).unwrap()).norm() > 1e-3);
        }
    }

    #[test]
    fn rejects_regions_leaving_the_disc() {
        let spec = FieldSpec::BraidComposite {
            regions: vec![TwistRegion { center: [0.6, 0.0], radius: 0.5, k: 1.0, z0: 0.0, z1: 1.0 }],
        };
        assert!(make_field(&spec, &cyl(), None).is_err());
    }

    #[test]
    fn harmonic_kind_requires_solution() {
        assert!(make_field(&FieldSpec::HarmonicU, &cyl(), None).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml_friendly_serde() {
        let spec = FieldSpec::Perturbed {
            base: Box::new(FieldSpec::UniformTwist { k: 1.5 }),
            perturbation: Perturbation::Shift { epsilon: 0.1, direction: [1.0, 0.0] },
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<FieldSpec>(&s).unwrap(), spec);
    }
}
