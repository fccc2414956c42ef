use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windtube::geometry::Hint;
use windtube::tracing::{trace_to_level, Foliation};
use windtube::*;

fn cyl() -> TubularDomain {
    build_domain(&DomainSpec::unit_cylinder()).unwrap()
}

// S-curve fixture: v = (3, 0, 1 + 2cos 2πy1) from y1 = -0.3 gives
// z(y1) = [(y1 + 0.3) + (sin 2πy1 + sin 0.6π)/π] / 3, with a maximum at
// y1 = 1/3 and a minimum at y1 = 2/3.
fn s_height(y1: f64) -> f64 {
    ((y1 + 0.3) + ((TAU * y1).sin() + (0.6 * PI).sin()) / PI) / 3.0
}

#[test]
fn s_curve_turning_heights() {
    let d = cyl();
    let f = BraidedField::from_fn(d.clone(), |y| Vec3::new(3.0, 0.0, 1.0 + 2.0 * (TAU * y.x).cos()));
    let map = GeometricMap::new(d);
    let opts = TraceOptions::with_tol(1e-10);
    let samples = trace_to_level(&f, &map, Vec3::new(-0.3, 0.0, 0.0), 0.45, &opts).unwrap();
    let line = FieldLine::from_samples(samples, opts.tol);
    let sig: Vec<i8> = line.sections.iter().map(|s| s.sigma).collect();
    assert_eq!(sig, vec![1, -1, 1]);
    let top = line.samples[line.sections[0].end].z;
    let bottom = line.samples[line.sections[1].end].z;
    assert!((top - s_height(1.0 / 3.0)).abs() < 1e-8, "{top}");
    assert!((bottom - s_height(2.0 / 3.0)).abs() < 1e-8, "{bottom}");
    assert!((line.last().z - 0.45).abs() < 1e-10);
}

fn landing_error(tol: f64) -> f64 {
    let k = TAU;
    let f = make_field(&FieldSpec::UniformTwist { k }, &cyl(), None).unwrap();
    let map = GeometricMap::new(cyl());
    let start = map.cap_point(&[0.6, 0.0]).unwrap();
    let line = trace_field_line(&f, &map, &start, &TraceOptions::with_tol(tol)).unwrap();
    let y = line.last().y;
    (y - Vec3::new(0.6 * k.cos(), 0.6 * k.sin(), 1.0)).norm()
}

#[test]
fn landing_point_converges_with_tolerance() {
    let (loose, tight) = (landing_error(1e-5), landing_error(1e-10));
    assert!(tight < loose, "{loose} {tight}");
    assert!(tight < 1e-8, "{tight}");
}

/// The same leaves, traversed from S1 towards S0.
struct Flipped<'a>(&'a GeometricMap);

impl Foliation for Flipped<'_> {
    fn domain(&self) -> &TubularDomain {
        self.0.domain()
    }
    fn level(&self, y: &Vec3, hint: &mut Hint) -> windtube::Result<f64> {
        Ok(1.0 - self.0.level(y, hint)?)
    }
}

#[test]
fn tracing_is_reversible() {
    let d = build_domain(&DomainSpec::unit_expanding()).unwrap();
    let spec = FieldSpec::UniformTwist { k: 3.0 };
    let f = make_field(&spec, &d, None).unwrap();
    let g = f.clone();
    let back = BraidedField::from_fn(d.clone(), move |y| -g.eval(y, &mut Hint::default()).unwrap());
    let map = GeometricMap::new(d);
    let tol = 1e-9;
    let opts = TraceOptions::with_tol(tol);
    for x in [[0.0, 0.0], [0.4, -0.2], [-0.7, 0.5]] {
        let y0 = map.cap_point(&x).unwrap();
        let fwd = trace_field_line(&f, &map, &y0, &opts).unwrap();
        let rev = trace_to_level(&back, &Flipped(&map), fwd.last().y, 1.0, &opts).unwrap();
        let err = (rev.last().unwrap().y - y0.0).norm();
        assert!(err < 10.0 * tol, "{x:?}: {err}");
    }
}

#[test]
fn harmonic_level_increases_along_u() {
    let d = build_domain(&DomainSpec::unit_expanding()).unwrap();
    let map = EmbeddingMap::build(&d, 0.15, EmbeddingMode::Exact, TraceOptions::default()).unwrap();
    let u = make_field(&FieldSpec::HarmonicU, &d, Some(map.u())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let r = 0.9 * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..TAU);
        let z = rng.gen_range(0.05..0.95);
        let y = d.embed(&ReferencePoint::new(r * a.cos(), r * a.sin(), z)).0;
        let s = trace_to_level(&u, &map, y, 1.0, &TraceOptions::default()).unwrap();
        assert!(s.windows(2).all(|w| w[1].z > w[0].z), "not increasing from {y:?}");
        assert!(s.len() > 2);
    }
}
