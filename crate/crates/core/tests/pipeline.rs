//! Traced-field properties on the straight cylinder: closed-form windings,
//! invariances, the gradient identity and helicity bookkeeping.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use windtube::fields::{Perturbation, Scale, TwistSegment};
use windtube::helicity::{check_solenoidal, flux_density, SOLENOIDAL_TOL};
use windtube::winding::trace_lines;
use windtube::*;

fn cyl() -> TubularDomain {
    build_domain(&DomainSpec::unit_cylinder()).unwrap()
}

fn twist(k: f64) -> BraidedField {
    make_field(&FieldSpec::UniformTwist { k }, &cyl(), None).unwrap()
}

fn small_grid() -> QuadratureGrid {
    QuadratureGrid::area_uniform(8).unwrap()
}

fn lv(field: &BraidedField, grid: &QuadratureGrid) -> WindingDistribution {
    let map = GeometricMap::new(cyl());
    field_line_winding(field, &map, grid, None, &TraceOptions::default()).unwrap()
}

#[test]
fn twist_distribution_is_disc_area_minus_own_cell() {
    // Every pair winds k/2π, and the node's own cell is excluded.
    let g = small_grid();
    let k = 1.7;
    let d = lv(&twist(k), &g);
    for (v, w) in d.values.iter().zip(&g.weights) {
        assert!((v - k / TAU * (PI - w)).abs() < 1e-7, "{v}");
    }
}

#[test]
fn opposite_twists_are_negatives() {
    let g = small_grid();
    let a = lv(&twist(2.0), &g);
    let b = lv(&twist(-2.0), &g);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x + y).abs() < 1e-10);
    }
}

#[test]
fn stacked_twists_add() {
    let (k1, k2) = (1.2, -3.1);
    let spec = FieldSpec::StackedTwist {
        segments: vec![TwistSegment { z0: 0.0, z1: 0.5, k: k1 }, TwistSegment { z0: 0.5, z1: 1.0, k: k2 }],
    };
    let f = make_field(&spec, &cyl(), None).unwrap();
    let map = GeometricMap::new(cyl());
    let pts = [[0.1, 0.2], [-0.5, 0.3], [0.7, -0.1], [0.0, -0.8]];
    let lines = trace_lines(&f, &map, &pts, &TraceOptions::default()).unwrap();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let l = pairwise_winding(&lines[i], &lines[j]).unwrap();
            assert!((l - (k1 + k2) / TAU).abs() < 1e-5, "{l}");
        }
    }
}

#[test]
fn unit_weight_reproduces_lv_bitwise_and_zero_weight_vanishes() {
    let g = small_grid();
    let f = twist(0.8);
    let map = GeometricMap::new(cyl());
    let opts = TraceOptions::default();
    let base = field_line_winding(&f, &map, &g, None, &opts).unwrap();
    let one = weighted_winding(&f, &map, &g, &WeightFunction::one(), None, &opts).unwrap();
    assert!(base.values.iter().zip(&one.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    let zero = weighted_winding(&f, &map, &g, &WeightFunction::zero(), None, &opts).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
}

#[test]
fn end_vanishing_isotopies_preserve_lv() {
    let g = small_grid();
    let base = lv(&twist(TAU), &g);
    for p in [
        Perturbation::Shift { epsilon: 0.3, direction: [1.0, 0.5] },
        Perturbation::Swirl { epsilon: 2.5 },
    ] {
        let moved = lv(&twist(TAU).perturbed(p), &g);
        assert!(moved.max_diff(&base).unwrap() < 1e-6, "{p:?}");
    }
}

#[test]
fn lv_ignores_magnitude() {
    let g = small_grid();
    let f = make_field(
        &FieldSpec::StackedTwist {
            segments: vec![TwistSegment { z0: 0.0, z1: 0.3, k: 2.0 }, TwistSegment { z0: 0.3, z1: 1.0, k: -0.5 }],
        },
        &cyl(),
        None,
    )
    .unwrap();
    // The scaled field takes different steps; at the kink that costs O(tol).
    let map = GeometricMap::new(cyl());
    let opts = TraceOptions { tol: 1e-11, ..TraceOptions::default() };
    let base = field_line_winding(&f, &map, &g, None, &opts).unwrap();
    let scaled = field_line_winding(&f.clone().scaled(Scale::Sine { amplitude: 0.7 }), &map, &g, None, &opts).unwrap();
    let e = scaled.max_diff(&base).unwrap();
    assert!(e < 1e-8, "{e}");
}

#[test]
fn mapping_of_twist_is_rotation() {
    let k = 2.3;
    let map = GeometricMap::new(cyl());
    let g = small_grid();
    for level in [0.0, 0.5, 1.0] {
        let m = field_line_mapping(&twist(k), &map, &g.nodes, level, &TraceOptions::default()).unwrap();
        let (s, c) = (k * level).sin_cos();
        for (x, y) in m.grid.iter().zip(&m.images) {
            let want = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
            assert!((y[0] - want[0]).hypot(y[1] - want[1]) < 1e-7);
        }
    }
}

#[test]
fn gradient_identity_for_harmonic_u() {
    let d = cyl();
    let map = EmbeddingMap::build(&d, 0.2, EmbeddingMode::Exact, TraceOptions::default()).unwrap();
    let u = make_field(&FieldSpec::HarmonicU, &d, Some(map.u())).unwrap();
    let g = QuadratureGrid::polar(6, 12).unwrap();
    let opts = TraceOptions::default();
    let l = field_line_winding(&u, &map, &g, None, &opts).unwrap();
    let f = field_line_mapping(&u, &map, &g.nodes, 1.0, &opts).unwrap();
    let r = gradient_identity_residual(&l, &f).unwrap();
    assert!(r.max < 1e-3, "{r:?}");
}

#[test]
fn gradient_identity_for_twist_is_own_cell_gradient() {
    // f*α − α = 0 and L_v = (k/2π)(π − w_i); with w_i = r_i h Δθ the only
    // residual is the radial derivative of the excluded cell, h Δθ k/2π.
    let (n_r, n_t, k) = (8, 16, 1.0);
    let g = QuadratureGrid::polar(n_r, n_t).unwrap();
    let map = GeometricMap::new(cyl());
    let opts = TraceOptions::default();
    let f = twist(k);
    let l = field_line_winding(&f, &map, &g, None, &opts).unwrap();
    let m = field_line_mapping(&f, &map, &g.nodes, 1.0, &opts).unwrap();
    let r = gradient_identity_residual(&l, &m).unwrap();
    let expect = k / TAU * TAU / n_t as f64 / n_r as f64;
    assert!((r.max - expect).abs() < 1e-6 && (r.rms - expect).abs() < 1e-6, "{r:?} {expect}");
    assert!(gradient_identity_residual(&lv(&f, &small_grid()), &m).is_err());
}

#[test]
fn helix_curve_maps_through_geometric_inverse() {
    let d = build_domain(&DomainSpec::unit_expanding()).unwrap();
    let map = GeometricMap::new(d.clone());
    let n = 2.0;
    let samples: Vec<_> = (0..=800)
        .map(|i| {
            let z = i as f64 / 800.0;
            let x = ReferencePoint::new(0.5 * (TAU * n * z).cos(), 0.5 * (TAU * n * z).sin(), z);
            windtube::tracing::Sample::new(d.embed(&x).0, z)
        })
        .collect();
    let axis: Vec<_> = (0..=4)
        .map(|i| {
            let z = i as f64 / 4.0;
            windtube::tracing::Sample::new(d.embed(&ReferencePoint::new(0.0, 0.0, z)).0, z)
        })
        .collect();
    let h = windtube::embedding::map_curve(&map, FieldLine::from_samples(samples, 0.0)).unwrap();
    let a = windtube::embedding::map_curve(&map, FieldLine::from_samples(axis, 0.0)).unwrap();
    assert!(h.is_monotone());
    let r = h.reference().unwrap();
    assert!(r.iter().all(|p| (p.radius() - 0.5).abs() < 1e-12));
    assert!((pairwise_winding(&h, &a).unwrap() - n).abs() < 1e-6);
}

fn helicity_setup(k: f64) -> (BraidedField, GeometricMap, Mesh, QuadratureGrid) {
    let d = cyl();
    let mesh = generate_mesh(&d, 0.25).unwrap();
    (twist(k), GeometricMap::new(d), mesh, small_grid())
}

#[test]
fn helicity_of_twist_and_independent_double_sum() {
    let (b, map, mesh, g) = helicity_setup(TAU);
    let opts = TraceOptions::default();
    let ab = helicity::field_line_helicity(&b, &map, &mesh, &g, None, &opts).unwrap();
    for (v, w) in ab.values.iter().zip(&g.weights) {
        assert!((v - (PI - w)).abs() < 1e-7);
    }
    let (j0, bz) = flux_density(&b, &map, &g).unwrap();
    let h = total_helicity(&ab, &bz, &j0).unwrap();
    // Direct double quadrature over all node pairs.
    let lines = trace_lines(&b, &map, &g.nodes, &opts).unwrap();
    let mut direct = 0.0;
    for i in 0..lines.len() {
        for j in 0..lines.len() {
            if i != j {
                direct += g.weights[i] * g.weights[j] * pairwise_winding(&lines[i], &lines[j]).unwrap();
            }
        }
    }
    assert!((h - direct).abs() < 1e-10 * direct.abs(), "{h} {direct}");
    assert!((h - PI * PI).abs() / (PI * PI) < 0.03);
}

#[test]
fn helicity_is_the_flux_weighted_winding() {
    let (b, map, mesh, g) = helicity_setup(1.3);
    let opts = TraceOptions::default();
    let ab = helicity::field_line_helicity(&b, &map, &mesh, &g, None, &opts).unwrap();
    let (j0, bz) = flux_density(&b, &map, &g).unwrap();
    let table: HashMap<[u64; 2], f64> =
        g.nodes.iter().enumerate().map(|(i, x)| ([x[0].to_bits(), x[1].to_bits()], j0[i] * bz[i])).collect();
    let w = WeightFunction::new(move |x| table[&[x[0].to_bits(), x[1].to_bits()]]);
    let wv = weighted_winding(&b, &map, &g, &w, None, &opts).unwrap();
    assert!(ab.values.iter().zip(&wv.values).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn doubling_b_doubles_helicity_but_not_winding() {
    let (b, map, mesh, g) = helicity_setup(2.0);
    let opts = TraceOptions::default();
    let b2 = b.clone().scaled(Scale::Constant { factor: 2.0 });
    let a1 = helicity::field_line_helicity(&b, &map, &mesh, &g, None, &opts).unwrap();
    let a2 = helicity::field_line_helicity(&b2, &map, &mesh, &g, None, &opts).unwrap();
    for (x, y) in a1.values.iter().zip(&a2.values) {
        assert!((y - 2.0 * x).abs() < 1e-12 * x.abs());
    }
    let l1 = field_line_winding(&b, &map, &g, None, &opts).unwrap();
    let l2 = field_line_winding(&b2, &map, &g, None, &opts).unwrap();
    assert!(l1.max_diff(&l2).unwrap() < 1e-12);
}

#[test]
fn mirrored_field_flips_total_helicity() {
    let opts = TraceOptions::default();
    let h = |k: f64| {
        let (b, map, mesh, g) = helicity_setup(k);
        let ab = helicity::field_line_helicity(&b, &map, &mesh, &g, None, &opts).unwrap();
        let (j0, bz) = flux_density(&b, &map, &g).unwrap();
        total_helicity(&ab, &bz, &j0).unwrap()
    };
    let (p, m) = (h(1.1), h(-1.1));
    assert!((p + m).abs() < 1e-12 * p.abs(), "{p} {m}");
}

#[test]
fn untwisted_field_has_no_helicity() {
    let (b, map, mesh, g) = helicity_setup(0.0);
    let ab = helicity::field_line_helicity(&b, &map, &mesh, &g, None, &TraceOptions::default()).unwrap();
    assert!(ab.values.iter().all(|v| *v == 0.0));
}

#[test]
fn helicity_refuses_compressible_field() {
    let d = cyl();
    let mesh = generate_mesh(&d, 0.25).unwrap();
    let b = BraidedField::from_fn(d.clone(), |y| Vec3::new(0.5 * y.x, 0.0, 1.0));
    let r = helicity::field_line_helicity(&b, &GeometricMap::new(d), &mesh, &small_grid(), None, &TraceOptions::default());
    assert!(matches!(r, Err(Error::NotSolenoidal { .. })), "{r:?}");
}

#[test]
fn recovered_u_divergence_refines() {
    // Nodal recovery is first order, so h·div/|u| of the interpolated u
    // decreases under refinement (observed ratio about 0.65 per halving).
    let d = build_domain(&DomainSpec::unit_expanding()).unwrap();
    let rms = |h: f64| {
        let mesh = Arc::new(generate_mesh(&d, h).unwrap());
        let phi = solve_phi(mesh.clone(), 1e-10).unwrap();
        let u = make_field(&FieldSpec::HarmonicU, &d, Some(&Arc::new(gradient_field(&phi, &d)))).unwrap();
        check_solenoidal(&u, &mesh, SOLENOIDAL_TOL).rms
    };
    let (coarse, fine) = (rms(0.25), rms(0.125));
    assert!(fine < 0.8 * coarse, "{coarse} {fine}");
}
