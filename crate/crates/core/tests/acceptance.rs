//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use windtube::fields::{Perturbation, Scale, TwistRegion};
use windtube::helicity::{flux_density, potential_curl, potential_line_integral};
use windtube::winding::{trace_lines, GradientResidual};
use windtube::*;

type Outcome = Result<String, String>;
type Criterion = fn(&mut Ctx) -> Outcome;

struct Ctx {
    cyl: TubularDomain,
    twist: BraidedField,
    grid: QuadratureGrid,
    opts: TraceOptions,
    /// L_v of the k = 2π twist.
    lv_twist: Option<WindingDistribution>,
    /// Quadrature tolerance τ = max |L_v − π| measured in criterion 4.
    tau: Option<f64>,
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within(limit: Duration, t: Duration) -> Result<(), String> {
    if t <= limit {
        Ok(())
    } else {
        Err(format!("runtime {:.1}s exceeds {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn c1_oracle(_: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for r in [0.0, 0.3, 0.5, 0.9] {
        for t in [0.0, PI / 3.0] {
            let a = appendix_b_oracle(r, t, 512).map_err(e)?;
            worst = worst.max(a.radial.abs()).max((a.angular_unit - r / 2.0).abs());
        }
    }
    within(Duration::from_secs(1), start.elapsed())?;
    check(worst < 1e-3, format!("max deviation from (0, r/2) = {worst:.2e} (tol 1e-3)"))
}

fn c2_harmonic(ctx: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let mesh = Arc::new(generate_mesh(&ctx.cyl, 0.1).map_err(e)?);
    let phi = solve_phi(mesh.clone(), 1e-10).map_err(e)?;
    let u = gradient_field(&phi, &ctx.cyl);
    let dphi = mesh.vertices.iter().zip(&phi.values).fold(0.0f64, |m, (p, v)| m.max((v - p.z).abs()));
    let du = u.vectors.iter().fold(0.0f64, |m, v| m.max((v - Vec3::z()).norm()));
    within(Duration::from_secs(10), start.elapsed())?;
    check(
        dphi < 1e-8 && du < 1e-6,
        format!("max |φ − z| = {dphi:.2e} (tol 1e-8), max |u − ẑ| = {du:.2e} (tol 1e-6), {} vertices", mesh.vertices.len()),
    )
}

fn harmonic_map(domain: &TubularDomain, opts: TraceOptions) -> Result<(EmbeddingMap, BraidedField), String> {
    let map = EmbeddingMap::build(domain, 0.1, EmbeddingMode::Exact, opts).map_err(e)?;
    let u = make_field(&FieldSpec::HarmonicU, domain, Some(map.u())).map_err(e)?;
    Ok((map, u))
}

fn c3_zero_winding(ctx: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let grid = QuadratureGrid::area_uniform(16).map_err(e)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in [
        ("cylinder", DomainSpec::unit_cylinder()),
        ("expanding", DomainSpec::unit_expanding()),
        ("quarter-arc", DomainSpec::quarter_arc(2.0, 0.5)),
    ] {
        let d = build_domain(&spec).map_err(e)?;
        let (map, u) = harmonic_map(&d, ctx.opts)?;
        let lv = field_line_winding(&u, &map, &grid, None, &ctx.opts).map_err(|x| format!("{name}: {x}"))?;
        let m = lv.max_abs();
        ok &= m <= 1e-3;
        parts.push(format!("{name} {m:.2e}"));
    }
    within(Duration::from_secs(300), start.elapsed())?;
    check(ok, format!("max |L_v(u)|: {} (tol 1e-3, {} nodes)", parts.join(", "), grid.len()))
}

fn c4_twist(ctx: &mut Ctx) -> Outcome {
    let start = Instant::now();
    let map = GeometricMap::new(ctx.cyl.clone());
    let lines = trace_lines(&ctx.twist, &map, &ctx.grid.nodes, &ctx.opts).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pair_err = 0.0f64;
    for _ in 0..500 {
        let i = rng.gen_range(0..lines.len());
        let j = rng.gen_range(0..lines.len());
        if i != j {
            pair_err = pair_err.max((pairwise_winding(&lines[i], &lines[j]).map_err(e)? - 1.0).abs());
        }
    }
    let lv = field_line_winding(&ctx.twist, &map, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let lv_err = lv.values.iter().fold(0.0f64, |m, v| m.max((v - PI).abs()));
    let mesh = generate_mesh(&ctx.cyl, 0.2).map_err(e)?;
    let ab = helicity::field_line_helicity(&ctx.twist, &map, &mesh, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let ab_err = ab.values.iter().fold(0.0f64, |m, v| m.max((v - PI).abs()));
    let (j0, bz) = flux_density(&ctx.twist, &map, &ctx.grid).map_err(e)?;
    let h = total_helicity(&ab, &bz, &j0).map_err(e)?;
    let h_err = (h - PI * PI).abs() / (PI * PI);
    ctx.tau = Some(lv_err);
    ctx.lv_twist = Some(lv);
    within(Duration::from_secs(120), start.elapsed())?;
    check(
        pair_err < 1e-5 && lv_err / PI < 0.02 && ab_err / PI < 0.02 && h_err < 0.03,
        format!(
            "pair |L − 1| ≤ {pair_err:.1e}, L_v rel {:.2e}, A_b rel {:.2e}, H = {h:.5} (rel {h_err:.2e})",
            lv_err / PI,
            ab_err / PI
        ),
    )
}

fn tau(ctx: &Ctx) -> Result<(f64, &WindingDistribution), String> {
    match (ctx.tau, &ctx.lv_twist) {
        (Some(t), Some(lv)) => Ok((t, lv)),
        _ => Err("criterion 4 did not produce a quadrature tolerance".into()),
    }
}

fn c5_isotopy(ctx: &mut Ctx) -> Outcome {
    let (tau, base) = tau(ctx)?;
    let spec = FieldSpec::Perturbed {
        base: Box::new(FieldSpec::UniformTwist { k: TAU }),
        perturbation: Perturbation::Shift {
            epsilon: 0.3,
            direction: [1.0, 0.5],
        },
    };
    let f = make_field(&spec, &ctx.cyl, None).map_err(e)?;
    let map = GeometricMap::new(ctx.cyl.clone());
    let lv = field_line_winding(&f, &map, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let d = lv.max_diff(base).map_err(e)?;
    check(d <= 3.0 * tau, format!("max |ΔL_v| = {d:.2e}, 3τ = {:.2e}", 3.0 * tau))
}

fn c6_magnitude(ctx: &mut Ctx) -> Outcome {
    let (_, base) = tau(ctx)?;
    let map = GeometricMap::new(ctx.cyl.clone());
    let mut diffs = Vec::new();
    for s in [Scale::Constant { factor: 5.0 }, Scale::Sine { amplitude: 0.5 }] {
        let f = ctx.twist.clone().scaled(s);
        let lv = field_line_winding(&f, &map, &ctx.grid, None, &ctx.opts).map_err(e)?;
        diffs.push(lv.max_diff(base).map_err(e)?);
    }
    let mesh = generate_mesh(&ctx.cyl, 0.2).map_err(e)?;
    let ab1 = helicity::field_line_helicity(&ctx.twist, &map, &mesh, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let doubled = ctx.twist.clone().scaled(Scale::Constant { factor: 2.0 });
    let ab2 = helicity::field_line_helicity(&doubled, &map, &mesh, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let rel = ab1
        .values
        .iter()
        .zip(&ab2.values)
        .fold(0.0f64, |m, (a, b)| m.max((b / a - 2.0).abs() / 2.0));
    check(
        diffs.iter().all(|d| *d < 1e-4) && rel < 1e-6,
        format!(
            "max |ΔL_v| for 5v: {:.2e}, for (1 + 0.5 sin πz)v: {:.2e} (tol 1e-4); A_b(2b)/A_b(b) rel err {rel:.2e} (tol 1e-6)",
            diffs[0], diffs[1]
        ),
    )
}

/// Order of `RMS ~ h^p` from a least-squares fit in log–log.
fn fitted_order(h: &[f64], v: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn composite(domain: &TubularDomain) -> Result<BraidedField, String> {
    let spec = FieldSpec::BraidComposite {
        regions: vec![
            TwistRegion {
                center: [0.3, 0.0],
                radius: 0.6,
                k: 2.0,
                z0: 0.0,
                z1: 0.5,
            },
            TwistRegion {
                center: [-0.3, 0.0],
                radius: 0.6,
                k: -1.5,
                z0: 0.5,
                z1: 1.0,
            },
        ],
    };
    make_field(&spec, domain, None).map_err(e)
}

fn c7_gradient_identity(ctx: &mut Ctx) -> Outcome {
    let f = composite(&ctx.cyl)?;
    let map = GeometricMap::new(ctx.cyl.clone());
    let mut hs = Vec::new();
    let mut rms = Vec::new();
    let mut parts = Vec::new();
    for n_r in [12usize, 24, 48] {
        let grid = QuadratureGrid::polar(n_r, 2 * n_r).map_err(e)?;
        let lv = field_line_winding(&f, &map, &grid, None, &ctx.opts).map_err(e)?;
        let fmap = field_line_mapping(&f, &map, &grid.nodes, 1.0, &ctx.opts).map_err(e)?;
        let GradientResidual { rms: r, max, .. } = gradient_identity_residual(&lv, &fmap).map_err(e)?;
        hs.push(grid.spacing());
        rms.push(r);
        parts.push(format!("n_r={n_r}: rms {r:.2e} max {max:.2e}"));
    }
    let p = fitted_order(&hs, &rms);
    check(p >= 1.5, format!("observed order {p:.2} (need ≥ 1.5); {}", parts.join(", ")))
}

fn c8_separation(ctx: &mut Ctx) -> Outcome {
    let (tau, base) = tau(ctx)?;
    let map = GeometricMap::new(ctx.cyl.clone());
    let rebraided = ctx.twist.clone().perturbed(Perturbation::Swirl { epsilon: 2.0 });
    let same = field_line_winding(&rebraided, &map, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let d_same = same.max_diff(base).map_err(e)?;
    let other = make_field(&FieldSpec::UniformTwist { k: TAU + 0.2 * PI }, &ctx.cyl, None).map_err(e)?;
    let diff = field_line_winding(&other, &map, &ctx.grid, None, &ctx.opts).map_err(e)?;
    let d_other = diff.max_diff(base).map_err(e)?;
    check(
        d_same <= 3.0 * tau && d_other > 10.0 * tau,
        format!(
            "same f(1): {d_same:.2e} (≤ 3τ = {:.2e}); k + 0.2π: {d_other:.2e} (> 10τ = {:.2e})",
            3.0 * tau,
            10.0 * tau
        ),
    )
}

fn c9_gauge(ctx: &mut Ctx) -> Outcome {
    let map = GeometricMap::new(ctx.cyl.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let probes: Vec<[f64; 2]> = (0..20)
        .map(|_| {
            let r = 0.9 * rng.gen::<f64>().sqrt();
            let a = TAU * rng.gen::<f64>();
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let mesh = generate_mesh(&ctx.cyl, 0.2).map_err(e)?;
    let ab = helicity::field_line_helicity(&ctx.twist, &map, &mesh, &ctx.grid, Some(&probes), &ctx.opts).map_err(e)?;
    let lines = trace_lines(&ctx.twist, &map, &probes, &ctx.opts).map_err(e)?;
    let mut line_err = 0.0f64;
    for (line, a) in lines.iter().zip(&ab.values) {
        let integral = potential_line_integral(&ctx.twist, line, 128).map_err(e)?;
        line_err = line_err.max((integral - a).abs() / a.abs());
    }
    let mut curl_err = 0.0f64;
    for p in probes.iter().take(10) {
        let x = ReferencePoint::new(0.7 * p[0], 0.7 * p[1], rng.gen_range(0.2..0.8));
        let c = potential_curl(&ctx.twist, &x, 128, 1e-3).map_err(e)?;
        let b = ctx.twist.eval_reference(&x, &mut Default::default()).map_err(e)?;
        curl_err = curl_err.max((c - b).norm() / b.norm());
    }
    check(
        line_err < 0.01 && curl_err < 5e-3,
        format!("∫a·dl vs A_b rel {line_err:.2e} (tol 1e-2); curl a vs b rel {curl_err:.2e} (tol 5e-3)"),
    )
}

fn c10_null_audit(_: &mut Ctx) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in [
        ("cylinder", DomainSpec::unit_cylinder()),
        ("expanding", DomainSpec::unit_expanding()),
        ("quarter-arc", DomainSpec::quarter_arc(2.0, 0.5)),
    ] {
        let d = build_domain(&spec).map_err(e)?;
        let mesh = Arc::new(generate_mesh(&d, 0.1).map_err(e)?);
        let phi = solve_phi(mesh, 1e-10).map_err(e)?;
        let u = gradient_field(&phi, &d);
        let r = check_nonnull(&u, 1e-3);
        ok &= r.pass;
        parts.push(format!("{name} min ratio {:.3}", r.min_ratio));
    }
    check(ok, format!("{} (floor 1e-3)", parts.join(", ")))
}

fn main() {
    let cyl = build_domain(&DomainSpec::unit_cylinder()).expect("unit cylinder");
    let twist = make_field(&FieldSpec::UniformTwist { k: TAU }, &cyl, None).expect("twist field");
    let mut ctx = Ctx {
        cyl,
        twist,
        grid: QuadratureGrid::area_uniform(24).expect("grid"),
        opts: TraceOptions::default(),
        lv_twist: None,
        tau: None,
    };
    let criteria: [(&str, Criterion); 10] = [
        ("angle-gradient oracle", c1_oracle),
        ("harmonic exactness", c2_harmonic),
        ("zero winding of u", c3_zero_winding),
        ("twist closed form", c4_twist),
        ("isotopy invariance", c5_isotopy),
        ("magnitude invariance", c6_magnitude),
        ("gradient identity order", c7_gradient_identity),
        ("mapping separation", c8_separation),
        ("winding-gauge consistency", c9_gauge),
        ("null audit", c10_null_audit),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        // Criteria 5, 6 and 8 reuse the twist distribution from criterion 4.
        if only.is_some_and(|o| o != n && !(n == 4 && [5, 6, 8].contains(&o))) {
            continue;
        }
        let start = Instant::now();
        let r = f(&mut ctx);
        let t = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS [{n:>2}] {name}: {msg} ({t:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{n:>2}] {name}: {msg} ({t:.1}s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
