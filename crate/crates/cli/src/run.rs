use std::sync::Arc;

use serde_json::{json, Value};
use windtube::helicity::{field_line_helicity_tol, flux_density};
use windtube::io::{write_distribution_csv, write_field_lines_csv, write_vtk_boundary, write_vtk_volume};
use windtube::winding::trace_lines;
use windtube::*;

use crate::config::{Command, MapKind, RunConfig};
use crate::output::Outputs;
use crate::{verify, Failure};

/// Floor for the null audit of the harmonic field.
const NULL_FLOOR: f64 = 1e-3;

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let mut out = Outputs::new(&cfg.out);
    let result = match cfg.command {
        Command::Solve => solve(cfg, &mut out),
        Command::Trace => trace(cfg, &mut out),
        Command::Wind => wind(cfg, &mut out),
        Command::Helicity => helicity(cfg, &mut out),
        Command::Verify => verify::run(cfg, &mut out),
    };
    if result.is_err() {
        out.discard();
    }
    result
}

pub fn trace_options(cfg: &RunConfig) -> TraceOptions {
    TraceOptions::with_tol(cfg.tolerances.trace)
}

pub fn grid(cfg: &RunConfig) -> Result<QuadratureGrid, Failure> {
    match cfg.grid.n_theta {
        Some(m) => QuadratureGrid::polar(cfg.grid.n_r, m),
        None => QuadratureGrid::area_uniform(cfg.grid.n_r),
    }
    .map_err(Failure::at("grid"))
}

struct Solved {
    mesh: Arc<Mesh>,
    phi: Arc<ScalarFieldP1>,
    u: Arc<VectorFieldNodal>,
}

fn solve_harmonic(cfg: &RunConfig, domain: &TubularDomain) -> Result<Solved, Failure> {
    let mesh = Arc::new(generate_mesh(domain, cfg.resolution).map_err(Failure::at("mesh"))?);
    let phi = Arc::new(solve_phi(mesh.clone(), cfg.tolerances.solver).map_err(Failure::at("solve"))?);
    let u = Arc::new(gradient_field(&phi, domain));
    Ok(Solved { mesh, phi, u })
}

/// Everything a tracing command needs: the domain, a mesh, the map and the field.
pub struct Setup {
    pub mesh: Arc<Mesh>,
    pub map: Box<dyn ReferenceMap>,
    pub field: BraidedField,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, Failure> {
    let domain = build_domain(&cfg.domain).map_err(Failure::at("domain"))?;
    let (mesh, u, map): (Arc<Mesh>, Option<Arc<VectorFieldNodal>>, Box<dyn ReferenceMap>) = match cfg.map {
        MapKind::Harmonic | MapKind::HarmonicBulk => {
            let s = solve_harmonic(cfg, &domain)?;
            let surface = solve_surface_coords(&s.mesh, 0.0).map_err(Failure::at("solve"))?;
            let mode = if cfg.map == MapKind::Harmonic { EmbeddingMode::Exact } else { EmbeddingMode::Bulk };
            let map = EmbeddingMap::new(domain.clone(), s.phi, s.u.clone(), surface, mode, trace_options(cfg))
                .map_err(Failure::at("embed"))?;
            (s.mesh, Some(s.u), Box::new(map))
        }
        MapKind::Geometric if cfg.field.needs_mesh() => {
            let s = solve_harmonic(cfg, &domain)?;
            (s.mesh, Some(s.u), Box::new(GeometricMap::new(domain.clone())))
        }
        MapKind::Geometric => {
            let mesh = Arc::new(generate_mesh(&domain, cfg.resolution).map_err(Failure::at("mesh"))?);
            (mesh, None, Box::new(GeometricMap::new(domain.clone())))
        }
    };
    let field = make_field(&cfg.field, &domain, u.as_ref()).map_err(Failure::at("field"))?;
    let report = validate_braided(&field, &mesh);
    if !report.pass {
        return Err(Failure::validation(
            "field",
            format!(
                "{} of {} boundary probes violate the braided-field conditions; first: {:?}",
                report.violations.len(),
                report.probes,
                report.violations.first()
            ),
        ));
    }
    Ok(Setup { mesh, map, field })
}

fn solve(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    let domain = build_domain(&cfg.domain).map_err(Failure::at("domain"))?;
    let s = solve_harmonic(cfg, &domain)?;
    let audit = check_nonnull(&s.u, NULL_FLOOR);
    let u_mag: Vec<f64> = s.u.vectors.iter().map(|v| v.norm()).collect();
    write_vtk_volume(&out.file("mesh.vtk"), &s.mesh, &[("phi", &s.phi.values), ("u_mag", &u_mag)])
        .map_err(Failure::at("write"))?;
    write_vtk_boundary(&out.file("boundary.vtk"), &s.mesh).map_err(Failure::at("write"))?;
    if !audit.pass {
        return Err(Failure::validation(
            "solve",
            format!("harmonic field nearly vanishes: min/median |u| = {:e} < {:e}", audit.min_ratio, audit.floor),
        ));
    }
    println!(
        "solve: {} vertices, {} tetrahedra, CG {} iterations (residual {:e}), min/median |u| = {:.4}",
        s.mesh.vertices.len(),
        s.mesh.tets.len(),
        s.phi.solver.iterations,
        s.phi.solver.relative_residual,
        audit.min_ratio
    );
    out.sidecar(
        cfg,
        json!({
            "vertices": s.mesh.vertices.len(),
            "tetrahedra": s.mesh.tets.len(),
            "cg_iterations": s.phi.solver.iterations,
            "cg_relative_residual": s.phi.solver.relative_residual,
            "null_audit": { "min_ratio": audit.min_ratio, "median": audit.median, "floor": audit.floor },
        }),
    )
}

fn trace(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    let s = setup(cfg)?;
    let g = grid(cfg)?;
    let lines = trace_lines(&s.field, s.map.as_ref(), &g.nodes, &trace_options(cfg)).map_err(Failure::at("trace"))?;
    write_field_lines_csv(&out.file("lines.csv"), &lines).map_err(Failure::at("write"))?;
    let samples: usize = lines.iter().map(|l| l.samples.len()).sum();
    let reversing = lines.iter().filter(|l| !l.is_monotone()).count();
    println!("trace: {} lines, {samples} samples, {reversing} non-monotone", lines.len());
    out.sidecar(cfg, json!({ "lines": lines.len(), "samples": samples, "non_monotone": reversing }))
}

fn summary(d: &WindingDistribution) -> Value {
    let w = d.grid.total_weight();
    let mean = d.grid.weights.iter().zip(&d.values).map(|(w, v)| w * v).sum::<f64>() / w;
    json!({
        "kind": d.kind.name(),
        "nodes": d.values.len(),
        "min": d.values.iter().copied().fold(f64::INFINITY, f64::min),
        "max": d.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "weighted_mean": mean,
    })
}

fn wind(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    let s = setup(cfg)?;
    let g = grid(cfg)?;
    let d = field_line_winding(&s.field, s.map.as_ref(), &g, None, &trace_options(cfg)).map_err(Failure::at("wind"))?;
    write_distribution_csv(&out.file("lv.csv"), &d).map_err(Failure::at("write"))?;
    let sum = summary(&d);
    println!("wind: {} nodes, L_v in [{}, {}]", d.values.len(), sum["min"], sum["max"]);
    out.sidecar(cfg, json!({ "distribution": sum }))
}

fn helicity(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    let s = setup(cfg)?;
    let g = grid(cfg)?;
    let opts = trace_options(cfg);
    let map = s.map.as_ref();
    let div = check_solenoidal(&s.field, &s.mesh, cfg.tolerances.solenoidal);
    let ab = field_line_helicity_tol(&s.field, map, &s.mesh, &g, None, &opts, cfg.tolerances.solenoidal)
        .map_err(Failure::at("helicity"))?;
    let (j0, bz) = flux_density(&s.field, map, &g).map_err(Failure::at("helicity"))?;
    let h = total_helicity(&ab, &bz, &j0).map_err(Failure::at("helicity"))?;
    let flux: f64 = (0..g.len()).map(|i| g.weights[i] * j0[i] * bz[i]).sum();
    write_distribution_csv(&out.file("ab.csv"), &ab).map_err(Failure::at("write"))?;
    println!("helicity: H = {h}, flux = {flux}, divergence rms = {:e}", div.rms);
    out.sidecar(
        cfg,
        json!({
            "total_helicity": h,
            "flux": flux,
            "divergence": div,
            "distribution": summary(&ab),
        }),
    )
}
