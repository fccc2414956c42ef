//! Built-in oracle suite: closed forms that any build must reproduce.

use std::f64::consts::{PI, TAU};

use serde::Serialize;
use serde_json::json;
use windtube::winding::trace_lines;
use windtube::*;

use crate::config::{MapKind, RunConfig};
use crate::output::Outputs;
use crate::run::{grid, setup, trace_options};
use crate::Failure;

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, pass: value <= limit }
}

/// Largest deviation of the averaged angle gradient from `(0, r/2)`.
fn oracle() -> Result<Check, Failure> {
    let mut dev: f64 = 0.0;
    for r in [0.0, 0.3, 0.5, 0.9] {
        for theta in [0.0, PI / 3.0] {
            let a = appendix_b_oracle(r, theta, 256).map_err(Failure::at("verify"))?;
            dev = dev.max(a.radial.abs()).max((a.angular_unit - 0.5 * r).abs());
        }
    }
    Ok(check("angle-gradient oracle |dev|", dev, 1e-3))
}

fn twist_config(cfg: &RunConfig, k: f64) -> RunConfig {
    RunConfig {
        domain: DomainSpec::unit_cylinder(),
        field: FieldSpec::UniformTwist { k },
        map: MapKind::Geometric,
        ..cfg.clone()
    }
}

/// Pairwise winding 1 and L_v = π for a full twist on the unit cylinder.
fn twist(cfg: &RunConfig) -> Result<[Check; 2], Failure> {
    let c = twist_config(cfg, TAU);
    let s = setup(&c)?;
    let g = grid(&c)?;
    let opts = trace_options(&c);
    let step = (g.len() / 12).max(1);
    let probes: Vec<[f64; 2]> = g.nodes.iter().step_by(step).copied().collect();
    let lines = trace_lines(&s.field, s.map.as_ref(), &probes, &opts).map_err(Failure::at("verify"))?;
    let mut pair_dev: f64 = 0.0;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let l = pairwise_winding(&lines[i], &lines[j]).map_err(Failure::at("verify"))?;
            pair_dev = pair_dev.max((l - 1.0).abs());
        }
    }
    let d = field_line_winding(&s.field, s.map.as_ref(), &g, None, &opts).map_err(Failure::at("verify"))?;
    let lv_dev = d.values.iter().map(|v| (v - PI).abs() / PI).fold(0.0, f64::max);
    Ok([check("twist pairwise |L - 1|", pair_dev, 1e-5), check("twist L_v rel. error", lv_dev, 0.02)])
}

/// The harmonic field winds around nothing on the configured domain.
fn zero_winding(cfg: &RunConfig) -> Result<Check, Failure> {
    let c = RunConfig { field: FieldSpec::HarmonicU, map: MapKind::Harmonic, ..cfg.clone() };
    let s = setup(&c)?;
    let g = grid(&c)?;
    let d = field_line_winding(&s.field, s.map.as_ref(), &g, None, &trace_options(&c)).map_err(Failure::at("verify"))?;
    Ok(check("harmonic u max |L_v|", d.max_abs(), 1e-3))
}

/// For a rigid twist f*α − α vanishes and the only residual is the radial
/// derivative of the excluded own cell, (k/2π) h Δθ at every interior node.
fn gradient_identity(cfg: &RunConfig) -> Result<Check, Failure> {
    let k = 2.0;
    let n_r = cfg.grid.n_r.max(4);
    let n_t = 2 * n_r;
    let c = twist_config(cfg, k);
    let s = setup(&c)?;
    let g = QuadratureGrid::polar(n_r, n_t).map_err(Failure::at("verify"))?;
    let opts = trace_options(&c);
    let l = field_line_winding(&s.field, s.map.as_ref(), &g, None, &opts).map_err(Failure::at("verify"))?;
    let f = field_line_mapping(&s.field, s.map.as_ref(), &g.nodes, 1.0, &opts).map_err(Failure::at("verify"))?;
    let r = gradient_identity_residual(&l, &f).map_err(Failure::at("verify"))?;
    let expect = k / TAU * (1.0 / n_r as f64) * (TAU / n_t as f64);
    Ok(check("gradient identity |res - own cell|", (r.max - expect).abs().max((r.rms - expect).abs()), 1e-6))
}

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Result<(), Failure> {
    let mut checks = vec![oracle()?];
    checks.extend(twist(cfg)?);
    checks.push(zero_winding(cfg)?);
    checks.push(gradient_identity(cfg)?);
    println!("{:<38} {:>12} {:>10}  status", "check", "value", "limit");
    for c in &checks {
        println!("{:<38} {:>12.3e} {:>10.1e}  {}", c.name, c.value, c.limit, if c.pass { "PASS" } else { "FAIL" });
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::validation("verify", format!("{failed} of {} checks failed", checks.len())));
    }
    out.sidecar(cfg, json!({ "checks": checks }))
}
