//! Field-line helicity `A_b` of solenoidal fields, total helicity and the
//! winding-gauge vector potential on the straight cylinder.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::ReferenceMap;
use crate::error::{Error, Result};
use crate::fields::{BraidedField, WeightFunction};
use crate::geometry::{DomainKind, Hint, Mesh, ReferencePoint};
use crate::tracing::{FieldLine, TraceOptions};
use crate::winding::{weighted_winding_kind, DistributionKind, QuadratureGrid, WindingDistribution};
use crate::Vec3;

/// Default bound on the RMS relative element divergence.
pub const SOLENOIDAL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// RMS over elements of `|∇·b| · h / mean|b|`.
    pub rms: f64,
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Element divergence from the outward flux through the four faces, each
/// face sampled at its centroid.
pub fn check_solenoidal(b: &BraidedField, mesh: &Mesh, tol: f64) -> DivergenceReport {
    let per_tet: Vec<(f64, f64)> = (0..mesh.tets.len())
        .into_par_iter()
        .map_init(Hint::default, |hint, t| {
            let p = mesh.tet_points(t);
            let centroid = (p[0] + p[1] + p[2] + p[3]) / 4.0;
            let mag = b.eval(&centroid, hint).map(|v| v.norm()).unwrap_or(f64::NAN);
            let mut flux = 0.0;
            for k in 0..4 {
                let f = [p[(k + 1) % 4], p[(k + 2) % 4], p[(k + 3) % 4]];
                let c = (f[0] + f[1] + f[2]) / 3.0;
                let mut n = 0.5 * (f[1] - f[0]).cross(&(f[2] - f[0]));
                if n.dot(&(c - p[k])) < 0.0 {
                    n = -n;
                }
                flux += b.eval(&c, hint).map(|v| v.dot(&n)).unwrap_or(f64::NAN);
            }
            (flux / mesh.tet_volume(t), mag)
        })
        .collect();
    let mean = per_tet.iter().map(|v| v.1).sum::<f64>() / per_tet.len() as f64;
    let scale = mesh.resolution / mean;
    let rel: Vec<f64> = per_tet.iter().map(|v| (v.0 * scale).abs()).collect();
    let rms = (rel.iter().map(|v| v * v).sum::<f64>() / rel.len() as f64).sqrt();
    let max = rel.iter().fold(0.0f64, |m, v| m.max(*v));
    DivergenceReport {
        rms,
        max,
        tol,
        pass: rms < tol,
    }
}

/// `J₀ · b_z` at each grid node: area of `S0` per unit disc area times the
/// normal component of `b` on `S0`.
pub fn flux_density(b: &BraidedField, map: &dyn ReferenceMap, grid: &QuadratureGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs = grid
        .nodes
        .par_iter()
        .map(|x| {
            let y = map.cap_point(x)?;
            let j0 = map.cap_jacobian(x)?;
            let bz = b.eval(&y.0, &mut Hint::default())?.dot(&map.cap_normal(x)?);
            if !(j0 > 0.0) {
                return Err(Error::InvalidArgument(format!("non-positive cap jacobian {j0} at {x:?}")));
            }
            Ok((j0, bz))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

/// `A_b(γ) = ∫ J₀ b_z L(γ, γ̃(x)) d²x`; refuses fields that fail the
/// solenoidal check on `mesh`.
pub fn field_line_helicity(
    b: &BraidedField,
    map: &dyn ReferenceMap,
    mesh: &Mesh,
    grid: &QuadratureGrid,
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
) -> Result<WindingDistribution> {
    field_line_helicity_tol(b, map, mesh, grid, probe, opts, SOLENOIDAL_TOL)
}

/// [`field_line_helicity`] with an explicit solenoidal tolerance.
pub fn field_line_helicity_tol(
    b: &BraidedField,
    map: &dyn ReferenceMap,
    mesh: &Mesh,
    grid: &QuadratureGrid,
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
    solenoidal_tol: f64,
) -> Result<WindingDistribution> {
    let report = check_solenoidal(b, mesh, solenoidal_tol);
    if !report.pass {
        return Err(Error::NotSolenoidal {
            rms: report.rms,
            tol: report.tol,
        });
    }
    let (j0, bz) = flux_density(b, map, grid)?;
    let table: HashMap<[u64; 2], f64> = grid
        .nodes
        .iter()
        .zip(j0.iter().zip(&bz))
        .map(|(x, (j, z))| ([x[0].to_bits(), x[1].to_bits()], j * z))
        .collect();
    let w = WeightFunction::new(move |x| table.get(&[x[0].to_bits(), x[1].to_bits()]).copied().unwrap_or(f64::NAN));
    weighted_winding_kind(b, map, grid, &w, probe, opts, DistributionKind::Ab)
}

/// `H = Σ w_i J₀ b_z A_b` over the grid nodes.
pub fn total_helicity(ab: &WindingDistribution, bz0: &[f64], j0: &[f64]) -> Result<f64> {
    let n = ab.grid.len();
    if !ab.on_grid() || bz0.len() != n || j0.len() != n {
        return Err(Error::GridMismatch(format!(
            "A_b has {} probes on a {n}-node grid, b_z has {}, J0 has {}",
            ab.probes.len(),
            bz0.len(),
            j0.len()
        )));
    }
    Ok((0..n).map(|i| ab.grid.weights[i] * j0[i] * bz0[i] * ab.values[i]).sum())
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `a(x) = (1/2π)∫ b(x̃) × (x − x̃, 0)/|x − x̃|² d²x̃` over the cross-section
/// through `point`.
///
/// Polar coordinates centred on `x` absorb the singularity; the radial
/// integral uses `max(1, quad_n/16)` Gauss–Legendre panels, the angular one
/// the trapezoid rule over `quad_n` angles.
pub fn winding_gauge_potential(b: &BraidedField, point: &ReferencePoint, quad_n: usize) -> Result<Vec3> {
    if b.domain().kind() != DomainKind::StraightCylinder {
        return Err(Error::InvalidArgument("winding-gauge potential needs the straight cylinder".into()));
    }
    let r = point.radius();
    if r >= 1.0 {
        return Err(Error::InvalidArgument(format!("point at radius {r} is not inside the disc")));
    }
    if quad_n < 4 {
        return Err(Error::InvalidArgument("need at least 4 angular nodes".into()));
    }
    let panels = (quad_n / 16).max(1);
    let mut hint = Hint::default();
    let mut a = Vec3::zeros();
    for m in 0..quad_n {
        let phi = TAU * m as f64 / quad_n as f64;
        let e = [phi.cos(), phi.sin()];
        let c = e[0] * point.x1 + e[1] * point.x2;
        let rho_max = -c + (c * c - r * r + 1.0).sqrt();
        let arm = Vec3::new(-e[0], -e[1], 0.0);
        let dp = rho_max / panels as f64;
        for p in 0..panels {
            for (t, w) in GL4 {
                let rho = dp * (p as f64 + 0.5 * (t + 1.0));
                let x = ReferencePoint::new(point.x1 + rho * e[0], point.x2 + rho * e[1], point.z);
                let bv = b.eval_reference(&x, &mut hint)?;
                a += (0.5 * dp * w) * bv.cross(&arm);
            }
        }
    }
    Ok(a / quad_n as f64)
}

/// Central-difference curl of the winding-gauge potential.
pub fn potential_curl(b: &BraidedField, point: &ReferencePoint, quad_n: usize, h: f64) -> Result<Vec3> {
    let at = |d: [f64; 3]| {
        winding_gauge_potential(b, &ReferencePoint::new(point.x1 + d[0], point.x2 + d[1], point.z + d[2]), quad_n)
    };
    let mut grad = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut d = [0.0; 3];
        d[k] = h;
        let plus = at(d)?;
        d[k] = -h;
        let minus = at(d)?;
        let g = (plus - minus) / (2.0 * h);
        for i in 0..3 {
            grad[i][k] = g[i];
        }
    }
    Ok(Vec3::new(
        grad[2][1] - grad[1][2],
        grad[0][2] - grad[2][0],
        grad[1][0] - grad[0][1],
    ))
}

/// `∫_γ a · dl` by the trapezoid rule over the line samples.
pub fn potential_line_integral(b: &BraidedField, line: &FieldLine, quad_n: usize) -> Result<f64> {
    let a = line
        .samples
        .par_iter()
        .map(|s| winding_gauge_potential(b, &b.domain().inverse(&s.y), quad_n))
        .collect::<Result<Vec<_>>>()?;
    Ok(line
        .samples
        .windows(2)
        .zip(a.windows(2))
        .map(|(s, a)| 0.5 * (a[0] + a[1]).dot(&(s[1].y - s[0].y)))
        .sum())
}
