//! Pairwise winding numbers, the field-line winding distribution `L_v` and
//! its weighted variants, plus two diagnostics: the gradient identity for
//! `L_v` and a direct quadrature of the disc-averaged angle gradient.

mod grid;
mod pair;

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{map_curve, ReferenceMap};
use crate::error::{Error, Result};
use crate::fields::{BraidedField, WeightFunction};
use crate::tracing::{trace_field_line, DiscreteMapping, FieldLine, TraceOptions};

pub use grid::{GridLayout, QuadratureGrid};
pub use pair::{angle, pairwise_prepared, pairwise_winding, PreparedLine, SINGULAR_DIST};

/// Start points closer than this are treated as the same line.
pub const SELF_PAIR_DIST: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Lv,
    Wv,
    Ab,
}

impl DistributionKind {
    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Lv => "Lv",
            DistributionKind::Wv => "Wv",
            DistributionKind::Ab => "Ab",
        }
    }
}

/// One value per probe line; probes default to the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingDistribution {
    pub grid: QuadratureGrid,
    pub probes: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub kind: DistributionKind,
}

impl WindingDistribution {
    pub fn on_grid(&self) -> bool {
        self.probes == self.grid.nodes
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &WindingDistribution) -> Result<f64> {
        if self.probes != other.probes {
            return Err(Error::GridMismatch("distributions have different probe points".into()));
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Traces the field line from the cap point of each `x` and maps it to
/// reference coordinates. Lines are traced in parallel.
pub fn trace_lines(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    points: &[[f64; 2]],
    opts: &TraceOptions,
) -> Result<Vec<FieldLine>> {
    points
        .par_iter()
        .enumerate()
        .map(|(node, x)| {
            let wrap = |e: Error| Error::NodeTrace {
                node,
                source: Box::new(e),
            };
            let y0 = map.cap_point(x).map_err(wrap)?;
            let line = trace_field_line(field, map, &y0, opts).map_err(|e| wrap(e.into()))?;
            map_curve(map, line).map_err(wrap)
        })
        .collect()
}

fn prepare(lines: &[FieldLine]) -> Result<Vec<PreparedLine>> {
    lines.par_iter().map(PreparedLine::new).collect()
}

/// Winding of every node line with every later one, row `i` holding `j > i`.
fn upper_triangle(lines: &[PreparedLine]) -> Result<Vec<Vec<f64>>> {
    (0..lines.len())
        .into_par_iter()
        .map(|i| {
            lines[i + 1..]
                .iter()
                .map(|b| {
                    if lines[i].start_distance(b) < SELF_PAIR_DIST {
                        Ok(0.0)
                    } else {
                        pairwise_prepared(&lines[i], b)
                    }
                })
                .collect()
        })
        .collect()
}

/// `Σ_j weights[j]·L(probe, node j)` for every probe, summed in node order.
///
/// Without explicit probes the node lines are their own probes, and each
/// unordered pair is evaluated once.
pub fn weighted_sums(
    nodes: &[FieldLine],
    weights: &[f64],
    probes: Option<&[FieldLine]>,
) -> Result<Vec<f64>> {
    let node_lines = prepare(nodes)?;
    match probes {
        None => {
            let tri = upper_triangle(&node_lines)?;
            let n = node_lines.len();
            Ok((0..n)
                .map(|i| {
                    let mut s = 0.0;
                    for j in 0..n {
                        let l = match j.cmp(&i) {
                            std::cmp::Ordering::Less => tri[j][i - j - 1],
                            std::cmp::Ordering::Equal => continue,
                            std::cmp::Ordering::Greater => tri[i][j - i - 1],
                        };
                        s += weights[j] * l;
                    }
                    s
                })
                .collect())
        }
        Some(p) => {
            let probe_lines = prepare(p)?;
            probe_lines
                .par_iter()
                .map(|a| {
                    let mut s = 0.0;
                    for (b, w) in node_lines.iter().zip(weights) {
                        if a.start_distance(b) >= SELF_PAIR_DIST {
                            s += w * pairwise_prepared(a, b)?;
                        }
                    }
                    Ok(s)
                })
                .collect()
        }
    }
}

fn distribution(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    grid: &QuadratureGrid,
    weights: &[f64],
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
    kind: DistributionKind,
) -> Result<WindingDistribution> {
    let nodes = trace_lines(field, map, &grid.nodes, opts)?;
    let (values, probes) = match probe {
        Some(p) if p != grid.nodes.as_slice() => {
            let lines = trace_lines(field, map, p, opts)?;
            (weighted_sums(&nodes, weights, Some(&lines))?, p.to_vec())
        }
        _ => (weighted_sums(&nodes, weights, None)?, grid.nodes.clone()),
    };
    Ok(WindingDistribution {
        grid: grid.clone(),
        probes,
        values,
        kind,
    })
}

/// `L_v(γ) = ∫ L(γ, γ̃(x)) d²x` over the lower cap, for the probe lines
/// (default: one per grid node).
pub fn field_line_winding(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    grid: &QuadratureGrid,
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
) -> Result<WindingDistribution> {
    distribution(field, map, grid, &grid.weights, probe, opts, DistributionKind::Lv)
}

/// As [`field_line_winding`] with the integrand weighted by `w(x)`.
pub fn weighted_winding(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    grid: &QuadratureGrid,
    w: &WeightFunction,
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
) -> Result<WindingDistribution> {
    weighted_winding_kind(field, map, grid, w, probe, opts, DistributionKind::Wv)
}

pub(crate) fn weighted_winding_kind(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    grid: &QuadratureGrid,
    w: &WeightFunction,
    probe: Option<&[[f64; 2]]>,
    opts: &TraceOptions,
    kind: DistributionKind,
) -> Result<WindingDistribution> {
    let weights = grid.nodes.iter().zip(&grid.weights).map(|(x, a)| a * w.eval(x)).collect::<Vec<_>>();
    if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("weight is not finite at node {i}")));
    }
    distribution(field, map, grid, &weights, probe, opts, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientResidual {
    pub max: f64,
    pub rms: f64,
    /// Interior nodes where the residual was evaluated.
    pub nodes: usize,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * (a / TAU).round();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Finite-difference residual of `d⊥L_v = f*α − α`, `α = (r²/2) dθ`, on a
/// polar grid, with `f` the field-line mapping to the upper cap.
///
/// Uses central differences on interior rings; the residual at a node is
/// `|(res_r, res_θ / r)|`.
pub fn gradient_identity_residual(dist: &WindingDistribution, mapping: &DiscreteMapping) -> Result<GradientResidual> {
    let g = &dist.grid;
    let n_theta = match g.layout {
        GridLayout::Polar { n_theta } => n_theta,
        GridLayout::AreaUniform => return Err(Error::GridMismatch("gradient identity needs a polar grid".into())),
    };
    if !dist.on_grid() || mapping.grid != g.nodes {
        return Err(Error::GridMismatch("distribution and mapping must share the polar grid".into()));
    }
    if g.n_r < 3 {
        return Err(Error::GridMismatch("need at least three rings".into()));
    }
    let fr = |k: usize| mapping.images[k][0].hypot(mapping.images[k][1]);
    let ft = |k: usize| mapping.images[k][1].atan2(mapping.images[k][0]);
    let l = &dist.values;
    let h = g.spacing();
    let dt = TAU / n_theta as f64;
    let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
    for i in 1..g.n_r - 1 {
        let r = g.ring_radius(i);
        for j in 0..n_theta as isize {
            let k = g.index(i, j);
            let (kr0, kr1) = (g.index(i - 1, j), g.index(i + 1, j));
            let (kt0, kt1) = (g.index(i, j - 1), g.index(i, j + 1));
            let dl_dr = (l[kr1] - l[kr0]) / (2.0 * h);
            let dl_dt = (l[kt1] - l[kt0]) / (2.0 * dt);
            let dft_dr = wrap_angle(ft(kr1) - ft(kr0)) / (2.0 * h);
            let dft_dt = wrap_angle(ft(kt1) - ft(kt0)) / (2.0 * dt);
            let half = 0.5 * fr(k).powi(2);
            let res_r = dl_dr - half * dft_dr;
            let res_t = dl_dt - half * dft_dt + 0.5 * r * r;
            let e = res_r.hypot(res_t / r);
            max = max.max(e);
            sum += e * e;
            count += 1;
        }
    }
    Ok(GradientResidual {
        max,
        rms: (sum / count as f64).sqrt(),
        nodes: count,
    })
}

/// Disc average of the gradient of `Θ(x, x̃)` with respect to `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGradientAverage {
    /// Component along `e_r`.
    pub radial: f64,
    /// Component along the unit vector `e_θ`; equals `r/2`.
    pub angular_unit: f64,
    /// Coordinate component `∂/∂θ`, i.e. `r · angular_unit`.
    pub angular_coord: f64,
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `(1/2π)∫_{D₀} ∇_x Θ(x, x̃) d²x̃` at `x = (r cos θ, r sin θ)`.
///
/// Integrates in polar coordinates `(ρ, φ)` centred on `x`, where the `1/ρ`
/// singularity cancels against the area element: Gauss–Legendre in `ρ` up to
/// the disc boundary and the trapezoid rule over `quad_n` angles.
pub fn appendix_b_oracle(r: f64, theta: f64, quad_n: usize) -> Result<AngleGradientAverage> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("radius {r} is outside [0, 1)")));
    }
    if quad_n < 4 {
        return Err(Error::InvalidArgument("need at least 4 angular nodes".into()));
    }
    let mut acc = [0.0f64; 2];
    for m in 0..quad_n {
        let phi = TAU * m as f64 / quad_n as f64;
        let c = (phi - theta).cos();
        let rho_max = -r * c + (r * r * c * c - r * r + 1.0).sqrt();
        // ∇_x Θ = (sin φ, −cos φ)/ρ, area element ρ dρ dφ.
        let g = [phi.sin(), -phi.cos()];
        for (t, w) in GL4 {
            let rho = 0.5 * rho_max * (t + 1.0);
            let jac = 0.5 * rho_max * w * rho;
            acc[0] += jac * g[0] / rho;
            acc[1] += jac * g[1] / rho;
        }
    }
    let scale = TAU / quad_n as f64 / TAU;
    let v = [acc[0] * scale, acc[1] * scale];
    let (er, et) = ([theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]);
    let radial = v[0] * er[0] + v[1] * er[1];
    let angular_unit = v[0] * et[0] + v[1] * et[1];
    Ok(AngleGradientAverage {
        radial,
        angular_unit,
        angular_coord: r * angular_unit,
    })
}
