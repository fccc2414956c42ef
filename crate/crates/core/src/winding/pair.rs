//! Pairwise winding of two mapped curves.
//!
//! Each monotone section is stored as a polyline sorted by ascending reference
//! height. On the merged breakpoints of two sections the separation
//! `d = γ − γ̃` is linear in `z`, so the relative angle changes by
//! `atan2(d_end) − atan2(d_start) + 2πN`, where `N` counts signed crossings of
//! the negative `d1` axis. Linear pieces never sweep more than π, which makes
//! the count exact.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::tracing::FieldLine;

/// Separation below which two curves count as intersecting.
pub const SINGULAR_DIST: f64 = 1e-10;

/// Full-quadrant angle of `γ − γ̃`.
pub fn angle(g: &[f64; 2], gt: &[f64; 2]) -> Result<f64> {
    let d = [g[0] - gt[0], g[1] - gt[1]];
    let n = d[0].hypot(d[1]);
    if n < SINGULAR_DIST {
        return Err(Error::SingularPair(n));
    }
    Ok(d[1].atan2(d[0]))
}

#[derive(Debug, Clone)]
pub(crate) struct Strand {
    pub sigma: f64,
    /// `(z, x1, x2)`, strictly ascending in `z`.
    pub pts: Vec<[f64; 3]>,
}

/// Mapped curve prepared for repeated pairing.
#[derive(Debug, Clone)]
pub struct PreparedLine {
    pub(crate) start: [f64; 3],
    pub(crate) strands: Vec<Strand>,
}

impl PreparedLine {
    pub fn new(line: &FieldLine) -> Result<Self> {
        let refs = line
            .reference()
            .ok_or_else(|| Error::InvalidArgument("field line has not been mapped to reference coordinates".into()))?;
        let mut strands = Vec::new();
        for s in &line.sections {
            if s.sigma == 0 {
                continue;
            }
            let mut pts: Vec<[f64; 3]> = refs[s.start..=s.end].iter().map(|r| [r.z, r.x1, r.x2]).collect();
            if s.sigma < 0 {
                pts.reverse();
            }
            strands.push(Strand {
                sigma: s.sigma as f64,
                pts,
            });
        }
        let p = line.start.0;
        Ok(PreparedLine {
            start: [p.x, p.y, p.z],
            strands,
        })
    }

    pub fn start_distance(&self, other: &PreparedLine) -> f64 {
        let d: f64 = (0..3).map(|k| (self.start[k] - other.start[k]).powi(2)).sum();
        d.sqrt()
    }
}

fn cmp_start(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Segment index `i` with `p[i].z <= z < p[i+1].z`, clamped to the last segment.
fn segment(p: &[[f64; 3]], z: f64) -> usize {
    let i = p.partition_point(|q| q[0] <= z);
    i.saturating_sub(1).min(p.len() - 2)
}

fn at(p: &[[f64; 3]], i: usize, z: f64) -> [f64; 2] {
    let (a, b) = (&p[i], &p[i + 1]);
    let t = (z - a[0]) / (b[0] - a[0]);
    [a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

/// On the same side of the branch cut as `atan2` returning a positive angle.
fn upper(d: &[f64; 2]) -> bool {
    d[1] > 0.0 || (d[1] == 0.0 && !d[1].is_sign_negative() && d[0] < 0.0)
}

/// Net change of the angle of `a − b` for ascending `z` over the shared range.
pub(crate) fn sweep(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Ok(0.0);
    }
    let lo = a[0][0].max(b[0][0]);
    let hi = a[a.len() - 1][0].min(b[b.len() - 1][0]);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let (mut ia, mut ib) = (segment(a, lo), segment(b, lo));
    let sep = |z: f64, ia: usize, ib: usize| {
        let (pa, pb) = (at(a, ia, z), at(b, ib, z));
        [pa[0] - pb[0], pa[1] - pb[1]]
    };
    let mut d = sep(lo, ia, ib);
    let n0 = d[0].hypot(d[1]);
    if n0 < SINGULAR_DIST {
        return Err(Error::SingularPair(n0));
    }
    let theta0 = d[1].atan2(d[0]);
    let mut crossings = 0i64;
    loop {
        let next = a[ia + 1][0].min(b[ib + 1][0]).min(hi);
        let dn = sep(next, ia, ib);
        let step = [dn[0] - d[0], dn[1] - d[1]];
        let len2 = step[0] * step[0] + step[1] * step[1];
        let t = if len2 > 0.0 { -(d[0] * step[0] + d[1] * step[1]) / len2 } else { 0.0 };
        let t = t.clamp(0.0, 1.0);
        let closest = (d[0] + t * step[0]).hypot(d[1] + t * step[1]);
        if closest < SINGULAR_DIST {
            return Err(Error::SingularPair(closest));
        }
        let (ua, ub) = (upper(&d), upper(&dn));
        if ua != ub {
            let den = d[1] - dn[1];
            let x = if den != 0.0 { d[0] + d[1] / den * step[0] } else { d[0] };
            if x < 0.0 {
                crossings += if ua { 1 } else { -1 };
            }
        }
        d = dn;
        if next >= hi {
            break;
        }
        if a[ia + 1][0] <= next && ia + 2 < a.len() {
            ia += 1;
        }
        if b[ib + 1][0] <= next && ib + 2 < b.len() {
            ib += 1;
        }
    }
    Ok(d[1].atan2(d[0]) - theta0 + TAU * crossings as f64)
}

/// Winding of two prepared curves; symmetric in its arguments bit for bit.
pub fn pairwise_prepared(a: &PreparedLine, b: &PreparedLine) -> Result<f64> {
    let (a, b) = if cmp_start(&a.start, &b.start) == Ordering::Greater { (b, a) } else { (a, b) };
    let mut total = 0.0;
    for sa in &a.strands {
        for sb in &b.strands {
            total += sa.sigma * sb.sigma * sweep(&sa.pts, &sb.pts)?;
        }
    }
    Ok(total / TAU)
}

/// Winding number `L(γ, γ̃)` of two mapped field lines.
pub fn pairwise_winding(g: &FieldLine, gt: &FieldLine) -> Result<f64> {
    pairwise_prepared(&PreparedLine::new(g)?, &PreparedLine::new(gt)?)
}
