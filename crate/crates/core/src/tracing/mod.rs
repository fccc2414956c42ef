//! Field-line integration from `S0` to `S1` and monotone-section splitting.

mod rk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::ReferenceMap;
use crate::error::{Error as CoreError, Result};
use crate::fields::BraidedField;
use crate::geometry::{DomainPoint, Hint, ReferencePoint, TubularDomain};
use crate::Vec3;

pub use rk::{Crossing, Target};
pub(crate) use rk::Integrator;

/// A scalar `z: M → [0, 1]` whose level sets are the cross-sections.
pub trait Foliation: Sync {
    fn domain(&self) -> &TubularDomain;
    fn level(&self, y: &Vec3, hint: &mut Hint) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("start point is not on S0 (level {level:e})")]
    NotOnS0 { level: f64 },
    #[error("step cap of {steps} exceeded")]
    StepCap { steps: usize },
    #[error("left through the side boundary (overshoot {overshoot:e} in reference radius)")]
    SideExit { overshoot: f64 },
    #[error("left through the wrong end cap (level {level})")]
    CapExit { level: f64 },
    #[error("field vanishes at {at:?}")]
    Stagnant { at: [f64; 3] },
    #[error("{0}")]
    Eval(String),
    #[error("line reverses before reaching level {level}")]
    NonMonotone { level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Dimensionless local error tolerance, scaled by the domain length.
    pub tol: f64,
    pub max_steps: usize,
    /// Largest change of the foliation value between recorded samples.
    pub max_dphi: f64,
    /// Largest in-plane reference displacement between samples, relative to
    /// `max(r, 0.1)`.
    pub max_inplane: f64,
    /// Largest tolerated drift across the side, in reference radius.
    pub side_tol: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            tol: 1e-8,
            max_steps: 100_000,
            max_dphi: 0.01,
            max_inplane: 0.1,
            side_tol: 1e-3,
        }
    }
}

impl TraceOptions {
    pub fn with_tol(tol: f64) -> Self {
        TraceOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub y: Vec3,
    /// Foliation value at `y`.
    pub z: f64,
    /// Reference-cylinder position, once mapped.
    pub reference: Option<ReferencePoint>,
}

impl Sample {
    pub fn new(y: Vec3, z: f64) -> Self {
        Sample {
            y,
            z,
            reference: None,
        }
    }
}

/// Maximal run of samples on which `z` is strictly monotone (or flat).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Section {
    pub start: usize,
    /// Inclusive; shared with the next section's `start`.
    pub end: usize,
    pub sigma: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldLine {
    pub samples: Vec<Sample>,
    pub start: DomainPoint,
    pub sections: Vec<Section>,
    pub arc_tolerance: f64,
}

impl FieldLine {
    /// Builds a line from given samples and splits it into sections.
    pub fn from_samples(samples: Vec<Sample>, arc_tolerance: f64) -> Self {
        let start = DomainPoint(samples[0].y);
        split_monotone(FieldLine {
            samples,
            start,
            sections: Vec::new(),
            arc_tolerance,
        })
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("field line has samples")
    }

    pub fn is_monotone(&self) -> bool {
        self.sections.len() == 1 && self.sections[0].sigma == 1
    }

    /// Reference positions; `None` until the line has been mapped.
    pub fn reference(&self) -> Option<Vec<ReferencePoint>> {
        self.samples.iter().map(|s| s.reference).collect()
    }
}

/// Assigns monotone sections from the sample levels.
///
/// A step is level (σ = 0) when `|Δz| ≤ 1e-10 |Δy|`.
pub fn split_monotone(mut line: FieldLine) -> FieldLine {
    let n = line.samples.len();
    let z = |i: usize| {
        let s = &line.samples[i];
        s.reference.map_or(s.z, |r| r.z)
    };
    let mut sections: Vec<Section> = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let dz = z(i + 1) - z(i);
        let ds = (line.samples[i + 1].y - line.samples[i].y).norm();
        let sigma = if dz.abs() <= 1e-10 * ds { 0 } else { dz.signum() as i8 };
        match sections.last_mut() {
            Some(s) if s.sigma == sigma => s.end = i + 1,
            _ => sections.push(Section {
                start: i,
                end: i + 1,
                sigma,
            }),
        }
    }
    line.sections = sections;
    line
}

/// Field line of `field` from `start ∈ S0` to `S1`, sampled densely.
pub fn trace_field_line(
    field: &BraidedField,
    fol: &dyn Foliation,
    start: &DomainPoint,
    opts: &TraceOptions,
) -> std::result::Result<FieldLine, TraceError> {
    let mut hint = Hint::default();
    let z0 = fol
        .level(start, &mut hint)
        .map_err(|e| TraceError::Eval(e.to_string()))?;
    if z0.abs() > 1e-8 {
        return Err(TraceError::NotOnS0 { level: z0 });
    }
    let samples = trace_to_level(field, fol, start.0, 1.0, opts)?;
    Ok(FieldLine::from_samples(samples, opts.tol))
}

/// Dense samples from `y0` up to the first point where the foliation reaches `level`.
pub fn trace_to_level(
    field: &BraidedField,
    fol: &dyn Foliation,
    y0: Vec3,
    level: f64,
    opts: &TraceOptions,
) -> std::result::Result<Vec<Sample>, TraceError> {
    let mut it = Integrator {
        rhs: |y: &Vec3, h: &mut Hint| field.eval(y, h),
        fol,
        sign: 1.0,
        opts,
        hint: Hint::default(),
        record: true,
    };
    it.run(
        y0,
        Target {
            level,
            crossing: Crossing::Rising,
        },
    )
}

/// Images at `level` of field lines started at the cap points of `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMapping {
    pub grid: Vec<[f64; 2]>,
    pub images: Vec<[f64; 2]>,
    pub level: f64,
}

/// Where each line from `grid` first reaches `level`, in reference coordinates.
pub fn field_line_mapping(
    field: &BraidedField,
    map: &dyn ReferenceMap,
    grid: &[[f64; 2]],
    level: f64,
    opts: &TraceOptions,
) -> Result<DiscreteMapping> {
    if !(0.0..=1.0).contains(&level) {
        return Err(CoreError::InvalidArgument(format!("level {level} outside [0, 1]")));
    }
    let images = grid
        .par_iter()
        .enumerate()
        .map(|(node, x)| {
            if level == 0.0 {
                return Ok(*x);
            }
            let wrap = |e: CoreError| CoreError::NodeTrace {
                node,
                source: Box::new(e),
            };
            let y0 = map.cap_point(x).map_err(wrap)?;
            let samples = trace_to_level(field, map, y0.0, level, opts).map_err(|e| wrap(e.into()))?;
            let line = FieldLine::from_samples(samples, opts.tol);
            if !line.is_monotone() {
                return Err(wrap(TraceError::NonMonotone { level }.into()));
            }
            let r = map.to_reference(&line.last().y).map_err(wrap)?;
            Ok([r.x1, r.x2])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMapping {
        grid: grid.to_vec(),
        images,
        level,
    })
}
