//! Dormand–Prince 5(4) integration of a unit direction field in arclength,
//! with level-crossing events on a foliation and turning-point refinement.

use super::{Foliation, Sample, TraceError, TraceOptions};
use crate::error::Error;
use crate::geometry::Hint;
use crate::Vec3;

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Which way the foliation value must pass the target level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

#[derive(Debug, Clone, Copy)]
pub struct Target {
    pub level: f64,
    pub crossing: Crossing,
}

impl Target {
    fn crossed(&self, z0: f64, z1: f64) -> bool {
        let up = z0 < self.level && z1 >= self.level;
        let down = z0 > self.level && z1 <= self.level;
        match self.crossing {
            Crossing::Rising => up,
            Crossing::Falling => down,
            Crossing::Either => up || down,
        }
    }
}

pub(crate) struct Integrator<'a, F> {
    pub rhs: F,
    pub fol: &'a dyn Foliation,
    /// +1 follows the field, -1 runs against it.
    pub sign: f64,
    pub opts: &'a TraceOptions,
    pub hint: Hint,
    /// Record every accepted step (dense output) instead of only the endpoint.
    pub record: bool,
}

enum StepFail {
    Eval,
    Stagnant(Vec3),
}

impl<F> Integrator<'_, F>
where
    F: Fn(&Vec3, &mut Hint) -> Result<Vec3, Error>,
{
    fn direction(&mut self, y: &Vec3) -> Result<Vec3, StepFail> {
        let v = (self.rhs)(y, &mut self.hint).map_err(|_| StepFail::Eval)?;
        let n = v.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(StepFail::Stagnant(*y));
        }
        Ok(self.sign / n * v)
    }

    /// One DP5(4) step: fifth-order solution and error estimate.
    fn step(&mut self, y: &Vec3, h: f64) -> Result<(Vec3, Vec3), StepFail> {
        let mut k = [Vec3::zeros(); 7];
        k[0] = self.direction(y)?;
        for s in 0..6 {
            let mut yi = *y;
            for j in 0..=s {
                if A[s][j] != 0.0 {
                    yi += h * A[s][j] * k[j];
                }
            }
            k[s + 1] = self.direction(&yi)?;
        }
        let mut y5 = *y;
        let mut err = Vec3::zeros();
        for i in 0..7 {
            y5 += h * B5[i] * k[i];
            err += h * (B5[i] - B4[i]) * k[i];
        }
        Ok((y5, err))
    }

    fn level(&mut self, y: &Vec3) -> Result<f64, StepFail> {
        self.fol.level(y, &mut self.hint).map_err(|_| StepFail::Eval)
    }

    /// Point and level reached by a single step of length `t` from `y`.
    fn probe(&mut self, y: &Vec3, t: f64) -> Result<(Vec3, f64), StepFail> {
        if t == 0.0 {
            let z = self.level(y)?;
            return Ok((*y, z));
        }
        let (p, _) = self.step(y, t)?;
        let (p, _) = self.fol.domain().clamp_to_side(&p);
        let z = self.level(&p)?;
        Ok((p, z))
    }

    /// Integrates from `y0` until the foliation crosses `target`.
    pub fn run(&mut self, y0: Vec3, target: Target) -> Result<Vec<Sample>, TraceError> {
        let domain = self.fol.domain().clone();
        let scale = domain.length_scale();
        let atol = self.opts.tol * scale;
        let hmax = 0.1 * scale;
        let z0 = self
            .level(&y0)
            .map_err(|_| TraceError::Eval(format!("cannot evaluate level at start {y0:?}")))?;
        let mut samples = vec![Sample::new(y0, z0)];
        if (z0 - target.level).abs() <= 1e-14 {
            return Ok(samples);
        }

        let mut y = y0;
        let mut z = z0;
        let mut h = if self.record { 1e-3 * scale } else { 1e-2 * scale };
        let mut err_prev: f64 = 1.0;
        let mut last_dz = 0.0;
        // Start of the previous accepted step and its length, for turning points.
        let mut prev: Option<(Vec3, f64)> = None;
        let mut attempts = 0usize;
        // Consecutive evaluation failures since the last accepted step.
        let mut eval_failures = 0usize;

        loop {
            attempts += 1;
            if attempts > self.opts.max_steps {
                return Err(TraceError::StepCap { steps: self.opts.max_steps });
            }
            let (yn, err) = match self.step(&y, h) {
                Ok(r) => r,
                Err(StepFail::Stagnant(p)) => return Err(TraceError::Stagnant { at: p.into() }),
                Err(StepFail::Eval) => {
                    // Stage points left the region where the field is known.
                    eval_failures += 1;
                    if eval_failures > 60 || h < 1e-14 * scale {
                        return Err(TraceError::Eval(format!("field not evaluable near {y:?}")));
                    }
                    h *= 0.5;
                    continue;
                }
            };
            let errn = (err.norm() / atol).max(1e-10);
            if errn > 1.0 {
                h *= (0.9 * errn.powf(-0.2)).max(0.2);
                continue;
            }
            let (yn, over) = domain.clamp_to_side(&yn);
            if over > self.opts.side_tol {
                return Err(TraceError::SideExit { overshoot: over });
            }
            let zn = match self.level(&yn) {
                Ok(v) => v,
                Err(_) => {
                    eval_failures += 1;
                    if eval_failures > 60 {
                        return Err(TraceError::Eval(format!("level not evaluable near {yn:?}")));
                    }
                    h *= 0.5;
                    continue;
                }
            };
            if self.record {
                let dz = (zn - z).abs();
                let xa = domain.inverse(&y);
                let xb = domain.inverse(&yn);
                let disp = (xb.x1 - xa.x1).hypot(xb.x2 - xa.x2);
                let cap = self.opts.max_inplane * xa.radius().max(0.1);
                let ratio = (dz / self.opts.max_dphi).max(disp / cap);
                if ratio > 1.0 && !target.crossed(z, zn) {
                    h *= 0.9 / ratio;
                    continue;
                }
            }

            if target.crossed(z, zn) {
                let (yl, zl) = self.land(&y, z, h, target)?;
                samples.push(Sample::new(yl, zl));
                return Ok(samples);
            }
            let escaped = match target.crossing {
                Crossing::Rising => zn < -1e-9,
                Crossing::Falling => zn > 1.0 + 1e-9,
                Crossing::Either => !(-1e-9..=1.0 + 1e-9).contains(&zn),
            };
            if escaped {
                return Err(TraceError::CapExit { level: zn });
            }

            let dz = zn - z;
            if self.record && last_dz * dz < 0.0 {
                if let Some((yp, hp)) = prev {
                    if let Some((ye, ze, before)) = self.turning_point(&yp, hp, &y, h, last_dz > 0.0) {
                        let s = Sample::new(ye, ze);
                        if before {
                            let last = samples.pop().expect("current sample");
                            samples.push(s);
                            samples.push(last);
                        } else {
                            samples.push(s);
                        }
                    }
                }
            }
            if dz != 0.0 {
                last_dz = dz;
            }
            eval_failures = 0;
            prev = Some((y, h));
            y = yn;
            z = zn;
            if self.record {
                samples.push(Sample::new(y, z));
            }

            let fac = (0.9 * errn.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            err_prev = errn;
            h = (h * fac).min(hmax);
        }
    }

    /// Root of `level - target` along the step of length `h` from `y`.
    fn land(&mut self, y: &Vec3, z: f64, h: f64, target: Target) -> Result<(Vec3, f64), TraceError> {
        let fail = |_| TraceError::Eval("landing step not evaluable".into());
        let (mut a, mut ga) = (0.0, z - target.level);
        let (yb, zb) = self.probe(y, h).map_err(fail)?;
        let (mut b, mut gb) = (h, zb - target.level);
        let mut best = (yb, zb);
        let mut side = 0i8;
        for _ in 0..100 {
            if gb.abs() <= 1e-14 || (b - a).abs() <= 1e-15 * h.max(1.0) {
                break;
            }
            // Illinois variant of regula falsi.
            let t = (a * gb - b * ga) / (gb - ga);
            let (yt, zt) = self.probe(y, t).map_err(fail)?;
            let gt = zt - target.level;
            best = (yt, zt);
            if gt.abs() <= 1e-14 {
                break;
            }
            if (gt > 0.0) == (gb > 0.0) {
                b = t;
                gb = gt;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            } else {
                a = t;
                ga = gt;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            }
        }
        Ok(best)
    }

    /// Extremum of the level over the two steps `(yp, hp)` and `(y, h)`.
    ///
    /// Returns the point, its level, and whether it lies in the first step.
    fn turning_point(&mut self, yp: &Vec3, hp: f64, y: &Vec3, h: f64, is_max: bool) -> Option<(Vec3, f64, bool)> {
        let sgn = if is_max { 1.0 } else { -1.0 };
        let mut best: Option<(Vec3, f64, bool)> = None;
        for (start, len, first) in [(*yp, hp, true), (*y, h, false)] {
            let Some((p, zv, t)) = self.golden(&start, len, sgn) else { continue };
            if t <= 1e-12 * len || t >= len * (1.0 - 1e-12) {
                continue;
            }
            if best.is_none_or(|(_, zb, _)| sgn * zv > sgn * zb) {
                best = Some((p, zv, first));
            }
        }
        best
    }

    fn golden(&mut self, y: &Vec3, len: f64, sgn: f64) -> Option<(Vec3, f64, f64)> {
        const R: f64 = 0.618_033_988_749_894_9;
        let f = |t: f64, me: &mut Self| me.probe(y, t).ok().map(|(p, z)| (p, z, sgn * z));
        let (mut a, mut b) = (0.0, len);
        let mut c = b - R * (b - a);
        let mut d = a + R * (b - a);
        let mut fc = f(c, self)?;
        let mut fd = f(d, self)?;
        while (b - a) > 1e-13 * len.max(1e-300) {
            if fc.2 > fd.2 {
                b = d;
                d = c;
                fd = fc;
                c = b - R * (b - a);
                fc = f(c, self)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + R * (b - a);
                fd = f(d, self)?;
            }
        }
        let (p, z, _) = if fc.2 > fd.2 { fc } else { fd };
        Some((p, z, 0.5 * (a + b)))
    }
}
