use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum GridLayout {
    /// Angular count grows with ring radius so node areas stay comparable.
    AreaUniform,
    /// Same angular count on every ring, for r–θ finite differences.
    Polar { n_theta: usize },
}

/// Ring quadrature on the unit disc.
///
/// Ring `i` sits at `r = (i + ½)/n_r`; node `j` on it at `θ = 2π(j + ½)/n_θ(i)`.
/// Each weight is the area of the annular sector the node represents, so the
/// weights sum to π and no node touches the boundary circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub n_r: usize,
    pub layout: GridLayout,
    /// Angular count per ring.
    pub n_theta: Vec<usize>,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    offsets: Vec<usize>,
}

impl QuadratureGrid {
    pub fn new(n_r: usize, layout: GridLayout) -> Result<Self> {
        if n_r == 0 {
            return Err(Error::InvalidArgument("grid needs at least one ring".into()));
        }
        let n_theta: Vec<usize> = match layout {
            GridLayout::AreaUniform => {
                let outer = (TAU * n_r as f64).round();
                (0..n_r)
                    .map(|i| ((outer * (i as f64 + 0.5) / n_r as f64).ceil() as usize).max(4))
                    .collect()
            }
            GridLayout::Polar { n_theta } => {
                if n_theta < 3 {
                    return Err(Error::InvalidArgument(format!("polar grid needs n_theta >= 3, got {n_theta}")));
                }
                vec![n_theta; n_r]
            }
        };
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut offsets = Vec::with_capacity(n_r + 1);
        let dr = 1.0 / n_r as f64;
        for (i, &m) in n_theta.iter().enumerate() {
            offsets.push(nodes.len());
            let r = (i as f64 + 0.5) * dr;
            let (r0, r1) = (i as f64 * dr, (i + 1) as f64 * dr);
            let w = 0.5 * (r1 * r1 - r0 * r0) * TAU / m as f64;
            for j in 0..m {
                let t = TAU * (j as f64 + 0.5) / m as f64;
                nodes.push([r * t.cos(), r * t.sin()]);
                weights.push(w);
            }
        }
        offsets.push(nodes.len());
        Ok(QuadratureGrid {
            n_r,
            layout,
            n_theta,
            nodes,
            weights,
            offsets,
        })
    }

    pub fn area_uniform(n_r: usize) -> Result<Self> {
        Self::new(n_r, GridLayout::AreaUniform)
    }

    pub fn polar(n_r: usize, n_theta: usize) -> Result<Self> {
        Self::new(n_r, GridLayout::Polar { n_theta })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_r as f64
    }

    pub fn ring_radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_r as f64
    }

    pub fn ring_angle(&self, i: usize, j: usize) -> f64 {
        TAU * (j as f64 + 0.5) / self.n_theta[i] as f64
    }

    /// Flat index of node `j` on ring `i`, with `j` taken modulo the ring size.
    pub fn index(&self, i: usize, j: isize) -> usize {
        let m = self.n_theta[i] as isize;
        self.offsets[i] + j.rem_euclid(m) as usize
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature of `f` over the disc.
    pub fn integrate(&self, f: impl Fn(&[f64; 2]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn area_uniform_shape() {
        let g = QuadratureGrid::area_uniform(24).unwrap();
        assert_eq!(g.n_theta[23], (151.0 * 23.5f64 / 24.0).ceil() as usize);
        assert_eq!(g.n_theta[0], 4);
        assert!(g.nodes.iter().all(|x| x[0].hypot(x[1]) < 1.0));
    }

    #[test]
    fn second_moment_converges() {
        // ∫ r² over the disc is π/2.
        let mut prev = f64::INFINITY;
        for n in [6, 12, 24] {
            let g = QuadratureGrid::area_uniform(n).unwrap();
            let e = (g.integrate(|x| x[0] * x[0] + x[1] * x[1]) - PI / 2.0).abs();
            assert!(e < prev / 3.0);
            prev = e;
        }
    }

    proptest! {
        #[test]
        fn weights_sum_to_disc_area(n_r in 1usize..40, n_t in 3usize..80, polar: bool) {
            let layout = if polar { GridLayout::Polar { n_theta: n_t } } else { GridLayout::AreaUniform };
            let g = QuadratureGrid::new(n_r, layout).unwrap();
            prop_assert!((g.total_weight() - PI).abs() < 1e-6);
            prop_assert!(g.weights.iter().all(|&w| w > 0.0));
            prop_assert_eq!(g.nodes.len(), g.weights.len());
        }
    }
}
