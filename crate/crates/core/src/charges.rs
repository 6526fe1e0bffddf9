//! Planar charge configurations: n positions plus signs σ ∈ {-1, +1}ⁿ.
//!
//! Used in two unit conventions: the Ursell oracle treats positions as
//! physical coordinates x, the stability optimizer as rescaled coordinates
//! w = √κ x. The geometry helpers are unit-agnostic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeConfiguration {
    pub positions: Vec<[f64; 2]>,
    pub signs: Vec<i8>,
}

impl ChargeConfiguration {
    pub fn new(positions: Vec<[f64; 2]>, signs: Vec<i8>) -> Result<Self> {
        if positions.len() != signs.len() || positions.is_empty() {
            return Err(Error::InvalidInput {
                reason: format!(
                    "need matching nonempty positions/signs, got {} vs {}",
                    positions.len(),
                    signs.len()
                ),
            });
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput {
                reason: "signs must be +1 or -1".into(),
            });
        }
        Ok(Self { positions, signs })
    }

    pub fn n(&self) -> usize {
        self.signs.len()
    }

    pub fn net_charge(&self) -> i32 {
        self.signs.iter().map(|&s| s as i32).sum()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let dx = self.positions[i][0] - self.positions[j][0];
        let dy = self.positions[i][1] - self.positions[j][1];
        (dx * dx + dy * dy).sqrt()
    }

    pub fn max_pair_distance(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                m = m.max(self.distance(i, j));
            }
        }
        m
    }

    /// Canonical gauge: centroid at the origin, first particle on the
    /// nonnegative horizontal axis, reflected so the first particle off the
    /// axis has y >= 0.
    ///
    /// When the first particle sits at the centroid the rotation it defines
    /// is degenerate; orientation then falls to the first particle at
    /// positive radius.
    pub fn gauge_fixed(&self) -> Self {
        let n = self.n() as f64;
        let cx = self.positions.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = self.positions.iter().map(|p| p[1]).sum::<f64>() / n;
        let mut pos: Vec<[f64; 2]> = self
            .positions
            .iter()
            .map(|p| [p[0] - cx, p[1] - cy])
            .collect();
        let r_big = pos
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
            .fold(0.0, f64::max);
        if let Some(anchor) = pos
            .iter()
            .find(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() > 1e-4 * r_big)
        {
            let r = (anchor[0] * anchor[0] + anchor[1] * anchor[1]).sqrt();
            let (c, s) = (anchor[0] / r, anchor[1] / r);
            for p in pos.iter_mut() {
                let (x, y) = (p[0], p[1]);
                *p = [c * x + s * y, -s * x + c * y];
            }
        }
        if let Some(p) = pos.iter().find(|p| p[1].abs() > 1e-9) {
            if p[1] < 0.0 {
                for p in pos.iter_mut() {
                    p[1] = -p[1];
                }
            }
        }
        Self {
            positions: pos,
            signs: self.signs.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(ChargeConfiguration::new(vec![[0.0, 0.0]], vec![2]).is_err());
        assert!(ChargeConfiguration::new(vec![[0.0, 0.0]], vec![1, -1]).is_err());
        let c = ChargeConfiguration::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![1, -1]).unwrap();
        assert_eq!(c.net_charge(), 0);
        assert_eq!(c.distance(0, 1), 1.0);
    }

    #[test]
    fn gauge_fixing() {
        let c = ChargeConfiguration::new(
            vec![[3.0, 1.0], [4.0, 2.0], [5.0, 0.0]],
            vec![1, -1, 1],
        )
        .unwrap();
        let g = c.gauge_fixed();
        let cx: f64 = g.positions.iter().map(|p| p[0]).sum::<f64>();
        let cy: f64 = g.positions.iter().map(|p| p[1]).sum::<f64>();
        assert!(cx.abs() < 1e-12 && cy.abs() < 1e-12);
        assert!(g.positions[0][1].abs() < 1e-12 && g.positions[0][0] >= 0.0);
        // Pairwise distances preserved.
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((g.distance(i, j) - c.distance(i, j)).abs() < 1e-12);
            }
        }
    }
}
