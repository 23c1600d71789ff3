use serde::{Deserialize, Serialize};

use super::{subregion_gradient, CostModel};
use crate::error::{CoverageError, Result};
use crate::geometry::{Domain, Vec2};
use crate::partition::PartitionState;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl AxisBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_max > x_min && y_max > y_min) {
            return Err(CoverageError::InvalidArgument(
                "box sides must have positive length".into(),
            ));
        }
        Ok(AxisBox {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn centered(center: Vec2, half_width: f64, half_height: f64) -> Result<Self> {
        Self::new(
            center.x - half_width,
            center.x + half_width,
            center.y - half_height,
            center.y + half_height,
        )
    }

    /// `A z + b` for `z ∈ [−1, 1]²`.
    pub fn map(&self, z: Vec2) -> Vec2 {
        let a = Vec2::new(0.5 * (self.x_max - self.x_min), 0.5 * (self.y_max - self.y_min));
        let b = Vec2::new(0.5 * (self.x_max + self.x_min), 0.5 * (self.y_max + self.y_min));
        Vec2::new(a.x * z.x + b.x, a.y * z.y + b.y)
    }
}

/// Point at arc length `s ∈ [0, 8)` along `∂[−1, 1]²`, counter-clockwise
/// from the corner `(−1, −1)`.
fn unit_square_boundary(s: f64) -> Vec2 {
    match s {
        s if s < 2.0 => Vec2::new(-1.0 + s, -1.0),
        s if s < 4.0 => Vec2::new(1.0, -1.0 + (s - 2.0)),
        s if s < 6.0 => Vec2::new(1.0 - (s - 4.0), 1.0),
        s => Vec2::new(-1.0, 1.0 - (s - 6.0)),
    }
}

/// Sampled Poincaré–Miranda certificate for a zero of `∇_{p_i} J` inside
/// `bx`: true iff `⟨∇J(A z + b), z⟩ > 0` at every one of `boundary_samples`
/// points spaced evenly along `∂[−1, 1]²`.
///
/// A `true` result certifies a critical point at sampling resolution; `false`
/// proves nothing.
pub fn miranda_existence_test(
    partition: &PartitionState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
    bx: &AxisBox,
    boundary_samples: usize,
) -> Result<bool> {
    if boundary_samples == 0 {
        return Err(CoverageError::InvalidArgument("need at least one boundary sample".into()));
    }
    for j in 0..boundary_samples {
        let z = unit_square_boundary(8.0 * j as f64 / boundary_samples as f64);
        let g = subregion_gradient(partition, domain, cost, i, bx.map(z))?;
        if g.dot(z) <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
