use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Symmetric 2×2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

/// Service cost `f(p, q)` charged to an agent at `p` for an event at `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostModel {
    /// `‖p − q‖²`, handled in closed form through region moments.
    #[default]
    SquaredDistance,
    /// Any built-in cost evaluated by quadrature.
    GenericBuiltin { function: GenericCost },
}

/// Built-in costs for the quadrature path. All are `C²` in `p` and depend
/// only on `d = p − q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericCost {
    /// `‖d‖²`; same cost as [`CostModel::SquaredDistance`], used to cross-check
    /// the two code paths.
    Quadratic,
    /// `‖d‖⁴`.
    Quartic,
    /// `δ² (√(1 + ‖d‖²/δ²) − 1)`.
    PseudoHuber { delta: f64 },
}

impl GenericCost {
    /// Whether `p ↦ f(p, q)` is strictly convex for every `q`, which makes
    /// `J_{E_i}` strictly convex in `p`.
    pub fn is_strictly_convex(&self) -> bool {
        match *self {
            GenericCost::Quadratic | GenericCost::Quartic => true,
            GenericCost::PseudoHuber { delta } => delta > 0.0,
        }
    }

    pub fn value(&self, p: Vec2, q: Vec2) -> f64 {
        let u = (p - q).norm_sq();
        match *self {
            GenericCost::Quadratic => u,
            GenericCost::Quartic => u * u,
            GenericCost::PseudoHuber { delta } => delta * delta * ((1.0 + u / (delta * delta)).sqrt() - 1.0),
        }
    }

    /// `∂f/∂p`.
    pub fn gradient(&self, p: Vec2, q: Vec2) -> Vec2 {
        let d = p - q;
        match *self {
            GenericCost::Quadratic => 2.0 * d,
            GenericCost::Quartic => 4.0 * d.norm_sq() * d,
            GenericCost::PseudoHuber { delta } => d / (1.0 + d.norm_sq() / (delta * delta)).sqrt(),
        }
    }

    /// `∂²f/∂p²`.
    pub fn hessian(&self, p: Vec2, q: Vec2) -> Mat2 {
        let d = p - q;
        let u = d.norm_sq();
        match *self {
            GenericCost::Quadratic => [[2.0, 0.0], [0.0, 2.0]],
            GenericCost::Quartic => [
                [4.0 * u + 8.0 * d.x * d.x, 8.0 * d.x * d.y],
                [8.0 * d.x * d.y, 4.0 * u + 8.0 * d.y * d.y],
            ],
            GenericCost::PseudoHuber { delta } => {
                let d2 = delta * delta;
                let s = (1.0 + u / d2).sqrt();
                let k = 1.0 / (d2 * s * s * s);
                [
                    [1.0 / s - k * d.x * d.x, -k * d.x * d.y],
                    [-k * d.x * d.y, 1.0 / s - k * d.y * d.y],
                ]
            }
        }
    }
}

impl CostModel {
    pub fn value(&self, p: Vec2, q: Vec2) -> f64 {
        match self {
            CostModel::SquaredDistance => (p - q).norm_sq(),
            CostModel::GenericBuiltin { function } => function.value(p, q),
        }
    }

    pub fn gradient(&self, p: Vec2, q: Vec2) -> Vec2 {
        match self {
            CostModel::SquaredDistance => 2.0 * (p - q),
            CostModel::GenericBuiltin { function } => function.gradient(p, q),
        }
    }

    pub fn hessian(&self, p: Vec2, q: Vec2) -> Mat2 {
        match self {
            CostModel::SquaredDistance => [[2.0, 0.0], [0.0, 2.0]],
            CostModel::GenericBuiltin { function } => function.hessian(p, q),
        }
    }

    pub fn is_squared_distance(&self) -> bool {
        matches!(self, CostModel::SquaredDistance)
    }

    pub fn generic(function: GenericCost) -> Self {
        CostModel::GenericBuiltin { function }
    }
}
