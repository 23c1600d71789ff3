//! Agents, service cost and the deployment control law.
//!
//! For a fixed partition each agent minimizes its sub-region cost
//! `J_{E_i}(p) = ∫_{E_i} f(p, q) ρ(q) dq`. With the squared-distance cost the
//! minimizer is the centroid of `E_i`, and every quantity here reduces to the
//! sub-region moments; other costs go through quadrature.

mod cost;
mod miranda;
mod target;

pub use cost::{CostModel, GenericCost, Mat2};
pub use miranda::{miranda_existence_test, AxisBox};
pub use target::{optimal_target, optimal_target_near, TARGET_BOUNDARY_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::error::{CoverageError, Result};
use crate::geometry::{Domain, Moments, Vec2};
use crate::partition::PartitionState;

/// Agent positions, their current targets and the position gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub positions: Vec<Vec2>,
    pub targets: Vec<Vec2>,
    pub kappa_p: f64,
}

impl AgentState {
    /// Targets start at the agents' own positions until refreshed.
    pub fn new(positions: Vec<Vec2>, kappa_p: f64) -> Self {
        let targets = positions.clone();
        AgentState {
            positions,
            targets,
            kappa_p,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Recompute every target for the given partition.
    pub fn refresh_targets(&mut self, partition: &PartitionState, domain: &Domain, cost: &CostModel) -> Result<()> {
        for i in 0..self.len() {
            self.targets[i] = optimal_target(partition, domain, cost, i)?;
        }
        Ok(())
    }
}

/// `u_i = −κ_p (p_i − p_i*)`.
pub fn control_input(agents: &AgentState, i: usize) -> Vec2 {
    -agents.kappa_p * (agents.positions[i] - agents.targets[i])
}

pub fn subregion_moments(partition: &PartitionState, domain: &Domain, i: usize) -> Moments {
    let span = partition.span(i);
    domain.profile().slice(span.start, span.end)
}

fn centroid_of(moments: &Moments, i: usize) -> Result<Vec2> {
    if moments.mass <= 0.0 {
        return Err(CoverageError::DegenerateSubregion {
            index: i,
            workload: moments.mass,
        });
    }
    Ok(moments.first / moments.mass)
}

/// Density-weighted centroid of `E_i`.
pub fn centroid(partition: &PartitionState, domain: &Domain, i: usize) -> Result<Vec2> {
    centroid_of(&subregion_moments(partition, domain, i), i)
}

pub fn centroids(partition: &PartitionState, domain: &Domain) -> Result<Vec<Vec2>> {
    (0..partition.len()).map(|i| centroid(partition, domain, i)).collect()
}

/// `J_{E_i}(p)` for an agent placed at `p`.
pub fn subregion_cost(partition: &PartitionState, domain: &Domain, cost: &CostModel, i: usize, p: Vec2) -> Result<f64> {
    match cost {
        CostModel::SquaredDistance => Ok(subregion_moments(partition, domain, i).squared_distance_cost(p)),
        CostModel::GenericBuiltin { function } => {
            let span = partition.span(i);
            domain
                .region_integral_vec(span.start, span.end, |q| [function.value(p, q)])
                .map(|v| v[0])
        }
    }
}

/// Total service cost `J(φ, p) = Σ_i J_{E_i}(p_i)`.
pub fn cost_j(partition: &PartitionState, agents: &AgentState, domain: &Domain, cost: &CostModel) -> Result<f64> {
    (0..partition.len())
        .map(|i| subregion_cost(partition, domain, cost, i, agents.positions[i]))
        .sum()
}

/// `∇_{p} J_{E_i}` at an arbitrary point.
pub fn subregion_gradient(
    partition: &PartitionState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
    p: Vec2,
) -> Result<Vec2> {
    match cost {
        CostModel::SquaredDistance => {
            let m = subregion_moments(partition, domain, i);
            // 2 m_i (p − c_{E_i}) without dividing by m_i
            Ok(2.0 * (m.mass * p - m.first))
        }
        CostModel::GenericBuiltin { function } => {
            let span = partition.span(i);
            let v = domain.region_integral_vec(span.start, span.end, |q| {
                let g = function.gradient(p, q);
                [g.x, g.y]
            })?;
            Ok(Vec2::new(v[0], v[1]))
        }
    }
}

pub fn grad_j(
    partition: &PartitionState,
    agents: &AgentState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
) -> Result<Vec2> {
    subregion_gradient(partition, domain, cost, i, agents.positions[i])
}

/// Hessian of `J` with respect to `p_i` and its numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianReport {
    pub matrix: Mat2,
    pub rank: usize,
}

impl HessianReport {
    fn new(matrix: Mat2) -> Self {
        HessianReport {
            matrix,
            rank: numerical_rank(&matrix),
        }
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == 2
    }
}

pub const RANK_RTOL: f64 = 1e-8;

/// Rank of a 2×2 matrix from its singular values, relative threshold
/// [`RANK_RTOL`].
pub fn numerical_rank(m: &Mat2) -> usize {
    let sv = nalgebra::Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_RTOL * max).count()
}

/// Step for the central-difference Hessian of the generic path.
const HESSIAN_STEP: f64 = 1e-4;

pub fn subregion_hessian(
    partition: &PartitionState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
    p: Vec2,
) -> Result<HessianReport> {
    match cost {
        CostModel::SquaredDistance => {
            let m = subregion_moments(partition, domain, i).mass;
            Ok(HessianReport::new([[2.0 * m, 0.0], [0.0, 2.0 * m]]))
        }
        CostModel::GenericBuiltin { .. } => {
            let h = HESSIAN_STEP * p.norm().max(1.0);
            let mut cols = [Vec2::ZERO; 2];
            for (j, e) in [Vec2::new(h, 0.0), Vec2::new(0.0, h)].into_iter().enumerate() {
                let plus = subregion_gradient(partition, domain, cost, i, p + e)?;
                let minus = subregion_gradient(partition, domain, cost, i, p - e)?;
                cols[j] = (plus - minus) / (2.0 * h);
            }
            let off = 0.5 * (cols[1].x + cols[0].y);
            Ok(HessianReport::new([[cols[0].x, off], [off, cols[1].y]]))
        }
    }
}

pub fn hessian_j(
    partition: &PartitionState,
    agents: &AgentState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
) -> Result<HessianReport> {
    subregion_hessian(partition, domain, cost, i, agents.positions[i])
}

/// `η(θ, s) = ∫ ‖s − q(r, θ)‖² ρ r dr` expanded into radial moments.
pub fn eta(domain: &Domain, theta: f64, s: Vec2) -> Result<f64> {
    let m = domain.radial_moments(theta)?;
    Ok(m.second + s.norm_sq() * m.mass - 2.0 * s.dot(m.first))
}

/// Parallel-axis split of the squared-distance cost:
/// `J = Σ ∫_{E_i} ρ ‖q − c_i‖² + Σ m_i ‖p_i − c_i‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostDecomposition {
    /// `Σ ∫_{E_i} ρ ‖q − c_i‖²`.
    pub spread: f64,
    /// `H = Σ m_i ‖p_i − c_i‖²`.
    pub offset: f64,
}

pub fn parallel_axis(partition: &PartitionState, agents: &AgentState, domain: &Domain) -> Result<CostDecomposition> {
    let mut spread = 0.0;
    let mut offset = 0.0;
    for i in 0..partition.len() {
        let m = subregion_moments(partition, domain, i);
        let c = centroid_of(&m, i)?;
        spread += m.spread();
        offset += m.mass * (agents.positions[i] - c).norm_sq();
    }
    Ok(CostDecomposition { spread, offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Weight, TAU};
    use std::f64::consts::{FRAC_PI_4, PI};

    fn uniform() -> Domain {
        Domain::uniform_annulus(1.0, 2.0, 1.0).unwrap()
    }

    /// Bars at ±π/4; sub-region 1 is the sector `[−π/4, π/4]`.
    fn sector_partition() -> PartitionState {
        PartitionState::new(vec![FRAC_PI_4, TAU - FRAC_PI_4], 0.0).unwrap()
    }

    const SECTOR_CX: f64 = 28.0 * std::f64::consts::SQRT_2 / (9.0 * PI);

    #[test]
    fn sector_centroid() {
        let d = uniform();
        let s = sector_partition();
        // sub-region 1 runs from 7π/4 through 0 to π/4
        let c = centroid(&s, &d, 1).unwrap();
        assert!((c.x - SECTOR_CX).abs() < 1e-12);
        assert!(c.y.abs() < 1e-12);
        assert!((c.x - 1.4005).abs() < 1e-4);
    }

    #[test]
    fn full_circle_centroid_at_origin() {
        let d = uniform();
        let s = PartitionState::new(vec![0.3], 0.0).unwrap();
        assert!(centroid(&s, &d, 0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn centroid_rotates_with_slice() {
        let d = uniform();
        let a = PartitionState::new(vec![0.2, 1.1], 0.0).unwrap();
        let alpha = 0.9;
        let b = PartitionState::new(vec![0.2 + alpha, 1.1 + alpha], 0.0).unwrap();
        let ca = centroid(&a, &d, 0).unwrap().rotate(alpha);
        let cb = centroid(&b, &d, 0).unwrap();
        assert!((ca - cb).norm() < 1e-12);
    }

    #[test]
    fn degenerate_subregion() {
        let d = uniform();
        let s = PartitionState::from_unwrapped(vec![1.0, 1.0], 0.0);
        assert!(matches!(
            centroid(&s, &d, 0),
            Err(CoverageError::DegenerateSubregion { index: 0, .. })
        ));
    }

    #[test]
    fn single_agent_cost_at_origin() {
        let d = uniform();
        let s = PartitionState::new(vec![0.0], 0.0).unwrap();
        let a = AgentState::new(vec![Vec2::ZERO], 0.1);
        let j = cost_j(&s, &a, &d, &CostModel::SquaredDistance).unwrap();
        assert!((j - 7.5 * PI).abs() < 1e-11);
        let jg = cost_j(&s, &a, &d, &CostModel::generic(GenericCost::Quadratic)).unwrap();
        assert!((jg - 7.5 * PI).abs() < 1e-9);
    }

    #[test]
    fn gradient_at_origin_for_sector() {
        let d = uniform();
        let s = sector_partition();
        let g = subregion_gradient(&s, &d, &CostModel::SquaredDistance, 1, Vec2::ZERO).unwrap();
        assert!((g.x + 1.5 * PI * SECTOR_CX).abs() < 1e-11);
        assert!((g.x + 6.5997).abs() < 1e-4);
        assert!(g.y.abs() < 1e-12);
        let c = centroid(&s, &d, 1).unwrap();
        let g0 = subregion_gradient(&s, &d, &CostModel::SquaredDistance, 1, c).unwrap();
        assert!(g0.norm() < 1e-12);
    }

    #[test]
    fn control_law() {
        let mut a = AgentState::new(vec![Vec2::new(1.0, 0.0)], 0.1);
        a.targets[0] = Vec2::ZERO;
        let u = control_input(&a, 0);
        assert!((u.x + 0.1).abs() < 1e-15 && u.y == 0.0);
        a.positions[0] = Vec2::new(2.0, 0.0);
        assert!((control_input(&a, 0).x + 0.2).abs() < 1e-15);
        a.targets[0] = a.positions[0];
        assert_eq!(control_input(&a, 0), Vec2::ZERO);
    }

    #[test]
    fn squared_distance_hessian() {
        let d = uniform();
        let s = PartitionState::new(vec![0.0, PI / 2.0], 0.0).unwrap();
        let h = subregion_hessian(&s, &d, &CostModel::SquaredDistance, 0, Vec2::new(1.0, 1.0)).unwrap();
        assert!((h.matrix[0][0] - 1.5 * PI).abs() < 1e-12);
        assert!((h.matrix[1][1] - 1.5 * PI).abs() < 1e-12);
        assert_eq!(h.matrix[0][1], 0.0);
        assert_eq!(h.rank, 2);
        let hg = subregion_hessian(&s, &d, &CostModel::generic(GenericCost::Quadratic), 0, Vec2::new(1.0, 1.0)).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((hg.matrix[r][c] - h.matrix[r][c]).abs() < 1e-4 * 1.5 * PI);
            }
        }
        assert_eq!(numerical_rank(&[[1.0, 0.0], [0.0, 1e-12]]), 1);
        assert_eq!(numerical_rank(&[[0.0, 0.0], [0.0, 0.0]]), 0);
    }

    #[test]
    fn eta_values() {
        let d = uniform();
        assert!((eta(&d, 0.0, Vec2::ZERO).unwrap() - 3.75).abs() < 1e-13);
        assert!((eta(&d, 0.0, Vec2::new(1.0, 0.0)).unwrap() - 7.0 / 12.0).abs() < 1e-13);
        let cs = Domain::case_study();
        for (theta, s) in [(0.3, Vec2::new(0.5, -1.0)), (2.5, Vec2::new(-2.0, 0.7))] {
            let direct = cs.radial_moment(theta, Weight::Custom(&|q: Vec2| (s - q).norm_sq())).unwrap();
            let expanded = eta(&cs, theta, s).unwrap();
            assert!((direct - expanded).abs() < 1e-10 * direct.abs());
        }
    }

    #[test]
    fn parallel_axis_identity_on_case_study() {
        let d = Domain::case_study();
        let s = PartitionState::new(vec![0.2, 1.4, 3.0, 4.4], 0.0).unwrap();
        let a = AgentState::new(
            vec![
                Vec2::new(2.0, 0.5),
                Vec2::new(-1.0, 2.0),
                Vec2::new(-2.0, -1.0),
                Vec2::new(1.5, -2.0),
            ],
            0.1,
        );
        let j = cost_j(&s, &a, &d, &CostModel::generic(GenericCost::Quadratic)).unwrap();
        let split = parallel_axis(&s, &a, &d).unwrap();
        assert!((j - split.spread - split.offset).abs() < 1e-6 * j);
    }
}
