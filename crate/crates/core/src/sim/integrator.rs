//! Fixed-step RK4 over the stacked state `(φ_1..φ_N, x_1, y_1, .., x_N, y_N)`.

use crate::agents::{optimal_target_near, subregion_moments, CostModel};
use crate::error::{CoverageError, Result};
use crate::geometry::{Domain, Moments, Vec2};
use crate::partition::{balancing_rates, mean_workload, workloads, PartitionState, WorkloadVector};

/// Step halvings tried before a guard violation becomes an error.
pub const MAX_HALVINGS: u32 = 8;
/// Workloads at or below this fraction of `m̄` count as a bar collision.
pub const WORKLOAD_FLOOR_FRACTION: f64 = 1e-9;

/// One classical Runge–Kutta step of `ẋ = f(t, x)`.
pub fn rk4_step<F>(state: &[f64], t: f64, dt: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let n = state.len();
    let k1 = f(t, state)?;
    let mut scratch: Vec<f64> = (0..n).map(|i| state[i] + 0.5 * dt * k1[i]).collect();
    let k2 = f(t + 0.5 * dt, &scratch)?;
    for i in 0..n {
        scratch[i] = state[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &scratch)?;
    for i in 0..n {
        scratch[i] = state[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &scratch)?;
    Ok((0..n)
        .map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Coupled bar and agent dynamics over a fixed domain.
#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    pub domain: &'a Domain,
    pub cost: CostModel,
    pub kappa_phi: f64,
    pub kappa_p: f64,
    /// Bar held fixed (rate zeroed), used by anchored search epochs.
    pub pinned: Option<usize>,
}

/// Stacked integration state.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub phases: Vec<f64>,
    pub positions: Vec<Vec2>,
}

impl SystemState {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.phases.clone();
        for p in &self.positions {
            v.push(p.x);
            v.push(p.y);
        }
        v
    }

    pub fn from_slice(n: usize, v: &[f64]) -> Self {
        SystemState {
            phases: v[..n].to_vec(),
            positions: (0..n).map(|i| Vec2::new(v[n + 2 * i], v[n + 2 * i + 1])).collect(),
        }
    }
}

/// Result of one accepted step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SystemState,
    pub halvings: u32,
}

impl CoupledSystem<'_> {
    pub fn partition(&self, phases: &[f64]) -> PartitionState {
        PartitionState::from_unwrapped(phases.to_vec(), self.kappa_phi)
    }

    pub fn moments(&self, partition: &PartitionState) -> Vec<Moments> {
        (0..partition.len()).map(|i| subregion_moments(partition, self.domain, i)).collect()
    }

    pub fn workloads_from(&self, moments: &[Moments]) -> WorkloadVector {
        WorkloadVector::new(
            moments.iter().map(|m| m.mass).collect(),
            mean_workload(self.domain, moments.len()),
        )
    }

    /// Agent targets for a partition whose sub-region moments are known.
    /// `hints` (usually the agent positions) seed the generic-cost search.
    pub fn targets_from(&self, partition: &PartitionState, moments: &[Moments], hints: Option<&[Vec2]>) -> Result<Vec<Vec2>> {
        moments
            .iter()
            .enumerate()
            .map(|(i, m)| match self.cost {
                CostModel::SquaredDistance => {
                    if m.mass <= 0.0 {
                        Err(CoverageError::DegenerateSubregion {
                            index: i,
                            workload: m.mass,
                        })
                    } else {
                        Ok(m.first / m.mass)
                    }
                }
                _ => optimal_target_near(partition, self.domain, &self.cost, i, hints.map(|h| h[i])),
            })
            .collect()
    }

    pub fn targets(&self, partition: &PartitionState) -> Result<Vec<Vec2>> {
        self.targets_from(partition, &self.moments(partition), None)
    }

    /// Bar rates with the pinned bar (if any) held still.
    pub fn bar_rates(&self, w: &WorkloadVector) -> Vec<f64> {
        let mut rates = balancing_rates(self.kappa_phi, w);
        if let Some(k) = self.pinned {
            rates[k] = 0.0;
        }
        rates
    }

    /// `(φ̇, ṗ)` at a state.
    pub fn derivative(&self, state: &SystemState) -> Result<(Vec<f64>, Vec<Vec2>)> {
        let partition = self.partition(&state.phases);
        let moments = self.moments(&partition);
        let rates = self.bar_rates(&self.workloads_from(&moments));
        let targets = self.targets_from(&partition, &moments, Some(&state.positions))?;
        let velocities = state
            .positions
            .iter()
            .zip(&targets)
            .map(|(p, t)| -self.kappa_p * (*p - *t))
            .collect();
        Ok((rates, velocities))
    }

    fn stacked_derivative(&self, n: usize, v: &[f64]) -> Result<Vec<f64>> {
        let (rates, vel) = self.derivative(&SystemState::from_slice(n, v))?;
        Ok(SystemState {
            phases: rates,
            positions: vel,
        }
        .to_vec())
    }

    /// Bars in cyclic order with every workload above the collision floor.
    pub fn guard_ok(&self, state: &SystemState) -> bool {
        let partition = self.partition(&state.phases);
        if !partition.cyclic_order_preserved() {
            return false;
        }
        let w = workloads(&partition, self.domain);
        w.min() > WORKLOAD_FLOOR_FRACTION * w.mean
    }

    /// Advance by `dt`, halving the substep (up to [`MAX_HALVINGS`] times)
    /// while any substep would breach the guard.
    pub fn advance(&self, state: &SystemState, t: f64, dt: f64) -> Result<StepOutcome> {
        let n = state.len();
        let start = state.to_vec();
        for halvings in 0..=MAX_HALVINGS {
            let substeps = 1usize << halvings;
            let h = dt / substeps as f64;
            let mut v = start.clone();
            let mut ok = true;
            for s in 0..substeps {
                v = rk4_step(&v, t + s as f64 * h, h, |_, x| self.stacked_derivative(n, x))?;
                if !self.guard_ok(&SystemState::from_slice(n, &v)) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(StepOutcome {
                    state: SystemState::from_slice(n, &v),
                    halvings,
                });
            }
            log::debug!("guard tripped at t = {t}, halving step to {}", h / 2.0);
        }
        Err(CoverageError::GuardExhausted {
            time: t,
            halvings: MAX_HALVINGS,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_derivative_leaves_state() {
        let x = vec![1.0, -2.0, 3.5];
        let y = rk4_step(&x, 0.0, 0.1, |_, s| Ok(vec![0.0; s.len()])).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn exponential_decay_step() {
        let y = rk4_step(&[1.0], 0.0, 0.1, |_, s| Ok(vec![-s[0]])).unwrap();
        // 1 − h + h²/2 − h³/6 + h⁴/24
        let taylor = 1.0 - 0.1 + 0.005 - 0.001 / 6.0 + 0.0001 / 24.0;
        assert!((y[0] - taylor).abs() < 1e-15);
        assert!((y[0] - 0.904_837_5).abs() < 1e-7);
    }

    #[test]
    fn frozen_partition_tracks_exponential() {
        let domain = Domain::case_study();
        let sys = CoupledSystem {
            domain: &domain,
            cost: CostModel::SquaredDistance,
            kappa_phi: 0.0,
            kappa_p: 0.1,
            pinned: None,
        };
        let phases = vec![0.3, 2.0, 4.1];
        let part = sys.partition(&phases);
        let targets = sys.targets(&part).unwrap();
        let p0 = vec![Vec2::new(2.0, 0.2), Vec2::new(-1.5, 1.5), Vec2::new(0.5, -2.0)];
        let mut state = SystemState {
            phases: phases.clone(),
            positions: p0.clone(),
        };
        let dt = 0.01;
        for k in 0..1000 {
            state = sys.advance(&state, k as f64 * dt, dt).unwrap().state;
        }
        assert_eq!(state.phases, phases);
        let decay = (-0.1f64 * 10.0).exp();
        for i in 0..3 {
            let exact = targets[i] + (p0[i] - targets[i]) * decay;
            assert!((state.positions[i] - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn stacking_round_trip() {
        let s = SystemState {
            phases: vec![0.1, 0.2],
            positions: vec![Vec2::new(1.0, 2.0), Vec2::new(3.0, 4.0)],
        };
        let v = s.to_vec();
        assert_eq!(v, vec![0.1, 0.2, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(SystemState::from_slice(2, &v), s);
    }
}
