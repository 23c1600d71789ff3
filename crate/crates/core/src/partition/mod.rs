//! Partition bars and workload balancing.
//!
//! Agent `i` (zero-based) owns the bar at phase `φ_i` and the sub-region
//! `E_i` swept counter-clockwise from `φ_i` to `φ_{i+1}`, indices mod N. The
//! bars follow
//!
//! ```text
//! φ̇_i = κ_φ (m_i − m_{i−1})
//! ```
//!
//! which telescopes to zero, so the mean phase is conserved.

mod smatrix;
mod xi;

pub use smatrix::{build_s, BalanceMatrix};
pub use xi::{xi_solve, XiRoot};

use serde::{Deserialize, Serialize};

use crate::error::{CoverageError, Result};
use crate::geometry::{wrap_angle, Domain, TAU};

/// Smallest admissible gap between initial bar phases.
pub const MIN_PHASE_SEPARATION: f64 = 1e-6;

/// Angular extent `[start, end]` of a sub-region, with `start ∈ [0, 2π)` and
/// `end − start ∈ [0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularSpan {
    pub start: f64,
    pub end: f64,
}

impl AngularSpan {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// Angle at fraction `t ∈ [0, 1]` of the span.
    pub fn lerp(&self, t: f64) -> f64 {
        self.start + t * self.width()
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        let offset = wrap_angle(theta - self.start);
        offset <= self.width() || self.width() >= TAU
    }
}

/// Bar phases, integrated in unwrapped form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionState {
    unwrapped: Vec<f64>,
    kappa_phi: f64,
}

impl PartitionState {
    /// Validates an initial configuration: phases strictly increasing in
    /// `[0, 2π)` and separated (cyclically) by at least
    /// [`MIN_PHASE_SEPARATION`].
    pub fn new(phases: Vec<f64>, kappa_phi: f64) -> Result<Self> {
        if phases.is_empty() {
            return Err(CoverageError::config("agents.initial_phases", "at least one bar is required"));
        }
        if !(kappa_phi >= 0.0 && kappa_phi.is_finite()) {
            return Err(CoverageError::config("gains.kappa_phi", "must be a finite non-negative gain"));
        }
        for (i, &p) in phases.iter().enumerate() {
            if !(0.0..TAU).contains(&p) {
                return Err(CoverageError::config(
                    "agents.initial_phases",
                    format!("phase {i} = {p} is outside [0, 2π)"),
                ));
            }
        }
        let n = phases.len();
        if n > 1 {
            for i in 0..n {
                let gap = if i + 1 < n {
                    phases[i + 1] - phases[i]
                } else {
                    phases[0] + TAU - phases[n - 1]
                };
                if gap < MIN_PHASE_SEPARATION {
                    return Err(CoverageError::config(
                        "agents.initial_phases",
                        "initial phases not strictly separated",
                    ));
                }
            }
        }
        Ok(PartitionState {
            unwrapped: phases,
            kappa_phi,
        })
    }

    /// Evenly spaced bars starting at `offset`.
    pub fn equally_spaced(n: usize, offset: f64, kappa_phi: f64) -> Result<Self> {
        let mut phases: Vec<f64> = (0..n).map(|i| wrap_angle(offset + TAU * i as f64 / n as f64)).collect();
        phases.sort_by(f64::total_cmp);
        Self::new(phases, kappa_phi)
    }

    /// Wraps already-integrated phases without re-validating them.
    pub fn from_unwrapped(unwrapped: Vec<f64>, kappa_phi: f64) -> Self {
        PartitionState { unwrapped, kappa_phi }
    }

    pub fn with_unwrapped(&self, unwrapped: Vec<f64>) -> Self {
        debug_assert_eq!(unwrapped.len(), self.unwrapped.len());
        PartitionState {
            unwrapped,
            kappa_phi: self.kappa_phi,
        }
    }

    pub fn len(&self) -> usize {
        self.unwrapped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unwrapped.is_empty()
    }

    pub fn kappa_phi(&self) -> f64 {
        self.kappa_phi
    }

    pub fn unwrapped(&self) -> &[f64] {
        &self.unwrapped
    }

    pub fn wrapped(&self) -> Vec<f64> {
        self.unwrapped.iter().map(|&p| wrap_angle(p)).collect()
    }

    pub fn wrapped_phase(&self, i: usize) -> f64 {
        wrap_angle(self.unwrapped[i])
    }

    pub fn mean_phase(&self) -> f64 {
        self.unwrapped.iter().sum::<f64>() / self.len() as f64
    }

    /// True while the unwrapped bars keep their initial cyclic order.
    pub fn cyclic_order_preserved(&self) -> bool {
        let n = self.len();
        if n < 2 {
            return true;
        }
        self.unwrapped.windows(2).all(|w| w[1] > w[0]) && self.unwrapped[n - 1] < self.unwrapped[0] + TAU
    }

    /// Angular extent of sub-region `i`: from bar `i` to bar `i + 1`, taking
    /// the wrap-around branch when the next bar's wrapped phase is smaller.
    /// With a single bar the sub-region is the whole circle.
    pub fn span(&self, i: usize) -> AngularSpan {
        let n = self.len();
        let start = self.wrapped_phase(i);
        if n == 1 {
            return AngularSpan {
                start,
                end: start + TAU,
            };
        }
        let next = self.wrapped_phase((i + 1) % n);
        let end = if next < start { next + TAU } else { next };
        AngularSpan { start, end }
    }
}

/// Workload of every sub-region together with the equitable share
/// `m̄ = (1/N) ∫ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadVector {
    pub values: Vec<f64>,
    pub mean: f64,
}

impl WorkloadVector {
    pub fn new(values: Vec<f64>, mean: f64) -> Self {
        WorkloadVector { values, mean }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `m_i − m_{i−1}` with `m_{−1} = m_{N−1}`.
    pub fn differences(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| self.values[i] - self.values[(i + n - 1) % n]).collect()
    }

    /// `max_i |m_i − m̄| / m̄`.
    pub fn max_relative_imbalance(&self) -> f64 {
        self.values
            .iter()
            .map(|m| (m - self.mean).abs() / self.mean)
            .fold(0.0, f64::max)
    }
}

/// Equitable share for `n` agents.
pub fn mean_workload(domain: &Domain, n: usize) -> f64 {
    domain.total_workload() / n as f64
}

pub fn subregion_workload(state: &PartitionState, domain: &Domain, i: usize) -> f64 {
    let span = state.span(i);
    domain.profile().slice_mass(span.start, span.end)
}

pub fn workloads(state: &PartitionState, domain: &Domain) -> WorkloadVector {
    let values = (0..state.len()).map(|i| subregion_workload(state, domain, i)).collect();
    WorkloadVector::new(values, mean_workload(domain, state.len()))
}

/// `κ_φ (m_i − m_{i−1})` for every bar.
pub fn balancing_rates(kappa_phi: f64, workloads: &WorkloadVector) -> Vec<f64> {
    workloads.differences().into_iter().map(|d| kappa_phi * d).collect()
}

pub fn partition_rhs(state: &PartitionState, domain: &Domain) -> Vec<f64> {
    balancing_rates(state.kappa_phi(), &workloads(state, domain))
}

/// `V = ½ Σ (m_i − m̄)²`.
pub fn lyapunov(workloads: &WorkloadVector) -> f64 {
    0.5 * workloads.values.iter().map(|m| (m - workloads.mean).powi(2)).sum::<f64>()
}

pub fn lyapunov_v(state: &PartitionState, domain: &Domain) -> f64 {
    lyapunov(&workloads(state, domain))
}

/// Step-acceptance predicate: every workload strictly above `floor`.
pub fn min_workload_guard(workloads: &WorkloadVector, floor: f64) -> bool {
    workloads.min() > floor
}

/// Decay constants for `|m_i − m_{i−1}| ≤ c₁ e^{−c₂ t}` and
/// `V(t) ≤ V(0) e^{−2 c₂ t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    pub c1: f64,
    pub c2: f64,
    pub v0: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub lambda_min: f64,
}

pub const OMEGA_GRID: usize = 2048;

pub fn convergence_constants(initial: &PartitionState, domain: &Domain) -> Result<ConvergenceConstants> {
    let n = initial.len();
    let (omega_min, omega_max) = domain.omega_extrema(OMEGA_GRID)?;
    let lambda_min = build_s(n)?.lambda_min;
    let v0 = lyapunov_v(initial, domain);
    Ok(ConvergenceConstants {
        c1: (2.0 * v0).sqrt(),
        c2: initial.kappa_phi() * omega_min * lambda_min / n as f64,
        v0,
        omega_min,
        omega_max,
        lambda_min,
    })
}
