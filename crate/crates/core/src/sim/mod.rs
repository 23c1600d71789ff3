//! Coupled integration of bars and agents, trajectory logs and the invariant
//! checks run against them.

mod config;
mod integrator;
mod log;
mod verify;

pub use config::{AgentsSpec, GainsSpec, IntegratorSpec, OutputSpec, Scenario, ScenarioConfig, SearchSpec};
pub use integrator::{rk4_step, CoupledSystem, StepOutcome, SystemState, MAX_HALVINGS, WORKLOAD_FLOOR_FRACTION};
pub use log::{EpochRecord, Record, RunStatus, TrajectoryLog};
pub use verify::{verify_invariants, Check, CheckStatus, VerificationReport, TREND_HORIZON};

use crate::agents::cost_j;
use crate::agents::AgentState;
use crate::error::{CoverageError, Result};
use crate::geometry::{Domain, Moments, Vec2};
use crate::partition::lyapunov;

/// Time step used for the centroid-velocity finite difference.
const CENTROID_FD_STEP: f64 = 1e-4;

/// A run that stopped early, with everything logged up to the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: CoverageError,
    pub log: TrajectoryLog,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} records kept)", self.error, self.log.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// `η(θ, s)` from the cached angular profile.
fn eta_fast(domain: &Domain, theta: f64, s: Vec2) -> f64 {
    let m = domain.profile().density_at(theta);
    m.second + s.norm_sq() * m.mass - 2.0 * s.dot(m.first)
}

fn centroids_of(moments: &[Moments]) -> Vec<Vec2> {
    moments.iter().map(|m| m.first / m.mass).collect()
}

/// Per-step facts folded into the next record.
#[derive(Debug, Clone, Copy)]
struct Window {
    min_workload: f64,
    excursion: bool,
    halvings: u32,
}

impl Window {
    fn new() -> Self {
        Window {
            min_workload: f64::INFINITY,
            excursion: false,
            halvings: 0,
        }
    }

    fn observe(&mut self, sys: &CoupledSystem<'_>, state: &SystemState, halvings: u32) {
        let w = sys.workloads_from(&sys.moments(&sys.partition(&state.phases)));
        self.min_workload = self.min_workload.min(w.min());
        self.excursion |= state.positions.iter().any(|p| !sys.domain.contains(*p));
        self.halvings = self.halvings.max(halvings);
    }
}

/// Builds the log record for a state.
pub fn record_state(sys: &CoupledSystem<'_>, state: &SystemState, t: f64) -> Result<Record> {
    let mut window = Window::new();
    window.observe(sys, state, 0);
    make_record(sys, state, t, window)
}

fn make_record(sys: &CoupledSystem<'_>, state: &SystemState, t: f64, window: Window) -> Result<Record> {
    let n = state.len();
    let partition = sys.partition(&state.phases);
    let moments = sys.moments(&partition);
    let w = sys.workloads_from(&moments);
    let rates = sys.bar_rates(&w);
    let targets = sys.targets_from(&partition, &moments, Some(&state.positions))?;
    let centroids = centroids_of(&moments);

    let j = if sys.cost.is_squared_distance() {
        moments
            .iter()
            .zip(&state.positions)
            .map(|(m, p)| m.squared_distance_cost(*p))
            .sum()
    } else {
        let agents = AgentState::new(state.positions.clone(), sys.kappa_p);
        cost_j(&partition, &agents, sys.domain, &sys.cost)?
    };
    let h = moments
        .iter()
        .zip(&state.positions)
        .zip(&centroids)
        .map(|((m, p), c)| m.mass * (*p - *c).norm_sq())
        .sum();
    let phi_dot_norm = rates.iter().map(|r| r * r).sum::<f64>().sqrt();
    let max_p_dot = state
        .positions
        .iter()
        .zip(&targets)
        .map(|(p, q)| sys.kappa_p * (*p - *q).norm())
        .fold(0.0, f64::max);

    let max_centroid_speed = if phi_dot_norm > 0.0 {
        let shifted = |sign: f64| {
            let phases: Vec<f64> = state
                .phases
                .iter()
                .zip(&rates)
                .map(|(p, r)| p + sign * CENTROID_FD_STEP * r)
                .collect();
            centroids_of(&sys.moments(&sys.partition(&phases)))
        };
        let (fwd, back) = (shifted(1.0), shifted(-1.0));
        fwd.iter()
            .zip(&back)
            .map(|(a, b)| (*a - *b).norm() / (2.0 * CENTROID_FD_STEP))
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let e_eta_norm = (0..n)
        .map(|i| {
            let prev = (i + n - 1) % n;
            let theta = partition.wrapped_phase(i);
            let e = eta_fast(sys.domain, theta, state.positions[prev]) - eta_fast(sys.domain, theta, state.positions[i])
                - eta_fast(sys.domain, theta, centroids[prev])
                + eta_fast(sys.domain, theta, centroids[i]);
            e * e
        })
        .sum::<f64>()
        .sqrt();

    Ok(Record {
        t,
        phases: partition.wrapped(),
        unwrapped: state.phases.clone(),
        positions: state.positions.clone(),
        targets,
        centroids,
        v: lyapunov(&w),
        workloads: w.values,
        mean_workload: w.mean,
        j,
        h,
        phi_dot_norm,
        max_p_dot,
        max_centroid_speed,
        e_eta_norm,
        min_step_workload: window.min_workload,
        excursion: window.excursion,
        halvings: window.halvings,
    })
}

/// Number of integrator steps covering `[0, t_end]` at step `dt`; the last
/// step is shortened when `t_end` is not a multiple of `dt`.
pub fn step_count(dt: f64, t_end: f64) -> usize {
    ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Integrates a system from `state` over `[t0, t0 + duration]` without
/// logging. Returns the final state and the total number of halvings.
pub fn integrate_for(
    sys: &CoupledSystem<'_>,
    mut state: SystemState,
    t0: f64,
    duration: f64,
    dt: f64,
) -> Result<(SystemState, u64)> {
    let steps = step_count(dt, duration);
    let mut halvings = 0u64;
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * dt;
        let h = if k == steps { duration - t_prev } else { dt };
        let out = sys.advance(&state, t0 + t_prev, h)?;
        halvings += u64::from(out.halvings);
        state = out.state;
    }
    Ok((state, halvings))
}

/// Integrates the scenario to `t_end`, recording every `log_stride` steps
/// and at the final time.
pub fn run_scenario(scenario: &Scenario) -> Result<TrajectoryLog, Box<RunFailure>> {
    let config = scenario.config();
    let spec = scenario.integrator();
    let sys = CoupledSystem {
        domain: scenario.domain(),
        cost: scenario.cost(),
        kappa_phi: config.gains.kappa_phi,
        kappa_p: config.gains.kappa_p,
        pinned: None,
    };
    let mut log = TrajectoryLog::new(config.clone());
    let fail = |mut log: TrajectoryLog, time: f64, error: CoverageError| {
        log.status = RunStatus::Failed {
            time,
            message: error.to_string(),
        };
        Box::new(RunFailure { error, log })
    };

    let mut state = SystemState {
        phases: scenario.initial_partition().unwrapped().to_vec(),
        positions: scenario.initial_agents().positions.clone(),
    };
    match record_state(&sys, &state, 0.0) {
        Ok(r) => log.records.push(r),
        Err(e) => return Err(fail(log, 0.0, e)),
    }

    let steps = step_count(spec.dt, spec.t_end);
    ::log::info!(
        "integrating {} agents over [0, {}] in {steps} steps of {}",
        scenario.len(),
        spec.t_end,
        spec.dt
    );
    let mut window = Window::new();
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * spec.dt;
        let h = if k == steps { spec.t_end - t_prev } else { spec.dt };
        let out = match sys.advance(&state, t_prev, h) {
            Ok(o) => o,
            Err(e) => return Err(fail(log, t_prev, e)),
        };
        log.total_halvings += u64::from(out.halvings);
        state = out.state;
        window.observe(&sys, &state, out.halvings);
        if k % spec.log_stride == 0 || k == steps {
            let t = if k == steps { spec.t_end } else { k as f64 * spec.dt };
            match make_record(&sys, &state, t, window) {
                Ok(r) => log.records.push(r),
                Err(e) => return Err(fail(log, t, e)),
            }
            window = Window::new();
        }
    }
    ::log::info!("run complete: {} records, {} step halvings", log.len(), log.total_halvings);
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PartitionState;

    fn uniform_config(t_end: f64, stride: usize) -> String {
        format!(
            r#"{{
            "region": {{"inner": {{"mean": 1.0}}, "outer": {{"mean": 2.0}}}},
            "density": {{"kind": "uniform"}},
            "agents": {{"count": 2, "initial_phases": [0.0, 1.5707963267948966],
                       "initial_positions": [[1.5, 0.5], [-1.5, 0.0]]}},
            "gains": {{"kappa_phi": 0.03, "kappa_p": 0.1}},
            "integrator": {{"dt": 0.01, "t_end": {t_end}, "log_stride": {stride}}}
        }}"#
        )
    }

    #[test]
    fn record_count_matches_stride() {
        for (t_end, stride) in [(1.0, 10), (1.0, 3), (0.5, 7), (0.01, 1)] {
            let s = Scenario::from_json(&uniform_config(t_end, stride)).unwrap();
            let log = run_scenario(&s).unwrap();
            let expected = (t_end / (0.01 * stride as f64) - 1e-9).ceil() as usize + 1;
            assert_eq!(log.len(), expected, "t_end {t_end} stride {stride}");
            assert!(log.records.windows(2).all(|w| w[1].t > w[0].t));
            assert_eq!(log.last().unwrap().t, t_end);
        }
    }

    #[test]
    fn deterministic() {
        let s = Scenario::from_json(&uniform_config(2.0, 5)).unwrap();
        assert_eq!(run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
    }

    #[test]
    fn equilibrium_is_stationary() {
        let domain = Domain::uniform_annulus(1.0, 2.0, 1.0).unwrap();
        let part = PartitionState::equally_spaced(4, 0.3, 0.03).unwrap();
        let sys = CoupledSystem {
            domain: &domain,
            cost: Default::default(),
            kappa_phi: 0.03,
            kappa_p: 0.1,
            pinned: None,
        };
        let targets = sys.targets(&part).unwrap();
        let state = SystemState {
            phases: part.unwrapped().to_vec(),
            positions: targets,
        };
        let (end, halvings) = integrate_for(&sys, state.clone(), 0.0, 5.0, 0.01).unwrap();
        assert_eq!(halvings, 0);
        for i in 0..4 {
            assert!((end.phases[i] - state.phases[i]).abs() < 1e-12);
            assert!((end.positions[i] - state.positions[i]).norm() < 1e-12);
        }
        let r = record_state(&sys, &end, 5.0).unwrap();
        assert!(r.v < 1e-24 && r.h < 1e-24 && r.phi_dot_norm < 1e-12);
    }

    #[test]
    fn pinned_bar_stays_put() {
        let domain = Domain::case_study();
        let sys = CoupledSystem {
            domain: &domain,
            cost: Default::default(),
            kappa_phi: 0.03,
            kappa_p: 0.1,
            pinned: Some(1),
        };
        let state = SystemState {
            phases: vec![0.2, 1.0, 3.0],
            positions: vec![Vec2::new(2.0, 0.5), Vec2::new(-1.0, 2.0), Vec2::new(0.0, -2.5)],
        };
        let (end, _) = integrate_for(&sys, state, 0.0, 3.0, 0.01).unwrap();
        assert_eq!(end.phases[1], 1.0);
        assert_ne!(end.phases[0], 0.2);
    }
}
