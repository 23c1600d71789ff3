//! Circular search over anchored bar phases on a synchronous ring.
//!
//! Epoch `k` pins the bar nearest `2π(k − 1)/K*` at that angle and lets the
//! rest of the system relax for `T_ε`. The agents then flood their
//! sub-region costs around the ring, and after `K*` epochs every agent
//! restores the configuration of the cheapest epoch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::{cost_j, subregion_cost, AgentState};
use crate::error::{CoverageError, Result};
use crate::geometry::{circular_distance, signed_angle_diff, wrap_angle, Vec2, TAU};
use crate::partition::PartitionState;
use crate::sim::{integrate_for, record_state, CoupledSystem, EpochRecord, Scenario, SearchSpec, SystemState, TrajectoryLog};

/// Epoch count and duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k_star: usize,
    /// Tolerance `K*` was derived from, if any.
    pub epsilon_p: Option<f64>,
    pub t_epsilon: f64,
}

impl SearchConfig {
    pub fn new(k_star: usize, t_epsilon: f64) -> Result<Self> {
        if k_star == 0 {
            return Err(CoverageError::config("search.k_star", "must be at least 1"));
        }
        if !(t_epsilon.is_finite() && t_epsilon > 0.0) {
            return Err(CoverageError::config("search.t_epsilon", "must be positive"));
        }
        Ok(SearchConfig {
            k_star,
            epsilon_p: None,
            t_epsilon,
        })
    }

    /// An explicit `k_star` takes precedence over `epsilon_p`.
    pub fn from_spec(spec: SearchSpec) -> Result<Self> {
        let k_star = match (spec.k_star, spec.epsilon_p) {
            (Some(k), _) => k,
            (None, Some(eps)) => compute_kstar(eps).map_err(|e| CoverageError::config("search.epsilon_p", e.to_string()))?,
            (None, None) => return Err(CoverageError::config("search", "needs epsilon_p or k_star")),
        };
        let mut cfg = SearchConfig::new(k_star, spec.t_epsilon)?;
        cfg.epsilon_p = spec.epsilon_p;
        Ok(cfg)
    }

    pub fn anchor_angle(&self, k: usize) -> f64 {
        TAU * (k - 1) as f64 / self.k_star as f64
    }
}

/// Smallest `k ≥ 1` with `2π/k ≤ ε_p`.
pub fn compute_kstar(epsilon_p: f64) -> Result<usize> {
    if !(epsilon_p.is_finite() && epsilon_p > 0.0) {
        return Err(CoverageError::InvalidArgument(format!("epsilon_p = {epsilon_p} must be positive")));
    }
    let mut k = ((TAU / epsilon_p).ceil() as usize).max(1);
    while k > 1 && TAU / (k - 1) as f64 <= epsilon_p {
        k -= 1;
    }
    while TAU / k as f64 > epsilon_p {
        k += 1;
    }
    Ok(k)
}

/// Zero-based index of the bar closest (circularly) to the epoch-`k`
/// anchor angle; ties go to the lower index.
pub fn anchor_assignment(phases: &[f64], k: usize, k_star: usize) -> usize {
    let anchor = TAU * (k - 1) as f64 / k_star as f64;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &p) in phases.iter().enumerate() {
        let d = circular_distance(p, anchor);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Set of `(agent id, sub-region cost)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSet(BTreeMap<usize, f64>);

impl CostSet {
    pub fn singleton(id: usize, cost: f64) -> Self {
        CostSet(BTreeMap::from([(id, cost)]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    /// Adds the entries of `other`; returns whether the set grew.
    pub fn union_with(&mut self, other: &CostSet) -> bool {
        let before = self.0.len();
        for (&id, &c) in &other.0 {
            self.0.entry(id).or_insert(c);
        }
        self.0.len() != before
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingMessage {
    pub sender: usize,
    pub epoch: usize,
    pub payload: CostSet,
}

/// What an agent stores at the end of epoch `k`: `(φ_i, p_i, J_{E_i})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub phase: f64,
    pub position: Vec2,
    pub subregion_cost: f64,
}

/// One agent of the ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentNode {
    pub id: usize,
    /// Unwrapped bar phase.
    pub phase: f64,
    pub position: Vec2,
    pub cost_set: CostSet,
    /// `C_i^k` for every completed epoch.
    pub snapshots: Vec<EpochSnapshot>,
    /// `J_i^k`: the sum over the gossiped set, per completed epoch.
    pub totals: Vec<f64>,
}

impl AgentNode {
    pub fn new(id: usize, phase: f64, position: Vec2) -> Self {
        AgentNode {
            id,
            phase,
            position,
            cost_set: CostSet::default(),
            snapshots: Vec::new(),
            totals: Vec::new(),
        }
    }
}

pub fn nodes_from(partition: &PartitionState, agents: &AgentState) -> Vec<AgentNode> {
    partition
        .unwrapped()
        .iter()
        .zip(&agents.positions)
        .enumerate()
        .map(|(i, (&phi, &p))| AgentNode::new(i, phi, p))
        .collect()
}

/// Synchronous ring flooding: each round every node sends its set to its
/// successor and merges what its predecessor sent. Stops after the first
/// round in which no set changed; afterwards each node records `J_i^k`.
pub fn gossip_until_stable(nodes: &mut [AgentNode], k: usize) -> Result<usize> {
    let n = nodes.len();
    let mut rounds = 0;
    if n > 1 {
        loop {
            if rounds > n {
                return Err(CoverageError::Protocol(format!(
                    "cost sets still changing after {rounds} rounds on a ring of {n}"
                )));
            }
            let messages: Vec<RingMessage> = nodes
                .iter()
                .map(|node| RingMessage {
                    sender: node.id,
                    epoch: k,
                    payload: node.cost_set.clone(),
                })
                .collect();
            rounds += 1;
            let mut changed = false;
            for (i, node) in nodes.iter_mut().enumerate() {
                let msg = &messages[(i + n - 1) % n];
                debug_assert_eq!(msg.epoch, k);
                changed |= node.cost_set.union_with(&msg.payload);
            }
            if !changed {
                break;
            }
        }
    }
    for node in nodes.iter_mut() {
        if node.cost_set.len() != n {
            return Err(CoverageError::Protocol(format!(
                "node {} holds {} of {n} costs after gossip",
                node.id,
                node.cost_set.len()
            )));
        }
        node.totals.push(node.cost_set.total());
    }
    Ok(rounds)
}

/// Runs epoch `k` (one-based) from the nodes' current state.
pub fn run_epoch(nodes: &mut [AgentNode], scenario: &Scenario, k: usize, config: &SearchConfig) -> Result<EpochRecord> {
    let n = nodes.len();
    let gains = scenario.config().gains;
    let angle = config.anchor_angle(k);
    let wrapped: Vec<f64> = nodes.iter().map(|a| wrap_angle(a.phase)).collect();
    let anchor = anchor_assignment(&wrapped, k, config.k_star);

    // Jump the anchor bar to the anchor angle along the shorter arc, then
    // shift every phase by whole turns so the anchor sits at the angle exactly.
    let jumped = nodes[anchor].phase + signed_angle_diff(wrapped[anchor], angle);
    let turns = ((jumped - angle) / TAU).round();
    let mut phases: Vec<f64> = nodes.iter().map(|a| a.phase - turns * TAU).collect();
    phases[anchor] = angle;

    let sys = CoupledSystem {
        domain: scenario.domain(),
        cost: scenario.cost(),
        kappa_phi: gains.kappa_phi,
        kappa_p: gains.kappa_p,
        pinned: Some(anchor),
    };
    let state = SystemState {
        phases,
        positions: nodes.iter().map(|a| a.position).collect(),
    };
    let (end, _) = integrate_for(&sys, state, 0.0, config.t_epsilon, scenario.integrator().dt)?;

    let partition = sys.partition(&end.phases);
    let mut costs = Vec::with_capacity(n);
    for (i, node) in nodes.iter_mut().enumerate() {
        node.phase = end.phases[i];
        node.position = end.positions[i];
        let c = subregion_cost(&partition, sys.domain, &sys.cost, i, node.position)?;
        node.snapshots.push(EpochSnapshot {
            phase: node.phase,
            position: node.position,
            subregion_cost: c,
        });
        node.cost_set = CostSet::singleton(i, c);
        costs.push(c);
    }
    let rounds = gossip_until_stable(nodes, k)?;
    log::debug!("epoch {k}: anchor {anchor}, J = {}, {rounds} gossip rounds", nodes[0].totals[k - 1]);
    Ok(EpochRecord {
        k,
        anchor,
        anchor_angle: angle,
        phases: partition.wrapped(),
        positions: end.positions,
        subregion_costs: costs,
        j: nodes[0].totals[k - 1],
        gossip_rounds: rounds,
    })
}

/// Configuration restored from the best epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finalized {
    /// One-based index of the selected epoch.
    pub best_k: usize,
    pub phases: Vec<f64>,
    pub positions: Vec<Vec2>,
    /// `J^{k*}` as gossiped.
    pub j_stored: f64,
    /// `J` evaluated afresh at the restored configuration.
    pub j_recomputed: f64,
}

/// Index of the smallest value, ties toward the front.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v < values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Every node picks the epoch with least `J_i^k` and restores `C_i^{k*}`.
pub fn select_and_finalize(nodes: &mut [AgentNode], scenario: &Scenario) -> Result<Finalized> {
    let totals = &nodes
        .first()
        .ok_or_else(|| CoverageError::Protocol("empty ring".into()))?
        .totals;
    let best = argmin_first(totals).ok_or_else(|| CoverageError::Protocol("no completed epochs".into()))?;
    let j_stored = totals[best];
    for node in nodes.iter_mut() {
        let b = argmin_first(&node.totals).expect("same length on every node");
        debug_assert_eq!(b, best);
        let snap = node.snapshots[b];
        node.phase = snap.phase;
        node.position = snap.position;
    }
    let gains = scenario.config().gains;
    let partition = PartitionState::from_unwrapped(nodes.iter().map(|a| a.phase).collect(), gains.kappa_phi);
    let agents = AgentState::new(nodes.iter().map(|a| a.position).collect(), gains.kappa_p);
    let j_recomputed = cost_j(&partition, &agents, scenario.domain(), &scenario.cost())?;
    Ok(Finalized {
        best_k: best + 1,
        phases: partition.wrapped(),
        positions: agents.positions,
        j_stored,
        j_recomputed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub config: SearchConfig,
    pub finalized: Finalized,
    /// Epoch records plus one state record per epoch end.
    pub log: TrajectoryLog,
}

/// A search that stopped early, with the epochs completed so far.
#[derive(Debug, Clone)]
pub struct SearchFailure {
    pub error: CoverageError,
    pub log: TrajectoryLog,
}

impl std::fmt::Display for SearchFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} epochs completed)", self.error, self.log.epochs.len())
    }
}

impl std::error::Error for SearchFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs all `K*` epochs from the scenario's initial state and finalizes.
pub fn run_search(scenario: &Scenario, config: &SearchConfig) -> Result<SearchOutcome, Box<SearchFailure>> {
    let mut log = TrajectoryLog::new(scenario.config().clone());
    let gains = scenario.config().gains;
    let sys = CoupledSystem {
        domain: scenario.domain(),
        cost: scenario.cost(),
        kappa_phi: gains.kappa_phi,
        kappa_p: gains.kappa_p,
        pinned: None,
    };
    let fail = |mut log: TrajectoryLog, time: f64, error: CoverageError| {
        log.status = crate::sim::RunStatus::Failed {
            time,
            message: error.to_string(),
        };
        Box::new(SearchFailure { error, log })
    };
    let mut nodes = nodes_from(scenario.initial_partition(), scenario.initial_agents());
    log::info!("circular search: K* = {}, T_ε = {}", config.k_star, config.t_epsilon);
    for k in 1..=config.k_star {
        let t = k as f64 * config.t_epsilon;
        match run_epoch(&mut nodes, scenario, k, config) {
            Ok(rec) => {
                let state = SystemState {
                    phases: nodes.iter().map(|a| a.phase).collect(),
                    positions: rec.positions.clone(),
                };
                log.epochs.push(rec);
                match record_state(&sys, &state, t) {
                    Ok(r) => log.records.push(r),
                    Err(e) => return Err(fail(log, t, e)),
                }
            }
            Err(e) => return Err(fail(log, t - config.t_epsilon, e)),
        }
    }
    match select_and_finalize(&mut nodes, scenario) {
        Ok(finalized) => {
            log::info!("selected epoch {} with J = {}", finalized.best_k, finalized.j_stored);
            Ok(SearchOutcome {
                config: *config,
                finalized,
                log,
            })
        }
        Err(e) => {
            let t = config.k_star as f64 * config.t_epsilon;
            Err(fail(log, t, e))
        }
    }
}
