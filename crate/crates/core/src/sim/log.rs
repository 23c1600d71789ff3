use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::geometry::Vec2;

/// State and diagnostics at one logged instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    /// Phases reduced to `[0, 2π)`.
    pub phases: Vec<f64>,
    pub unwrapped: Vec<f64>,
    pub positions: Vec<Vec2>,
    pub targets: Vec<Vec2>,
    pub centroids: Vec<Vec2>,
    pub workloads: Vec<f64>,
    pub mean_workload: f64,
    pub v: f64,
    pub j: f64,
    /// `H = Σ m_i ‖p_i − c_i‖²`.
    pub h: f64,
    /// `‖φ̇‖`.
    pub phi_dot_norm: f64,
    /// `max_i ‖ṗ_i‖`.
    pub max_p_dot: f64,
    /// `max_i ‖ċ_i‖` by finite difference along the bar flow.
    pub max_centroid_speed: f64,
    /// `‖e_η‖`, the coupling between bar motion and `H`.
    pub e_eta_norm: f64,
    /// Smallest workload over every accepted step since the previous record.
    pub min_step_workload: f64,
    /// Any agent outside the region at a step since the previous record.
    pub excursion: bool,
    /// Most step halvings needed since the previous record.
    pub halvings: u32,
}

/// One anchored search epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// One-based epoch index.
    pub k: usize,
    /// Zero-based index of the pinned agent.
    pub anchor: usize,
    pub anchor_angle: f64,
    pub phases: Vec<f64>,
    pub positions: Vec<Vec2>,
    pub subregion_costs: Vec<f64>,
    pub j: f64,
    pub gossip_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { time: f64, message: String },
}

/// Complete run output; the config makes it self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub config: ScenarioConfig,
    pub records: Vec<Record>,
    #[serde(default)]
    pub epochs: Vec<EpochRecord>,
    pub status: RunStatus,
    pub total_halvings: u64,
}

impl TrajectoryLog {
    pub fn new(config: ScenarioConfig) -> Self {
        TrajectoryLog {
            config,
            records: Vec::new(),
            epochs: Vec::new(),
            status: RunStatus::Completed,
            total_halvings: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.config.agents.count
    }

    pub fn first(&self) -> Option<&Record> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Last record at or before `t`.
    pub fn at(&self, t: f64) -> Option<&Record> {
        self.records.iter().take_while(|r| r.t <= t + 1e-9).last()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory log always serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
