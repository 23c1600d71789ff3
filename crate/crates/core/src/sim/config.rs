//! Scenario configuration and its validated form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentState, CostModel, GenericCost};
use crate::error::{CoverageError, Result};
use crate::geometry::{AnnularRegion, DensityField, DensityKind, Domain, RegionSpec, Vec2, TAU};
use crate::partition::PartitionState;
use crate::search::SearchConfig;

const PHASE_DRAW_ATTEMPTS: usize = 64;
const POSITION_DRAW_ATTEMPTS: usize = 100_000;

/// Raw scenario file. Every section maps to a JSON object of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub region: RegionSpec,
    pub density: DensityKind,
    pub agents: AgentsSpec,
    pub gains: GainsSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSpec {
    pub count: usize,
    /// Drawn from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_phases: Option<Vec<f64>>,
    /// Drawn from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_positions: Option<Vec<Vec2>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    pub kappa_phi: f64,
    pub kappa_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between log records.
    pub log_stride: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            dt: 0.01,
            t_end: 100.0,
            log_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_p: Option<f64>,
    /// Takes precedence over `epsilon_p`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
    pub t_epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl ScenarioConfig {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            CoverageError::config(field, e.into_inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config always serializes")
    }
}

/// A validated scenario with explicit initial conditions.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    domain: Domain,
    partition: PartitionState,
    agents: AgentState,
    search: Option<SearchConfig>,
}

fn check(cond: bool, field: &str, message: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CoverageError::config(field, message))
    }
}

fn draw_phases(rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<f64>> {
    for _ in 0..PHASE_DRAW_ATTEMPTS {
        let mut phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        phases.sort_by(f64::total_cmp);
        if PartitionState::new(phases.clone(), 0.0).is_ok() {
            return Ok(phases);
        }
    }
    Err(CoverageError::config("agents.initial_phases", "could not draw separated phases"))
}

fn draw_positions(rng: &mut ChaCha8Rng, region: &AnnularRegion, n: usize) -> Result<Vec<Vec2>> {
    let r = region.bounding_radius();
    let mut out = Vec::with_capacity(n);
    for _ in 0..POSITION_DRAW_ATTEMPTS {
        if out.len() == n {
            break;
        }
        let p = Vec2::new(rng.random_range(-r..r), rng.random_range(-r..r));
        if region.contains(p) {
            out.push(p);
        }
    }
    check(out.len() == n, "agents.initial_positions", "rejection sampling exhausted")?;
    Ok(out)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_config(ScenarioConfig::from_json(text)?)
    }

    /// Validates a config, drawing any missing initial conditions from the
    /// seed. The stored config has them filled in, so replaying
    /// [`Scenario::config`] reproduces the run exactly.
    pub fn from_config(mut config: ScenarioConfig) -> Result<Self> {
        let region = AnnularRegion::try_from(config.region.clone())
            .map_err(|e| CoverageError::config("region", e.to_string()))?;
        let density =
            DensityField::new(config.density.clone(), &region).map_err(|e| CoverageError::config("density", e.to_string()))?;
        let domain = Domain::new(region, density).map_err(|e| CoverageError::config("density", e.to_string()))?;

        let n = config.agents.count;
        check(n >= 1, "agents.count", "at least one agent is required")?;
        let g = config.gains;
        check(g.kappa_phi.is_finite() && g.kappa_phi >= 0.0, "gains.kappa_phi", "must be finite and non-negative")?;
        check(g.kappa_p.is_finite() && g.kappa_p > 0.0, "gains.kappa_p", "must be finite and positive")?;
        let it = config.integrator;
        check(it.dt.is_finite() && it.dt > 0.0, "integrator.dt", "must be positive")?;
        check(it.t_end.is_finite() && it.t_end >= it.dt, "integrator.t_end", "must be at least dt")?;
        check(it.log_stride >= 1, "integrator.log_stride", "must be at least 1")?;
        if let CostModel::GenericBuiltin {
            function: GenericCost::PseudoHuber { delta },
        } = config.cost
        {
            check(delta.is_finite() && delta > 0.0, "cost.function.delta", "must be positive")?;
        }
        for &t in &config.output.snapshot_times {
            check(t.is_finite() && t >= 0.0, "output.snapshot_times", "times must be finite and non-negative")?;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.agents.seed);
        let phases = match &config.agents.initial_phases {
            Some(p) => {
                check(p.len() == n, "agents.initial_phases", "length differs from agents.count")?;
                p.clone()
            }
            None => draw_phases(&mut rng, n)?,
        };
        let partition = PartitionState::new(phases.clone(), g.kappa_phi)?;
        let positions = match &config.agents.initial_positions {
            Some(p) => {
                check(p.len() == n, "agents.initial_positions", "length differs from agents.count")?;
                for (i, q) in p.iter().enumerate() {
                    if !domain.contains(*q) {
                        return Err(CoverageError::config(
                            "agents.initial_positions",
                            format!("agent {i} at ({}, {}) is outside the region", q.x, q.y),
                        ));
                    }
                }
                p.clone()
            }
            None => draw_positions(&mut rng, domain.region(), n)?,
        };
        config.agents.initial_phases = Some(phases);
        config.agents.initial_positions = Some(positions.clone());

        let search = config.search.map(SearchConfig::from_spec).transpose()?;
        let mut agents = AgentState::new(positions, g.kappa_p);
        agents.refresh_targets(&partition, &domain, &config.cost)?;

        Ok(Scenario {
            config,
            domain,
            partition,
            agents,
            search,
        })
    }

    /// Resolved config, initial conditions included.
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn initial_partition(&self) -> &PartitionState {
        &self.partition
    }

    pub fn initial_agents(&self) -> &AgentState {
        &self.agents
    }

    pub fn cost(&self) -> CostModel {
        self.config.cost
    }

    pub fn integrator(&self) -> IntegratorSpec {
        self.config.integrator
    }

    pub fn search(&self) -> Option<&SearchConfig> {
        self.search.as_ref()
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const UNIFORM_N2: &str = r#"{
        "region": {"inner": {"mean": 1.0}, "outer": {"mean": 2.0}},
        "density": {"kind": "uniform"},
        "agents": {"count": 2, "initial_phases": [0.0, 1.5707963267948966],
                   "initial_positions": [[1.5, 0.5], [-1.5, 0.0]]},
        "gains": {"kappa_phi": 0.03, "kappa_p": 0.1},
        "integrator": {"dt": 0.01, "t_end": 1.0, "log_stride": 10}
    }"#;

    #[test]
    fn parses_minimal_config() {
        let s = Scenario::from_json(UNIFORM_N2).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.cost().is_squared_distance());
        assert!(s.search().is_none());
    }

    #[test]
    fn rejects_coincident_phases() {
        let text = UNIFORM_N2.replace("[0.0, 1.5707963267948966]", "[0.5, 0.5]");
        let err = Scenario::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("initial phases not strictly separated"), "{err}");
    }

    #[test]
    fn missing_density_kind_names_field() {
        let text = UNIFORM_N2.replace(r#"{"kind": "uniform"}"#, "{}");
        match Scenario::from_json(&text).unwrap_err() {
            CoverageError::Config { field, message } => {
                assert_eq!(field, "density");
                assert!(message.contains("kind"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn position_outside_region_rejected() {
        let text = UNIFORM_N2.replace("[1.5, 0.5]", "[0.5, 0.0]");
        match Scenario::from_json(&text).unwrap_err() {
            CoverageError::Config { field, .. } => assert_eq!(field, "agents.initial_positions"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn random_init_is_seeded_and_valid() {
        let text = r#"{
            "region": {"inner": {"mean": 1.0, "sin": [0.0, 0.5]}, "outer": {"mean": 3.0, "cos": [0.0, 0.5]}},
            "density": {"kind": "case_study"},
            "agents": {"count": 8, "seed": 11},
            "gains": {"kappa_phi": 0.03, "kappa_p": 0.1}
        }"#;
        let a = Scenario::from_json(text).unwrap();
        let b = Scenario::from_json(text).unwrap();
        assert_eq!(a.config(), b.config());
        let phases = a.config().agents.initial_phases.as_ref().unwrap();
        assert!(phases.windows(2).all(|w| w[1] > w[0]));
        for p in a.config().agents.initial_positions.as_ref().unwrap() {
            assert!(a.domain().contains(*p));
        }
        let other = Scenario::from_json(&text.replace("11", "12")).unwrap();
        assert_ne!(a.config().agents.initial_phases, other.config().agents.initial_phases);
    }

    #[test]
    fn echo_round_trip() {
        let text = r#"{
            "region": {"inner": {"mean": 1.0, "sin": [0.0, 0.5]}, "outer": {"mean": 3.0, "cos": [0.0, 0.5]}},
            "density": {"kind": "case_study"},
            "agents": {"count": 5, "seed": 3},
            "gains": {"kappa_phi": 0.03, "kappa_p": 0.1},
            "search": {"epsilon_p": 0.5, "t_epsilon": 20.0},
            "output": {"snapshot_times": [0.0, 4.0]}
        }"#;
        let a = Scenario::from_json(text).unwrap();
        let echo = a.config().to_json();
        let b = Scenario::from_json(&echo).unwrap();
        assert_eq!(a.config(), b.config());
        assert_eq!(a.initial_partition(), b.initial_partition());
        assert_eq!(a.initial_agents(), b.initial_agents());
    }

    #[test]
    fn unknown_field_rejected() {
        let text = UNIFORM_N2.replace(r#""kappa_p": 0.1"#, r#""kappa_p": 0.1, "kappa_q": 1"#);
        match Scenario::from_json(&text).unwrap_err() {
            CoverageError::Config { field, .. } => assert!(field.starts_with("gains"), "{field}"),
            e => panic!("unexpected {e}"),
        }
    }
}
