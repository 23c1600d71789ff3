//! Distributed coverage control with load balancing on annular regions.
//!
//! Partition bars rotate about a common origin to equalize the workload of
//! the angular sub-regions they delimit, while each agent descends the
//! service cost of its own sub-region. A circular search over anchored bar
//! phases then selects the best equitable configuration found.
//!
//! Module map:
//!
//! * [`geometry`]: region, density and quadrature;
//! * [`partition`]: bar phases, workloads and their balancing dynamics;
//! * [`agents`]: centroids, service cost, targets and control law;
//! * [`sim`]: coupled integration, trajectory logs and invariant checks;
//! * [`search`]: anchored epochs over a simulated ring network.

pub mod agents;
pub mod error;
pub mod geometry;
pub mod partition;
pub mod search;
pub mod sim;

pub use agents::{AgentState, CostModel, GenericCost};
pub use error::{CoverageError, Result};
pub use geometry::{AnnularRegion, DensityField, DensityKind, Domain, Moments, PolarCurve, Vec2};
pub use partition::{PartitionState, WorkloadVector};
pub use search::{SearchConfig, SearchOutcome};
pub use sim::{run_scenario, verify_invariants, Scenario, ScenarioConfig, TrajectoryLog, VerificationReport};
