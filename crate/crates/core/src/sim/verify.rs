//! Invariant checks evaluated against a completed trajectory log.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::Scenario;
use super::log::{Record, RunStatus, TrajectoryLog};
use crate::agents::{subregion_cost, subregion_gradient, CostModel};
use crate::geometry::{Domain, Vec2, TAU};
use crate::partition::{build_s, convergence_constants, xi_solve, PartitionState, WorkloadVector};

/// Convergence trends are only judged on logs reaching this time.
pub const TREND_HORIZON: f64 = 100.0;
const TREND_RATE_TOL: f64 = 1e-4;
const IMBALANCE_TOL: f64 = 1e-3;
const CENTROID_TOL: f64 = 1e-3;
const BOUND_SLACK: f64 = 1.05;
const XI_SAMPLES: usize = 16;
const PARALLEL_AXIS_SAMPLES: usize = 8;
const GRADIENT_SAMPLES: usize = 20;
const OPTIMALITY_SAMPLES: usize = 50;
const CHECK_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The log cannot decide the check (too short, or the run failed).
    Inconclusive,
    /// Reported value without a pass/fail judgement.
    Info,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Inconclusive => "inconclusive",
            CheckStatus::Info => "info",
        })
    }
}

/// One invariant. `worst_margin` is the smallest `bound − value` seen; it is
/// negative exactly when the check fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub bound: String,
    pub worst_margin: f64,
    pub status: CheckStatus,
}

impl Check {
    fn judged(name: &str, bound: impl Into<String>, worst_margin: f64) -> Self {
        let status = if worst_margin >= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Check {
            name: name.into(),
            bound: bound.into(),
            worst_margin,
            status,
        }
    }

    fn with_status(name: &str, bound: impl Into<String>, worst_margin: f64, status: CheckStatus) -> Self {
        Check {
            name: name.into(),
            bound: bound.into(),
            worst_margin,
            status,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<32} {:<12} margin {:>12.4e}  {}",
            self.name, self.status, self.worst_margin, self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    /// True when nothing failed and nothing was left undecided.
    pub fn all_pass(&self) -> bool {
        self.checks
            .iter()
            .all(|c| matches!(c.status, CheckStatus::Pass | CheckStatus::Info))
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn min_over<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

fn max_over<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn workloads_of(r: &Record) -> WorkloadVector {
    WorkloadVector::new(r.workloads.clone(), r.mean_workload)
}

fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..count).map(|k| k * (len - 1) / (count - 1)).collect();
    idx.dedup();
    idx
}

/// Evaluates every invariant of the partition and agent dynamics against
/// `log`. The scenario supplies the domain; its initial state is taken from
/// the first record.
pub fn verify_invariants(log: &TrajectoryLog, scenario: &Scenario) -> VerificationReport {
    let mut checks = Vec::new();
    let Some(first) = log.first() else {
        checks.push(Check::with_status(
            "log_nonempty",
            "at least one record",
            f64::NAN,
            CheckStatus::Fail,
        ));
        return VerificationReport { checks };
    };
    let last = log.last().expect("non-empty");
    let domain = scenario.domain();
    let n = first.phases.len();
    let kappa_phi = log.config.gains.kappa_phi;
    let kappa_p = log.config.gains.kappa_p;
    let cost = log.config.cost;
    let m_bar = first.mean_workload;
    // rounding floor for workload-squared quantities
    let round_sq = (64.0 * f64::EPSILON * m_bar).powi(2) * n as f64;
    let round_lin = 64.0 * f64::EPSILON * m_bar;
    let t_end = last.t;

    checks.push(match &log.status {
        RunStatus::Completed => Check::judged("run_completed", "no integration failure", 0.0),
        RunStatus::Failed { time, message } => Check::with_status(
            "run_completed",
            format!("failed at t = {time}: {message}"),
            -1.0,
            CheckStatus::Fail,
        ),
    });

    let phi_mean = |r: &Record| r.unwrapped.iter().sum::<f64>() / n as f64;
    let mean0 = phi_mean(first);
    let drift_bound = 1e-6 * (t_end / 100.0).max(1.0);
    checks.push(Check::judged(
        "mean_phase_conservation",
        format!("|mean φ(t) − mean φ(0)| ≤ {drift_bound:e}"),
        drift_bound - max_over(log.records.iter().map(|r| (phi_mean(r) - mean0).abs())),
    ));

    let v_step = 1e-12 * m_bar * m_bar;
    checks.push(Check::judged(
        "lyapunov_non_increasing",
        format!("V(t_k+1) ≤ V(t_k) + {v_step:.3e}"),
        min_over(log.records.windows(2).map(|w| v_step - (w[1].v - w[0].v))),
    ));

    let initial = PartitionState::from_unwrapped(first.unwrapped.clone(), kappa_phi);
    match convergence_constants(&initial, domain) {
        Ok(c) => {
            checks.push(Check::judged(
                "exponential_lyapunov_bound",
                format!("V ≤ {BOUND_SLACK}·V(0)·exp(−2·{:.6e}·t)", c.c2),
                min_over(
                    log.records
                        .iter()
                        .map(|r| BOUND_SLACK * first.v * (-2.0 * c.c2 * r.t).exp() + round_sq - r.v),
                ),
            ));
            // |e_i − e_{i−1}| ≤ √2·√(e_i² + e_{i−1}²) ≤ √2·√(2V), so the
            // constant carries an extra √2 over c₁ = √(2V(0)).
            let worst_at = |r: &Record| max_over(workloads_of(r).differences().into_iter().map(f64::abs));
            let c1 = std::f64::consts::SQRT_2 * c.c1;
            checks.push(Check::judged(
                "pairwise_difference_bound",
                format!("|m_i − m_i−1| ≤ {BOUND_SLACK}·√2·{:.6e}·exp(−{:.6e}·t)", c.c1, c.c2),
                min_over(
                    log.records
                        .iter()
                        .map(|r| BOUND_SLACK * c1 * (-c.c2 * r.t).exp() + round_lin - worst_at(r)),
                ),
            ));
            checks.push(Check::with_status(
                "pairwise_difference_bound_c1",
                "same bound with c₁ = √(2V(0)) alone, reported only",
                min_over(
                    log.records
                        .iter()
                        .map(|r| BOUND_SLACK * c.c1 * (-c.c2 * r.t).exp() + round_lin - worst_at(r)),
                ),
                CheckStatus::Info,
            ));
        }
        Err(e) => checks.push(Check::with_status(
            "exponential_lyapunov_bound",
            format!("constants unavailable: {e}"),
            f64::NAN,
            CheckStatus::Fail,
        )),
    }

    checks.push(Check::with_status(
        "workload_positivity",
        "min_i m_i > 0 at every accepted step",
        min_over(
            log.records
                .iter()
                .map(|r| r.min_step_workload.min(workloads_of(r).min())),
        ),
        if log
            .records
            .iter()
            .all(|r| r.min_step_workload > 0.0 && workloads_of(r).min() > 0.0)
        {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
    ));

    if n >= 2 {
        match build_s(n) {
            Ok(s) => checks.push(Check::judged(
                "s_matrix_bound",
                format!("Σ(m_i − m_i−1)² ≥ 2·{:.6}·V/N", s.lambda_min),
                min_over(log.records.iter().map(|r| {
                    let w = workloads_of(r);
                    let lhs: f64 = w.differences().iter().map(|d| d * d).sum();
                    let rhs = 2.0 * s.lambda_min * r.v / n as f64;
                    // N = 2 attains equality, so allow relative rounding
                    lhs - rhs + 1e-12 * lhs.max(rhs) + round_sq
                })),
            )),
            Err(e) => checks.push(Check::with_status("s_matrix_bound", e.to_string(), f64::NAN, CheckStatus::Fail)),
        }
    } else {
        checks.push(Check::with_status("s_matrix_bound", "needs N ≥ 2", 0.0, CheckStatus::Info));
    }

    checks.push(xi_closure(domain, n));

    if cost.is_squared_distance() {
        checks.push(parallel_axis_check(log, domain, kappa_phi));
    } else {
        checks.push(Check::with_status(
            "parallel_axis_identity",
            "applies to the squared-distance cost only",
            0.0,
            CheckStatus::Info,
        ));
    }

    checks.push(gradient_consistency(last, domain, &cost, kappa_phi));
    checks.push(target_optimality(last, domain, &cost, kappa_phi));

    let e_hat = max_over(log.records.iter().map(|r| r.e_eta_norm));
    let phi_sup = max_over(log.records.iter().map(|r| r.phi_dot_norm));
    let forcing = e_hat * phi_sup / (2.0 * kappa_p);
    checks.push(Check::judged(
        "iss_bound",
        format!("H ≤ H(0)·exp(−2κ_p t) + {BOUND_SLACK}·Ê·sup‖φ̇‖/(2κ_p), Ê = {e_hat:.4e} sampled on logged states"),
        min_over(
            log.records
                .iter()
                .map(|r| first.h * (-2.0 * kappa_p * r.t).exp() + BOUND_SLACK * forcing + round_sq - r.h),
        ),
    ));

    if kappa_phi == 0.0 {
        checks.push(Check::judged(
            "frozen_partition_exponential",
            "‖p_i(t) − p_i*‖ = ‖p_i(0) − p_i*‖·exp(−κ_p t) within 1e-8",
            min_over(log.records.iter().flat_map(|r| {
                (0..n).map(move |i| {
                    let d0 = (first.positions[i] - first.targets[i]).norm();
                    let d = (r.positions[i] - r.targets[i]).norm();
                    1e-8 * (1.0 + d0) - (d - d0 * (-kappa_p * r.t).exp()).abs()
                })
            })),
        ));
    } else {
        checks.push(Check::with_status(
            "frozen_partition_exponential",
            "applies when κ_φ = 0",
            0.0,
            CheckStatus::Info,
        ));
    }

    let decided = log.is_complete() && t_end >= TREND_HORIZON - 1e-9;
    let trend = |name: &str, tol: f64, value: f64, applies: bool| {
        let bound = format!("≤ {tol:e} at t = {t_end}");
        if !applies {
            Check::with_status(name, "applies when κ_φ > 0", 0.0, CheckStatus::Info)
        } else if decided {
            Check::judged(name, bound, tol - value)
        } else {
            Check::with_status(
                name,
                format!("needs a completed log reaching t = {TREND_HORIZON}"),
                tol - value,
                CheckStatus::Inconclusive,
            )
        }
    };
    checks.push(trend("trend_phase_rate", TREND_RATE_TOL, last.phi_dot_norm, true));
    checks.push(trend("trend_agent_speed", TREND_RATE_TOL, last.max_p_dot, true));
    checks.push(trend("trend_centroid_speed", TREND_RATE_TOL, last.max_centroid_speed, true));
    checks.push(trend(
        "equitable_partition",
        IMBALANCE_TOL,
        workloads_of(last).max_relative_imbalance(),
        kappa_phi > 0.0,
    ));
    checks.push(trend(
        "target_convergence",
        CENTROID_TOL,
        max_over((0..n).map(|i| (last.positions[i] - last.targets[i]).norm())),
        true,
    ));

    let excursions = log.records.iter().filter(|r| r.excursion).count();
    checks.push(Check::with_status(
        "region_excursions",
        format!("{excursions} records with an agent outside the region"),
        0.0,
        CheckStatus::Info,
    ));
    checks.push(Check::with_status(
        "step_halvings",
        format!("{} halvings in total", log.total_halvings),
        0.0,
        CheckStatus::Info,
    ));

    VerificationReport { checks }
}

fn xi_closure(domain: &Domain, n: usize) -> Check {
    let name = "xi_closure";
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
    let m_bar = domain.total_workload() / n as f64;
    let mut margin = f64::INFINITY;
    for _ in 0..XI_SAMPLES {
        let phi0 = rng.random_range(0.0..TAU);
        let mut phi = phi0;
        for _ in 0..n {
            match xi_solve(domain, n, phi) {
                Ok(root) => {
                    margin = margin.min((1e-10 * m_bar - root.residual) / m_bar);
                    phi = root.unwrapped;
                }
                Err(e) => return Check::with_status(name, e.to_string(), f64::NAN, CheckStatus::Fail),
            }
        }
        margin = margin.min(1e-8 - (phi - phi0 - TAU).abs());
    }
    Check::judged(
        name,
        "ξᴺ(φ) − φ = 2π within 1e-8 and residual < 1e-10·m̄ at 16 random φ",
        margin,
    )
}

/// Recomputes `J`, the spread and `H` by direct quadrature on a sample of
/// records.
fn parallel_axis_check(log: &TrajectoryLog, domain: &Domain, kappa_phi: f64) -> Check {
    let name = "parallel_axis_identity";
    let mut margin = f64::INFINITY;
    for k in sample_indices(log.len(), PARALLEL_AXIS_SAMPLES) {
        let r = &log.records[k];
        let part = PartitionState::from_unwrapped(r.unwrapped.clone(), kappa_phi);
        let (mut j, mut spread, mut h) = (0.0, 0.0, 0.0);
        for (i, p) in r.positions.iter().enumerate() {
            let span = part.span(i);
            let moments = domain.region_integral_vec(span.start, span.end, |q| [1.0, q.x, q.y, (q - *p).norm_sq()]);
            let Ok([m, mx, my, cost]) = moments else {
                return Check::with_status(name, "quadrature failed", f64::NAN, CheckStatus::Fail);
            };
            let c = Vec2::new(mx / m, my / m);
            let Ok([s]) = domain.region_integral_vec(span.start, span.end, |q| [(q - c).norm_sq()]) else {
                return Check::with_status(name, "quadrature failed", f64::NAN, CheckStatus::Fail);
            };
            j += cost;
            spread += s;
            h += m * (*p - c).norm_sq();
        }
        margin = margin.min(1e-6 * j - (j - spread - h).abs());
    }
    Check::judged(name, "|J − spread − H| < 1e-6·J by direct quadrature", margin)
}

fn cost_at(part: &PartitionState, domain: &Domain, cost: &CostModel, i: usize, p: Vec2) -> f64 {
    subregion_cost(part, domain, cost, i, p).unwrap_or(f64::NAN)
}

/// Gradient against central differences of the sub-region cost at random
/// points of each sub-region of the final partition.
fn gradient_consistency(last: &Record, domain: &Domain, cost: &CostModel, kappa_phi: f64) -> Check {
    let name = "gradient_consistency";
    let part = PartitionState::from_unwrapped(last.unwrapped.clone(), kappa_phi);
    let n = part.len();
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 1);
    let h = 1e-5;
    let mut margin = f64::INFINITY;
    for s in 0..GRADIENT_SAMPLES {
        let i = s % n;
        let span = part.span(i);
        let theta = span.lerp(rng.random_range(0.1..0.9));
        let region = domain.region();
        let r = region.r_in(theta) + rng.random_range(0.1..0.9) * (region.r_out(theta) - region.r_in(theta));
        let p = Vec2::from_polar(r, theta);
        let Ok(g) = subregion_gradient(&part, domain, cost, i, p) else {
            return Check::with_status(name, "quadrature failed", f64::NAN, CheckStatus::Fail);
        };
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let fd = Vec2::new(
            (cost_at(&part, domain, cost, i, p + ex) - cost_at(&part, domain, cost, i, p - ex)) / (2.0 * h),
            (cost_at(&part, domain, cost, i, p + ey) - cost_at(&part, domain, cost, i, p - ey)) / (2.0 * h),
        );
        let scale = g.norm().max(fd.norm()).max(1e-12);
        let err = (g - fd).norm() / scale;
        margin = margin.min(1e-4 - if err.is_nan() { f64::INFINITY } else { err });
    }
    Check::judged(
        name,
        "analytic ∇J vs central differences (step 1e-5), relative error < 1e-4",
        margin,
    )
}

/// The per-agent target beats random nearby points at the final partition.
fn target_optimality(last: &Record, domain: &Domain, cost: &CostModel, kappa_phi: f64) -> Check {
    let part = PartitionState::from_unwrapped(last.unwrapped.clone(), kappa_phi);
    let n = part.len();
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED + 2);
    let mut margin = f64::INFINITY;
    for s in 0..OPTIMALITY_SAMPLES {
        let i = s % n;
        let target = last.targets[i];
        let base = cost_at(&part, domain, cost, i, target);
        let delta = Vec2::from_polar(rng.random_range(0.0..0.1), rng.random_range(0.0..TAU));
        let moved = target + delta;
        // generic targets minimise over E_i only, so stay inside it
        if !cost.is_squared_distance() && !(domain.contains(moved) && part.span(i).contains_angle(moved.angle())) {
            continue;
        }
        let value = cost_at(&part, domain, cost, i, moved);
        // relative rounding allowance on the compared costs
        margin = margin.min(value - base + 1e-12 * base.abs());
    }
    Check::judged(
        "target_optimality",
        if cost.is_squared_distance() {
            "J_E_i(p* + δ) ≥ J_E_i(p*) for 50 perturbations with ‖δ‖ ≤ 0.1"
        } else {
            "J_E_i(p* + δ) ≥ J_E_i(p*) for perturbations with ‖δ‖ ≤ 0.1 that stay in E_i"
        },
        margin,
    )
}
