use crate::error::{CoverageError, Result};
use crate::geometry::{wrap_angle, Domain, TAU};

use super::mean_workload;

/// Solution of `∫_φ^ξ ω = m̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiRoot {
    /// `ξ ∈ [φ, φ + 2π]`.
    pub unwrapped: f64,
    pub wrapped: f64,
    /// `|∫_φ^ξ ω − m̄|`.
    pub residual: f64,
}

const NEWTON_STEPS: usize = 3;

/// Phase one equitable share ahead of `phi` for `n` agents.
///
/// Bisection on `[φ, φ + 2π]` followed by Newton polishing with `ω` as the
/// derivative of the cumulative workload.
pub fn xi_solve(domain: &Domain, n: usize, phi: f64) -> Result<XiRoot> {
    if n == 0 {
        return Err(CoverageError::InvalidArgument("xi needs at least one agent".into()));
    }
    let profile = domain.profile();
    let share = mean_workload(domain, n);
    let base = profile.cumulative_mass(phi);
    let g = |x: f64| profile.cumulative_mass(x) - base - share;

    let (mut lo, mut hi) = (phi, phi + TAU);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo < 0.0 && g_hi >= -1e-12 * share) {
        return Err(CoverageError::Bracketing(format!(
            "cumulative workload does not bracket the share: g(φ) = {g_lo}, g(φ + 2π) = {g_hi}"
        )));
    }
    if n == 1 {
        return Ok(XiRoot {
            unwrapped: hi,
            wrapped: wrap_angle(hi),
            residual: g_hi.abs(),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let slope = profile.omega(x);
        if slope <= 0.0 {
            break;
        }
        let next = x - g(x) / slope;
        if next.is_finite() && next >= phi && next <= phi + TAU {
            x = next;
        }
    }
    let residual = g(x).abs();
    if residual >= 1e-10 * share {
        return Err(CoverageError::Bracketing(format!(
            "xi residual {residual:e} exceeds tolerance for share {share}"
        )));
    }
    Ok(XiRoot {
        unwrapped: x,
        wrapped: wrap_angle(x),
        residual,
    })
}
