//! Composite Gauss–Legendre quadrature with panel doubling.
//!
//! Every estimate uses 16 nodes per panel. The panel count starts at one and
//! doubles until two successive estimates agree to the relative tolerance,
//! measured against the integral of the absolute integrand so that integrals
//! which vanish by symmetry still terminate.

use std::sync::OnceLock;

use crate::error::{CoverageError, Result};

pub const GL_NODES: usize = 16;

/// Tolerance and refinement cap for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-8,
            max_panels: 1 << 14,
        }
    }
}

impl QuadratureSettings {
    pub fn with_tolerance(rel_tol: f64) -> Self {
        QuadratureSettings {
            rel_tol,
            ..Default::default()
        }
    }
}

/// Nodes and weights of the 16-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre_16() -> &'static ([f64; GL_NODES], [f64; GL_NODES]) {
    static RULE: OnceLock<([f64; GL_NODES], [f64; GL_NODES])> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre::<GL_NODES>())
}

/// Newton iteration on the Legendre polynomial `P_n`, seeded with the
/// Tricomi approximation of each root.
fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(N, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(N, x);
        if d != 0.0 {
            dp = d;
        }
        // roots come out in descending order; store ascending
        nodes[N - 1 - i] = x;
        weights[N - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed composite rule: `panels` equal panels on `[a, b]`.
///
/// Returns the integral of each component together with the integral of its
/// absolute value.
pub fn composite<const K: usize, F>(f: &mut F, a: f64, b: f64, panels: usize) -> Result<([f64; K], [f64; K])>
where
    F: FnMut(f64) -> Result<[f64; K]>,
{
    let (nodes, weights) = gauss_legendre_16();
    let h = (b - a) / panels as f64;
    let half = 0.5 * h;
    let mut sum = [0.0; K];
    let mut abs = [0.0; K];
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            let v = f(mid + half * x)?;
            for k in 0..K {
                sum[k] += w * v[k];
                abs[k] += w * v[k].abs();
            }
        }
    }
    for k in 0..K {
        sum[k] *= half;
        abs[k] *= half.abs();
    }
    Ok((sum, abs))
}

/// Adaptive vector-valued integral of `f` over `[a, b]`.
pub fn integrate<const K: usize, F>(mut f: F, a: f64, b: f64, settings: QuadratureSettings) -> Result<[f64; K]>
where
    F: FnMut(f64) -> Result<[f64; K]>,
{
    if a == b {
        return Ok([0.0; K]);
    }
    let mut panels = 1;
    let (mut prev, _) = composite(&mut f, a, b, panels)?;
    let mut residual = f64::INFINITY;
    while panels < settings.max_panels {
        panels *= 2;
        let (est, abs) = composite(&mut f, a, b, panels)?;
        let mut converged = true;
        residual = 0.0;
        for k in 0..K {
            let scale = est[k].abs().max(abs[k]);
            let diff = (est[k] - prev[k]).abs();
            if scale > 0.0 {
                residual = residual.max(diff / scale);
            }
            if diff > settings.rel_tol * scale {
                converged = false;
            }
        }
        if converged {
            return Ok(est);
        }
        prev = est;
    }
    Err(CoverageError::Quadrature { panels, residual })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, settings: QuadratureSettings) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate(|x| Ok([f(x)]), a, b, settings).map(|v| v[0])
}
