use super::{centroid, CostModel, GenericCost};
use crate::error::{CoverageError, Result};
use crate::geometry::{wrap_angle, Domain, Vec2};
use crate::partition::{AngularSpan, PartitionState};

/// Points in the boundary sweep of `∂E_i` (16 per side).
pub const TARGET_BOUNDARY_SAMPLES: usize = 64;
/// Interior starts on a 3×3 polar grid of `E_i`.
const GRID_FRACTIONS: [f64; 3] = [1.0 / 6.0, 0.5, 5.0 / 6.0];
const MAX_NEWTON: usize = 60;
/// Newton step (relative to the region size) treated as converged; the cost
/// integrals carry ~1e-8 relative quadrature error, so smaller steps are noise.
const STEP_TOL: f64 = 1e-9;
const MAX_BACKTRACK: usize = 30;

/// Minimizer of `J_{E_i}` over the critical points inside `E_i` together
/// with `∂E_i`.
///
/// The squared-distance cost reduces to the centroid. Other costs run a
/// damped Newton descent from nine interior starts and compare the converged
/// critical points lying in `E_i` against a sweep of the boundary.
pub fn optimal_target(partition: &PartitionState, domain: &Domain, cost: &CostModel, i: usize) -> Result<Vec2> {
    optimal_target_near(partition, domain, cost, i, None)
}

/// [`optimal_target`] with an extra first descent start at `hint`, typically
/// the agent's current position.
///
/// For strictly convex costs a critical point inside `E_i` is the unique
/// minimizer, so the search stops there; when the critical point lies
/// outside `E_i` the remaining starts would reach the same point and only
/// the boundary sweep is run.
pub fn optimal_target_near(
    partition: &PartitionState,
    domain: &Domain,
    cost: &CostModel,
    i: usize,
    hint: Option<Vec2>,
) -> Result<Vec2> {
    match cost {
        CostModel::SquaredDistance => centroid(partition, domain, i),
        CostModel::GenericBuiltin { function } => generic_target(partition, domain, function, i, hint),
    }
}

/// `[J, ∂J/∂x, ∂J/∂y, ∂²J/∂x², ∂²J/∂x∂y, ∂²J/∂y²]` over the span.
fn local_model(domain: &Domain, span: AngularSpan, f: &GenericCost, p: Vec2) -> Result<[f64; 6]> {
    domain.region_integral_vec(span.start, span.end, |q| {
        let g = f.gradient(p, q);
        let h = f.hessian(p, q);
        [f.value(p, q), g.x, g.y, h[0][0], h[0][1], h[1][1]]
    })
}

fn cost_at(domain: &Domain, span: AngularSpan, f: &GenericCost, p: Vec2) -> Result<f64> {
    domain
        .region_integral_vec(span.start, span.end, |q| [f.value(p, q)])
        .map(|v| v[0])
}

struct Descent {
    point: Vec2,
    cost: f64,
    converged: bool,
    residual: f64,
}

fn newton_descent(domain: &Domain, span: AngularSpan, f: &GenericCost, start: Vec2, scale: f64) -> Result<Descent> {
    let mut p = start;
    let mut model = local_model(domain, span, f, p)?;
    let mut residual = Vec2::new(model[1], model[2]).norm();
    for _ in 0..MAX_NEWTON {
        let g = Vec2::new(model[1], model[2]);
        let (hxx, hxy, hyy) = (model[3], model[4], model[5]);
        let det = hxx * hyy - hxy * hxy;
        let mut step = if hxx > 0.0 && det > 0.0 {
            Vec2::new(-(hyy * g.x - hxy * g.y) / det, -(hxx * g.y - hxy * g.x) / det)
        } else {
            // steepest descent scaled by the Hessian's largest diagonal
            -g / hxx.abs().max(hyy.abs()).max(f64::MIN_POSITIVE)
        };
        if step.norm() <= STEP_TOL * scale {
            return Ok(Descent {
                point: p,
                cost: model[0],
                converged: true,
                residual,
            });
        }
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let trial = p + step;
            let value = cost_at(domain, span, f, trial)?;
            if value <= model[0] + 1e-4 * g.dot(step) || step.norm() <= STEP_TOL * scale {
                p = trial;
                accepted = true;
                break;
            }
            step = step * 0.5;
        }
        if !accepted {
            break;
        }
        model = local_model(domain, span, f, p)?;
        residual = Vec2::new(model[1], model[2]).norm();
    }
    Ok(Descent {
        point: p,
        cost: model[0],
        converged: false,
        residual,
    })
}

/// Closed sub-region membership, with a small tolerance for points on
/// the boundary.
fn in_subregion(domain: &Domain, span: AngularSpan, p: Vec2) -> bool {
    let r = p.norm();
    if r == 0.0 {
        return false;
    }
    let theta = wrap_angle(p.y.atan2(p.x));
    let eps = 1e-12;
    let offset = wrap_angle(theta - span.start);
    let angular = offset <= span.width() + eps || offset >= std::f64::consts::TAU - eps || span.width() >= std::f64::consts::TAU;
    let region = domain.region();
    angular && r >= region.r_in(theta) * (1.0 - eps) && r <= region.r_out(theta) * (1.0 + eps)
}

fn boundary_sweep(domain: &Domain, span: AngularSpan) -> Vec<Vec2> {
    let per_side = TARGET_BOUNDARY_SAMPLES / 4;
    let region = domain.region();
    let mut pts = Vec::with_capacity(TARGET_BOUNDARY_SAMPLES);
    let bar = |theta: f64, t: f64| {
        let r = region.r_in(theta) + t * (region.r_out(theta) - region.r_in(theta));
        Vec2::from_polar(r, theta)
    };
    for k in 0..per_side {
        let t = k as f64 / per_side as f64;
        // leading bar outward, outer arc, trailing bar inward, inner arc back
        pts.push(bar(span.start, t));
        let th = span.lerp(t);
        pts.push(Vec2::from_polar(region.r_out(th), th));
        pts.push(bar(span.end, 1.0 - t));
        let th = span.lerp(1.0 - t);
        pts.push(Vec2::from_polar(region.r_in(th), th));
    }
    pts
}

fn generic_target(partition: &PartitionState, domain: &Domain, f: &GenericCost, i: usize, hint: Option<Vec2>) -> Result<Vec2> {
    let span = partition.span(i);
    if span.width() <= 0.0 {
        return Err(CoverageError::DegenerateSubregion { index: i, workload: 0.0 });
    }
    let region = domain.region();
    let scale = region.bounding_radius();
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |cost: f64, p: Vec2| {
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, p));
        }
    };

    let grid = GRID_FRACTIONS.iter().flat_map(|&ft| {
        let theta = span.lerp(ft);
        GRID_FRACTIONS
            .iter()
            .map(move |&fr| Vec2::from_polar(region.r_in(theta) + fr * (region.r_out(theta) - region.r_in(theta)), theta))
    });
    let starts = hint.filter(|h| h.x.is_finite() && h.y.is_finite()).into_iter().chain(grid);

    let convex = f.is_strictly_convex();
    let mut any_converged = false;
    let mut residuals = Vec::new();
    for start in starts {
        let d = newton_descent(domain, span, f, start, scale)?;
        residuals.push(d.residual);
        if d.converged {
            any_converged = true;
            let inside = in_subregion(domain, span, d.point);
            if inside {
                if convex {
                    return Ok(d.point);
                }
                consider(d.cost, d.point);
            }
            if convex {
                break;
            }
        }
    }
    if !any_converged {
        return Err(CoverageError::TargetSearch { index: i, residuals });
    }
    for p in boundary_sweep(domain, span) {
        consider(cost_at(domain, span, f, p)?, p);
    }
    Ok(best.expect("boundary sweep always yields candidates").1)
}
