use serde::{Deserialize, Serialize};

use super::{wrap_angle, PolarCurve, Vec2, TAU};
use crate::error::{CoverageError, Result};

pub const DEFAULT_GRID: usize = 2048;

/// Where a point sits relative to the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    /// Strictly inside the inner curve.
    Hole,
    Outside,
    /// The reference point itself; its polar angle is undefined.
    AtOrigin,
}

/// Planar set between two star-shaped polar curves about the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionSpec", into = "RegionSpec")]
pub struct AnnularRegion {
    inner: PolarCurve,
    outer: PolarCurve,
    validation_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub inner: PolarCurve,
    pub outer: PolarCurve,
    #[serde(default = "default_grid")]
    pub validation_grid: usize,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

impl TryFrom<RegionSpec> for AnnularRegion {
    type Error = CoverageError;
    fn try_from(spec: RegionSpec) -> Result<Self> {
        AnnularRegion::with_grid(spec.inner, spec.outer, spec.validation_grid)
    }
}

impl From<AnnularRegion> for RegionSpec {
    fn from(r: AnnularRegion) -> Self {
        RegionSpec {
            inner: r.inner,
            outer: r.outer,
            validation_grid: r.validation_grid,
        }
    }
}

impl AnnularRegion {
    pub fn new(inner: PolarCurve, outer: PolarCurve) -> Result<Self> {
        Self::with_grid(inner, outer, DEFAULT_GRID)
    }

    pub fn with_grid(inner: PolarCurve, outer: PolarCurve, validation_grid: usize) -> Result<Self> {
        if validation_grid == 0 {
            return Err(CoverageError::InvalidRegion("validation grid must be positive".into()));
        }
        if !inner.is_finite() || !outer.is_finite() {
            return Err(CoverageError::InvalidRegion("non-finite curve coefficient".into()));
        }
        for j in 0..validation_grid {
            let theta = TAU * j as f64 / validation_grid as f64;
            let r_in = inner.evaluate(theta);
            let r_out = outer.evaluate(theta);
            if r_in <= 0.0 {
                return Err(CoverageError::InvalidRegion(format!(
                    "inner radius {r_in} is not positive at theta = {theta}"
                )));
            }
            if r_out <= r_in {
                return Err(CoverageError::InvalidRegion(format!(
                    "outer radius {r_out} does not exceed inner radius {r_in} at theta = {theta}"
                )));
            }
        }
        Ok(AnnularRegion {
            inner,
            outer,
            validation_grid,
        })
    }

    /// Circular annulus with constant radii.
    pub fn circular(r_in: f64, r_out: f64) -> Result<Self> {
        Self::new(PolarCurve::constant(r_in), PolarCurve::constant(r_out))
    }

    /// The case-study region: `r_in = 1 + 0.5 sin 2θ`, `r_out = 3 + 0.5 cos 2θ`.
    pub fn case_study() -> Self {
        Self::new(
            PolarCurve::new(1.0, vec![], vec![0.0, 0.5]),
            PolarCurve::new(3.0, vec![0.0, 0.5], vec![]),
        )
        .expect("case-study region is valid")
    }

    pub fn inner(&self) -> &PolarCurve {
        &self.inner
    }

    pub fn outer(&self) -> &PolarCurve {
        &self.outer
    }

    pub fn validation_grid(&self) -> usize {
        self.validation_grid
    }

    pub fn r_in(&self, theta: f64) -> f64 {
        self.inner.evaluate(theta)
    }

    pub fn r_out(&self, theta: f64) -> f64 {
        self.outer.evaluate(theta)
    }

    /// Largest outer radius on the validation grid plus 1%.
    pub fn bounding_radius(&self) -> f64 {
        let max = (0..self.validation_grid)
            .map(|j| self.r_out(TAU * j as f64 / self.validation_grid as f64))
            .fold(0.0, f64::max);
        max * 1.01
    }

    pub fn locate(&self, point: Vec2) -> PointLocation {
        let r = point.norm();
        if r == 0.0 {
            return PointLocation::AtOrigin;
        }
        let theta = wrap_angle(point.y.atan2(point.x));
        if r < self.r_in(theta) {
            PointLocation::Hole
        } else if r <= self.r_out(theta) {
            PointLocation::Inside
        } else {
            PointLocation::Outside
        }
    }

    /// Boundary-inclusive membership test. The origin is never contained.
    pub fn contains(&self, point: Vec2) -> bool {
        let loc = self.locate(point);
        if loc == PointLocation::AtOrigin {
            log::debug!("containment query at the origin: polar angle undefined");
        }
        loc == PointLocation::Inside
    }
}
