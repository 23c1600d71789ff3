use serde::{Deserialize, Serialize};

use super::{AnnularRegion, FourierSeries, TAU};
use crate::error::{CoverageError, Result};

/// Closed set of density families accepted in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityKind {
    Uniform {
        #[serde(default = "one")]
        value: f64,
    },
    /// `exp(sin²θ + cos θ) + radial_coeff · r`, scaled by `scale`.
    CaseStudy {
        #[serde(default = "case_study_radial")]
        radial_coeff: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `P(r) · A(θ)` with `P(r) = Σ c_k r^k` and `A` a Fourier series.
    RadialPolynomialTimesAngular { radial: Vec<f64>, angular: FourierSeries },
}

fn one() -> f64 {
    1.0
}

fn case_study_radial() -> f64 {
    0.01
}

impl DensityKind {
    pub fn evaluate(&self, r: f64, theta: f64) -> f64 {
        match self {
            DensityKind::Uniform { value } => *value,
            DensityKind::CaseStudy { radial_coeff, scale } => {
                let (s, c) = theta.sin_cos();
                scale * ((s * s + c).exp() + radial_coeff * r)
            }
            DensityKind::RadialPolynomialTimesAngular { radial, angular } => {
                let poly = radial.iter().rev().fold(0.0, |acc, c| acc * r + c);
                poly * angular.evaluate(theta)
            }
        }
    }

    /// Same density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DensityKind {
        match self {
            DensityKind::Uniform { value } => DensityKind::Uniform { value: value * factor },
            DensityKind::CaseStudy { radial_coeff, scale } => DensityKind::CaseStudy {
                radial_coeff: *radial_coeff,
                scale: scale * factor,
            },
            DensityKind::RadialPolynomialTimesAngular { radial, angular } => {
                DensityKind::RadialPolynomialTimesAngular {
                    radial: radial.iter().map(|c| c * factor).collect(),
                    angular: angular.clone(),
                }
            }
        }
    }
}

/// Workload density with sampled bounds `[lower, upper]` over the region.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    kind: DensityKind,
    lower: f64,
    upper: f64,
}

/// Radial samples per angular grid point when bounding the density.
const RADIAL_SAMPLES: usize = 17;

impl DensityField {
    pub fn new(kind: DensityKind, region: &AnnularRegion) -> Result<Self> {
        let grid = region.validation_grid();
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for j in 0..grid {
            let theta = TAU * j as f64 / grid as f64;
            let (r0, r1) = (region.r_in(theta), region.r_out(theta));
            for s in 0..RADIAL_SAMPLES {
                let r = r0 + (r1 - r0) * s as f64 / (RADIAL_SAMPLES - 1) as f64;
                let rho = kind.evaluate(r, theta);
                if !rho.is_finite() {
                    return Err(CoverageError::InvalidDensity(format!(
                        "non-finite density at r = {r}, theta = {theta}"
                    )));
                }
                lower = lower.min(rho);
                upper = upper.max(rho);
            }
        }
        if lower <= 0.0 {
            return Err(CoverageError::InvalidDensity(format!(
                "density lower bound {lower} is not positive"
            )));
        }
        Ok(DensityField { kind, lower, upper })
    }

    pub fn uniform(value: f64, region: &AnnularRegion) -> Result<Self> {
        Self::new(DensityKind::Uniform { value }, region)
    }

    pub fn case_study(region: &AnnularRegion) -> Result<Self> {
        Self::new(
            DensityKind::CaseStudy {
                radial_coeff: 0.01,
                scale: 1.0,
            },
            region,
        )
    }

    #[inline]
    pub fn evaluate(&self, r: f64, theta: f64) -> f64 {
        self.kind.evaluate(r, theta)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_values() {
        let k = DensityKind::CaseStudy {
            radial_coeff: 0.01,
            scale: 1.0,
        };
        assert!((k.evaluate(2.0, 0.0) - (1f64.exp() + 0.02)).abs() < 1e-15);
        assert!((k.evaluate(2.0, 0.3) - k.evaluate(2.0, 0.3 + TAU)).abs() < 1e-13);
    }

    #[test]
    fn bounds_and_rejection() {
        let region = AnnularRegion::case_study();
        let d = DensityField::case_study(&region).unwrap();
        assert!(d.lower() > 0.0 && d.lower() < d.upper());
        // e^{-1} + small radial term is the floor near θ = π
        assert!(d.lower() > (-1f64).exp() && d.lower() < (-1f64).exp() + 0.02);

        let neg = DensityKind::RadialPolynomialTimesAngular {
            radial: vec![1.0],
            angular: FourierSeries::new(0.2, vec![0.5], vec![]),
        };
        assert!(matches!(DensityField::new(neg, &region), Err(CoverageError::InvalidDensity(_))));
    }

    #[test]
    fn polynomial_density() {
        let k = DensityKind::RadialPolynomialTimesAngular {
            radial: vec![1.0, 0.0, 2.0],
            angular: FourierSeries::new(2.0, vec![0.5], vec![]),
        };
        // (1 + 2·9)·(2 + 0.5)
        assert!((k.evaluate(3.0, 0.0) - 19.0 * 2.5).abs() < 1e-12);
    }

    #[test]
    fn kind_from_json() {
        let k: DensityKind = serde_json::from_str(r#"{"kind":"case_study"}"#).unwrap();
        assert_eq!(
            k,
            DensityKind::CaseStudy {
                radial_coeff: 0.01,
                scale: 1.0
            }
        );
        assert!(serde_json::from_str::<DensityKind>(r#"{"value":1.0}"#).is_err());
    }
}
