//! Spectral representation of the angular moment densities.
//!
//! The radial moments `ω(θ)`, `ω_x(θ)`, `ω_y(θ)` and `ω_{r²}(θ)` are smooth
//! and 2π-periodic, so a truncated Fourier series sampled at equispaced angles
//! represents them to near machine precision. Slice integrals then reduce to
//! evaluating a closed-form antiderivative, which is what the integrator
//! calls at every stage.

use std::ops::{Add, AddAssign, Mul, Sub};

use super::{quadrature, AnnularRegion, DensityField, QuadratureSettings, Vec2, TAU};
use crate::error::{CoverageError, Result};

/// Density-weighted moments of a set: mass, first moment and polar second
/// moment `∫ρ‖q‖²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub first: Vec2,
    pub second: f64,
}

impl Moments {
    fn from_array(a: [f64; 4]) -> Self {
        Moments {
            mass: a[0],
            first: Vec2::new(a[1], a[2]),
            second: a[3],
        }
    }

    /// `∫ρ‖p − q‖²` over the set carrying these moments.
    pub fn squared_distance_cost(&self, p: Vec2) -> f64 {
        p.norm_sq() * self.mass - 2.0 * p.dot(self.first) + self.second
    }

    /// `∫ρ‖q − c‖²` about the centroid `c`.
    pub fn spread(&self) -> f64 {
        self.second - self.first.norm_sq() / self.mass
    }
}

impl Add for Moments {
    type Output = Moments;
    fn add(self, o: Moments) -> Moments {
        Moments {
            mass: self.mass + o.mass,
            first: self.first + o.first,
            second: self.second + o.second,
        }
    }
}

impl AddAssign for Moments {
    fn add_assign(&mut self, o: Moments) {
        *self = *self + o;
    }
}

impl Sub for Moments {
    type Output = Moments;
    fn sub(self, o: Moments) -> Moments {
        Moments {
            mass: self.mass - o.mass,
            first: self.first - o.first,
            second: self.second - o.second,
        }
    }
}

impl Mul<f64> for Moments {
    type Output = Moments;
    fn mul(self, k: f64) -> Moments {
        Moments {
            mass: self.mass * k,
            first: self.first * k,
            second: self.second * k,
        }
    }
}

const MIN_SAMPLES: usize = 64;
const MAX_SAMPLES: usize = 8192;
const TAIL_TOL: f64 = 1e-12;
const SAMPLE_TOL: f64 = 1e-13;

/// Fourier coefficients of the four radial moment densities.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    samples: usize,
    mean: [f64; 4],
    // a_k / k and b_k / k for k = 1..=harmonics
    cos_over_k: Vec<[f64; 4]>,
    sin_over_k: Vec<[f64; 4]>,
    cos: Vec<[f64; 4]>,
    sin: Vec<[f64; 4]>,
}

/// Radial moments at one angle, integrated with the tight sampling tolerance.
pub(crate) fn radial_moment_array(
    region: &AnnularRegion,
    density: &DensityField,
    theta: f64,
    settings: QuadratureSettings,
) -> Result<[f64; 4]> {
    let (s, c) = theta.sin_cos();
    quadrature::integrate(
        |r| {
            let w = density.evaluate(r, theta) * r;
            Ok([w, w * r * c, w * r * s, w * r * r])
        },
        region.r_in(theta),
        region.r_out(theta),
        settings,
    )
}

impl AngularProfile {
    pub fn build(region: &AnnularRegion, density: &DensityField) -> Result<Self> {
        let settings = QuadratureSettings::with_tolerance(SAMPLE_TOL);
        let radius = region.bounding_radius();
        let mut samples = MIN_SAMPLES;
        loop {
            let values = (0..samples)
                .map(|j| radial_moment_array(region, density, TAU * j as f64 / samples as f64, settings))
                .collect::<Result<Vec<_>>>()?;
            let (mean, cos, sin) = real_dft(&values, samples / 2 - 1);

            let mut scale = [0.0f64; 4];
            for v in &values {
                for c in 0..4 {
                    scale[c] = scale[c].max(v[c].abs());
                }
            }
            let floor = [scale[0], scale[0] * radius, scale[0] * radius, scale[0] * radius * radius];
            let mut worst = 0.0f64;
            let mut converged = true;
            for k in (samples / 4)..cos.len() {
                for c in 0..4 {
                    let mag = cos[k][c].hypot(sin[k][c]);
                    let allowed = TAIL_TOL * scale[c] + 1e-2 * TAIL_TOL * floor[c];
                    worst = worst.max(mag / floor[c].max(f64::MIN_POSITIVE));
                    if mag > allowed {
                        converged = false;
                    }
                }
            }
            if converged {
                let keep = samples / 4;
                return Ok(Self::from_coefficients(samples, mean, &cos[..keep], &sin[..keep]));
            }
            if samples >= MAX_SAMPLES {
                return Err(CoverageError::Quadrature {
                    panels: samples,
                    residual: worst,
                });
            }
            samples *= 2;
        }
    }

    fn from_coefficients(samples: usize, mean: [f64; 4], cos: &[[f64; 4]], sin: &[[f64; 4]]) -> Self {
        // drop trailing harmonics that vanish in every component
        let mut harmonics = cos.len();
        while harmonics > 0 && cos[harmonics - 1].iter().chain(&sin[harmonics - 1]).all(|v| *v == 0.0) {
            harmonics -= 1;
        }
        let cos = cos[..harmonics].to_vec();
        let sin = sin[..harmonics].to_vec();
        let scale = |v: &[[f64; 4]]| {
            v.iter()
                .enumerate()
                .map(|(i, a)| a.map(|x| x / (i + 1) as f64))
                .collect::<Vec<_>>()
        };
        AngularProfile {
            samples,
            mean,
            cos_over_k: scale(&cos),
            sin_over_k: scale(&sin),
            cos,
            sin,
        }
    }

    /// Number of equispaced samples the representation was fitted on.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len()
    }

    /// Moment densities at `theta` (`ω`, `ω_x`, `ω_y`, `ω_{r²}`).
    pub fn density_at(&self, theta: f64) -> Moments {
        let mut acc = self.mean;
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        for (a, b) in self.cos.iter().zip(&self.sin) {
            for j in 0..4 {
                acc[j] += a[j] * c + b[j] * s;
            }
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
        }
        Moments::from_array(acc)
    }

    /// `ω(θ)` alone.
    pub fn omega(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut acc = self.mean[0];
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a[0] * c + b[0] * s;
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
        }
        acc
    }

    /// Antiderivative `∫_0^θ` of the moment densities, valid for any real θ.
    pub fn cumulative(&self, theta: f64) -> Moments {
        let mut acc = self.mean.map(|m| m * theta);
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        for (a, b) in self.cos_over_k.iter().zip(&self.sin_over_k) {
            for j in 0..4 {
                acc[j] += a[j] * s + b[j] * (1.0 - c);
            }
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
        }
        Moments::from_array(acc)
    }

    /// Workload-only antiderivative.
    pub fn cumulative_mass(&self, theta: f64) -> f64 {
        let mut acc = self.mean[0] * theta;
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (s1, c1);
        for (a, b) in self.cos_over_k.iter().zip(&self.sin_over_k) {
            acc += a[0] * s + b[0] * (1.0 - c);
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
        }
        acc
    }

    /// Moments of the whole region.
    pub fn total(&self) -> Moments {
        Moments::from_array(self.mean.map(|m| m * TAU))
    }

    /// Moments of the angular slice from `lo` to `hi`; when `hi < lo` the
    /// slice wraps through 2π.
    pub fn slice(&self, lo: f64, hi: f64) -> Moments {
        let hi = if hi < lo { hi + TAU } else { hi };
        self.cumulative(hi) - self.cumulative(lo)
    }

    pub fn slice_mass(&self, lo: f64, hi: f64) -> f64 {
        let hi = if hi < lo { hi + TAU } else { hi };
        self.cumulative_mass(hi) - self.cumulative_mass(lo)
    }
}

fn real_dft(values: &[[f64; 4]], harmonics: usize) -> ([f64; 4], Vec<[f64; 4]>, Vec<[f64; 4]>) {
    let n = values.len();
    let mut mean = [0.0; 4];
    for v in values {
        for c in 0..4 {
            mean[c] += v[c];
        }
    }
    let mean = mean.map(|m| m / n as f64);
    let mut cos = vec![[0.0; 4]; harmonics];
    let mut sin = vec![[0.0; 4]; harmonics];
    for k in 1..=harmonics {
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        for (j, v) in values.iter().enumerate() {
            // index reduction keeps the angle argument small and exact
            let phase = TAU * ((k * j) % n) as f64 / n as f64;
            let (s, c) = phase.sin_cos();
            for q in 0..4 {
                a[q] += v[q] * c;
                b[q] += v[q] * s;
            }
        }
        cos[k - 1] = a.map(|x| 2.0 * x / n as f64);
        sin[k - 1] = b.map(|x| 2.0 * x / n as f64);
    }
    (mean, cos, sin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_annulus_is_constant() {
        let region = AnnularRegion::circular(1.0, 2.0).unwrap();
        let density = DensityField::uniform(1.0, &region).unwrap();
        let p = AngularProfile::build(&region, &density).unwrap();
        assert_eq!(p.samples(), MIN_SAMPLES);
        assert!((p.omega(0.7) - 1.5).abs() < 1e-13);
        assert!((p.total().mass - 3.0 * PI).abs() < 1e-12);
        assert!((p.slice(0.0, PI / 2.0).mass - 0.75 * PI).abs() < 1e-12);
        assert!((p.slice(1.5 * PI, PI / 2.0).mass - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn case_study_matches_direct_quadrature() {
        let region = AnnularRegion::case_study();
        let density = DensityField::case_study(&region).unwrap();
        let p = AngularProfile::build(&region, &density).unwrap();
        let settings = QuadratureSettings::default();
        for i in 0..37 {
            let theta = 0.17 * i as f64;
            let direct = radial_moment_array(&region, &density, theta, settings).unwrap();
            let fitted = p.density_at(theta);
            assert!((fitted.mass - direct[0]).abs() < 1e-10 * direct[0].abs().max(1.0));
            assert!((fitted.first.x - direct[1]).abs() < 1e-10 * direct[3].abs());
            assert!((fitted.first.y - direct[2]).abs() < 1e-10 * direct[3].abs());
            assert!((fitted.second - direct[3]).abs() < 1e-10 * direct[3].abs());
        }
        // ω(0) closed form from the radial antiderivative
        let expected = 1f64.exp() * (3.5f64.powi(2) - 1.0) / 2.0 + 0.01 * (3.5f64.powi(3) - 1.0) / 3.0;
        assert!((p.omega(0.0) - expected).abs() < 1e-11 * expected);
    }

    #[test]
    fn cumulative_is_antiderivative() {
        let region = AnnularRegion::case_study();
        let density = DensityField::case_study(&region).unwrap();
        let p = AngularProfile::build(&region, &density).unwrap();
        let h = 1e-5;
        for i in 0..10 {
            let t = -3.0 + 0.9 * i as f64;
            let fd = (p.cumulative_mass(t + h) - p.cumulative_mass(t - h)) / (2.0 * h);
            assert!((fd - p.omega(t)).abs() < 1e-6 * p.omega(t));
            let period = p.cumulative_mass(t + TAU) - p.cumulative_mass(t);
            assert!((period - p.total().mass).abs() < 1e-11 * period);
        }
    }
}
