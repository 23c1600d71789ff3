//! Coverage region, workload density and the quadrature primitives built on
//! them.
//!
//! The region is `Ω = {(r, θ) : r_in(θ) ≤ r ≤ r_out(θ)}` about the origin of
//! the region-local frame. Two integration routes are provided:
//!
//! * [`Domain::radial_moment`] and [`Domain::region_integral`] run adaptive
//!   composite Gauss–Legendre quadrature for arbitrary integrands;
//! * [`AngularProfile`] caches a spectral fit of the four polynomial moment
//!   densities for the hot paths of the simulator.
//!
//! Tests cross-check one route against the other.

mod curve;
mod density;
mod point;
mod profile;
pub mod quadrature;
mod region;

pub use curve::{FourierSeries, PolarCurve};
pub use density::{DensityField, DensityKind};
pub use point::Vec2;
pub use profile::{AngularProfile, Moments};
pub use quadrature::QuadratureSettings;
pub use region::{AnnularRegion, PointLocation, RegionSpec, DEFAULT_GRID};

use crate::error::{CoverageError, Result};

pub use std::f64::consts::TAU;

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest signed rotation taking `from` to `to`, in `(-π, π]`.
pub fn signed_angle_diff(from: f64, to: f64) -> f64 {
    let d = wrap_angle(to - from);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Circular distance between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    signed_angle_diff(a, b).abs()
}

/// Radial weight (or region integrand) multiplying `ρ`.
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Plain,
    X,
    Y,
    R2,
    /// Arbitrary function of the cartesian point, e.g. a service cost `f(p, q)`.
    Custom(&'a dyn Fn(Vec2) -> f64),
}

impl Weight<'_> {
    fn eval(&self, q: Vec2) -> f64 {
        match self {
            Weight::Plain => 1.0,
            Weight::X => q.x,
            Weight::Y => q.y,
            Weight::R2 => q.norm_sq(),
            Weight::Custom(f) => f(q),
        }
    }
}

impl std::fmt::Debug for Weight<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weight::Plain => f.write_str("Plain"),
            Weight::X => f.write_str("X"),
            Weight::Y => f.write_str("Y"),
            Weight::R2 => f.write_str("R2"),
            Weight::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Region, density and the cached angular profile.
#[derive(Debug, Clone)]
pub struct Domain {
    region: AnnularRegion,
    density: DensityField,
    settings: QuadratureSettings,
    profile: AngularProfile,
}

impl Domain {
    pub fn new(region: AnnularRegion, density: DensityField) -> Result<Self> {
        Self::with_settings(region, density, QuadratureSettings::default())
    }

    pub fn with_settings(region: AnnularRegion, density: DensityField, settings: QuadratureSettings) -> Result<Self> {
        let profile = AngularProfile::build(&region, &density)?;
        Ok(Domain {
            region,
            density,
            settings,
            profile,
        })
    }

    /// Region and density kind in one step; density bounds are sampled on the
    /// region's validation grid.
    pub fn from_kind(region: AnnularRegion, kind: DensityKind) -> Result<Self> {
        let density = DensityField::new(kind, &region)?;
        Self::new(region, density)
    }

    /// The case-study region with its density.
    pub fn case_study() -> Self {
        let region = AnnularRegion::case_study();
        let density = DensityField::case_study(&region).expect("case-study density is valid");
        Self::new(region, density).expect("case-study profile converges")
    }

    /// Circular annulus with constant density.
    pub fn uniform_annulus(r_in: f64, r_out: f64, rho: f64) -> Result<Self> {
        let region = AnnularRegion::circular(r_in, r_out)?;
        let density = DensityField::uniform(rho, &region)?;
        Self::new(region, density)
    }

    pub fn region(&self) -> &AnnularRegion {
        &self.region
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    pub fn profile(&self) -> &AngularProfile {
        &self.profile
    }

    pub fn quadrature(&self) -> QuadratureSettings {
        self.settings
    }

    /// Total workload `∫_0^{2π} ω`.
    pub fn total_workload(&self) -> f64 {
        self.profile.total().mass
    }

    pub fn contains(&self, point: Vec2) -> bool {
        self.region.contains(point)
    }

    /// `∫_{r_in(θ)}^{r_out(θ)} g(q) ρ(r, θ) r dr` for a vector-valued `g`.
    pub fn radial_integral<const K: usize, G>(&self, theta: f64, mut g: G) -> Result<[f64; K]>
    where
        G: FnMut(Vec2) -> [f64; K],
    {
        let (s, c) = theta.sin_cos();
        quadrature::integrate(
            |r| {
                let w = self.density.evaluate(r, theta) * r;
                Ok(g(Vec2::new(r * c, r * s)).map(|v| v * w))
            },
            self.region.r_in(theta),
            self.region.r_out(theta),
            self.settings,
        )
    }

    /// Radial moment of the density at angle `theta` under `weight`.
    pub fn radial_moment(&self, theta: f64, weight: Weight<'_>) -> Result<f64> {
        self.radial_integral(theta, |q| [weight.eval(q)]).map(|v| v[0])
    }

    /// `ω`, `ω_x`, `ω_y`, `ω_{r²}` at `theta` by direct quadrature.
    pub fn radial_moments(&self, theta: f64) -> Result<Moments> {
        let v = self.radial_integral(theta, |q| [1.0, q.x, q.y, q.norm_sq()])?;
        Ok(Moments {
            mass: v[0],
            first: Vec2::new(v[1], v[2]),
            second: v[3],
        })
    }

    /// Double integral of `g·ρ` over the angular slice from `phi_lo` to
    /// `phi_hi`, wrapping through 2π when `phi_hi < phi_lo`.
    pub fn region_integral_vec<const K: usize, G>(&self, phi_lo: f64, phi_hi: f64, g: G) -> Result<[f64; K]>
    where
        G: Fn(Vec2) -> [f64; K],
    {
        let hi = if phi_hi < phi_lo { phi_hi + TAU } else { phi_hi };
        quadrature::integrate(|theta| self.radial_integral(theta, &g), phi_lo, hi, self.settings)
    }

    pub fn region_integral(&self, phi_lo: f64, phi_hi: f64, integrand: Weight<'_>) -> Result<f64> {
        self.region_integral_vec(phi_lo, phi_hi, |q| [integrand.eval(q)])
            .map(|v| v[0])
    }

    /// Minimum and maximum of `ω` on a uniform grid of `grid_size` angles.
    pub fn omega_extrema(&self, grid_size: usize) -> Result<(f64, f64)> {
        if grid_size < 64 {
            return Err(CoverageError::InvalidArgument(format!(
                "omega grid must have at least 64 points, got {grid_size}"
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..grid_size {
            let w = self.radial_moment(TAU * j as f64 / grid_size as f64, Weight::Plain)?;
            lo = lo.min(w);
            hi = hi.max(w);
        }
        if lo <= 0.0 {
            return Err(CoverageError::InvalidDensity(format!(
                "radial workload density minimum {lo} is not positive"
            )));
        }
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn uniform() -> Domain {
        Domain::uniform_annulus(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn wrap_and_distance() {
        assert_eq!(wrap_angle(-1e-20), 0.0);
        assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!((circular_distance(0.1, 6.2) - (TAU - 6.1)).abs() < 1e-14);
        assert!((signed_angle_diff(6.2, 0.1) - (0.1 + TAU - 6.2)).abs() < 1e-14);
    }

    #[test]
    fn uniform_radial_moments() {
        let d = uniform();
        for theta in [0.0, 1.0, 4.0] {
            assert!((d.radial_moment(theta, Weight::Plain).unwrap() - 1.5).abs() < 1e-14);
            assert!((d.radial_moment(theta, Weight::R2).unwrap() - 3.75).abs() < 1e-13);
        }
        assert!((d.radial_moment(0.0, Weight::X).unwrap() - 7.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn case_study_radial_moment_at_zero() {
        let d = Domain::case_study();
        let expected = 1f64.exp() * (3.5f64.powi(2) - 1.0) / 2.0 + 0.01 * (3.5f64.powi(3) - 1.0) / 3.0;
        let got = d.radial_moment(0.0, Weight::Plain).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!((got - 15.4299).abs() < 1e-4);
    }

    #[test]
    fn uniform_region_integrals() {
        let d = uniform();
        let full = d.region_integral(0.0, TAU, Weight::Plain).unwrap();
        assert!((full - 3.0 * PI).abs() < 1e-12);
        let quarter = d.region_integral(0.0, FRAC_PI_2, Weight::Plain).unwrap();
        assert!((quarter - 0.75 * PI).abs() < 1e-12);
        let wrapped = d.region_integral(1.5 * PI, FRAC_PI_2, Weight::Plain).unwrap();
        assert!((wrapped - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn uniform_extrema_and_linearity() {
        let d = uniform();
        let (lo, hi) = d.omega_extrema(64).unwrap();
        assert!((lo - 1.5).abs() < 1e-14 && (hi - 1.5).abs() < 1e-14);
        assert!(d.omega_extrema(32).is_err());

        let cs = Domain::case_study();
        let doubled = Domain::from_kind(cs.region().clone(), cs.density().kind().scaled(2.0)).unwrap();
        let (a, b) = cs.omega_extrema(256).unwrap();
        let (a2, b2) = doubled.omega_extrema(256).unwrap();
        assert!((a2 - 2.0 * a).abs() < 1e-12 * a2);
        assert!((b2 - 2.0 * b).abs() < 1e-12 * b2);
    }

    #[test]
    fn additivity_and_consistency() {
        let d = Domain::case_study();
        let full = d.region_integral(0.0, TAU, Weight::Plain).unwrap();
        let cuts = [0.0, 0.4, 1.9, 2.2, 4.0, 5.5];
        let mut sum = 0.0;
        for w in 0..cuts.len() {
            let hi = if w + 1 == cuts.len() { cuts[0] } else { cuts[w + 1] };
            sum += d.region_integral(cuts[w], hi, Weight::Plain).unwrap();
        }
        assert!((sum - full).abs() < 1e-8 * full);
        let via_profile = d.total_workload();
        assert!((via_profile - full).abs() < 1e-8 * full);
        let via_omega = quadrature::integrate_scalar(
            |t| d.radial_moment(t, Weight::Plain).unwrap(),
            0.0,
            TAU,
            d.quadrature(),
        )
        .unwrap();
        assert!((via_omega - full).abs() < 1e-8 * full);
    }
}
