//! Closed-form Kepler two-body orbits.
//!
//! An orbit is fully determined by its eccentricity e and semi-latus rectum l:
//!
//! ```text
//! e = |r0^3 w0^2 / (G m2) - 1|        l = r0^4 w0^2 / (G m2)
//! r(theta) = l / (1 + e cos(theta))
//! ```
//!
//! The mass of the orbiting body m1 cancels and never enters the shape; that
//! built-in redundancy is what the reduction pipeline is expected to find.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_G: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerParams {
    /// Orbiting body mass (kg). Does not affect the orbit.
    pub m1: f64,
    /// Central body mass (kg).
    pub m2: f64,
    /// Closest-approach distance (m).
    pub r0: f64,
    /// Initial angular velocity (1/day).
    pub omega0: f64,
    /// Gravitational constant (m^3 kg^-1 day^-2).
    pub g: f64,
}

impl KeplerParams {
    pub fn new(m1: f64, m2: f64, r0: f64, omega0: f64, g: f64) -> Result<Self> {
        let p = KeplerParams { m1, m2, r0, omega0, g };
        p.validate()?;
        Ok(p)
    }

    /// Construct from the four free parameters with the default G.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        if free.len() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "kepler expects 4 free parameters, got {}",
                free.len()
            )));
        }
        KeplerParams::new(free[0], free[1], free[2], free[3], DEFAULT_G)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m1", self.m1),
            ("m2", self.m2),
            ("r0", self.r0),
            ("omega0", self.omega0),
            ("G", self.g),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "kepler parameter {name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCurve {
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
    pub e: f64,
    pub l: f64,
}

/// Eccentricity and semi-latus rectum of the orbit.
pub fn kepler_shape(params: &KeplerParams) -> Result<(f64, f64)> {
    params.validate()?;
    let a = params.r0.powi(3) * params.omega0.powi(2) / (params.g * params.m2);
    let e = (a - 1.0).abs();
    let l = params.r0 * a;
    if !e.is_finite() || !l.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite orbit shape (e={e}, l={l}) for {params:?}"
        )));
    }
    Ok((e, l))
}

/// Radii at `n_theta` evenly spaced angles over [0, 2 pi] (endpoints included).
pub fn kepler_orbit(params: &KeplerParams, n_theta: usize) -> Result<OrbitCurve> {
    if n_theta < 2 {
        return Err(Error::invalid(format!("n_theta must be >= 2, got {n_theta}")));
    }
    let (e, l) = kepler_shape(params)?;
    if e >= 1.0 {
        return Err(Error::UnboundedOrbit { e });
    }
    let step = 2.0 * std::f64::consts::PI / (n_theta - 1) as f64;
    let thetas: Vec<f64> = (0..n_theta).map(|i| i as f64 * step).collect();
    let radii: Vec<f64> = thetas.iter().map(|&t| l / (1.0 + e * t.cos())).collect();
    Ok(OrbitCurve { thetas, radii, e, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shape_reference_values() {
        let p = KeplerParams::new(0.3, 0.5, 0.5, 1.0, 0.5).unwrap();
        let (e, l) = kepler_shape(&p).unwrap();
        assert_relative_eq!(e, 0.5, max_relative = 1e-15);
        assert_relative_eq!(l, 0.25, max_relative = 1e-15);
    }

    #[test]
    fn circular_orbit_when_balanced() {
        // r0^3 w0^2 = G m2 makes the orbit a circle of radius r0.
        let p = KeplerParams::new(0.3, 0.25, 0.5, 1.0, 0.5).unwrap();
        let (e, l) = kepler_shape(&p).unwrap();
        assert_relative_eq!(e, 0.0, epsilon = 1e-15);
        assert_relative_eq!(l, 0.5, max_relative = 1e-15);
        let orbit = kepler_orbit(&p, 50).unwrap();
        for &r in &orbit.radii {
            assert_relative_eq!(r, l, max_relative = 1e-12);
        }
    }

    #[test]
    fn m1_cancels_exactly() {
        let a = KeplerParams::new(0.1, 0.5, 0.5, 1.0, 0.5).unwrap();
        let b = KeplerParams::new(1.0, 0.5, 0.5, 1.0, 0.5).unwrap();
        assert_eq!(kepler_shape(&a).unwrap(), kepler_shape(&b).unwrap());
        let oa = kepler_orbit(&a, 100).unwrap();
        let ob = kepler_orbit(&b, 100).unwrap();
        assert_eq!(oa.radii, ob.radii);
    }

    #[test]
    fn orbit_reference_radii() {
        // e = 0.5, l = 0.25: r(0) = 1/6, r(pi) = 1/2.
        let p = KeplerParams::new(0.3, 0.5, 0.5, 1.0, 0.5).unwrap();
        let orbit = kepler_orbit(&p, 101).unwrap();
        assert_relative_eq!(orbit.radii[0], 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(orbit.radii[50], 0.5, max_relative = 1e-12);
        assert_relative_eq!(orbit.thetas[50], std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn cosine_symmetry_of_radii() {
        let p = KeplerParams::new(0.3, 0.5, 0.5, 1.0, 0.5).unwrap();
        let orbit = kepler_orbit(&p, 100).unwrap();
        let n = orbit.radii.len();
        for i in 0..n {
            // theta_{n-1-i} = 2 pi - theta_i on the inclusive grid.
            assert_relative_eq!(orbit.radii[i], orbit.radii[n - 1 - i], max_relative = 1e-12);
        }
    }

    #[test]
    fn extreme_radii_at_grid_points() {
        let p = KeplerParams::new(0.3, 0.5, 0.5, 1.0, 0.5).unwrap();
        let orbit = kepler_orbit(&p, 101).unwrap();
        let min = orbit.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = orbit.radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(min, orbit.l / (1.0 + orbit.e), max_relative = 1e-12);
        assert_relative_eq!(max, orbit.l / (1.0 - orbit.e), max_relative = 1e-12);
    }

    #[test]
    fn unbounded_orbit_is_an_error() {
        // A = 2.8 > 2 so e > 1.
        let p = KeplerParams::new(0.3, 0.1, 0.7, 1.0, 0.5).unwrap();
        let (e, _) = kepler_shape(&p).unwrap();
        assert!(e > 1.0);
        assert!(matches!(kepler_orbit(&p, 100), Err(Error::UnboundedOrbit { .. })));
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(KeplerParams::new(0.0, 0.5, 0.5, 1.0, 0.5).is_err());
        assert!(KeplerParams::new(0.3, -0.5, 0.5, 1.0, 0.5).is_err());
        assert!(KeplerParams::new(0.3, 0.5, f64::NAN, 1.0, 0.5).is_err());
    }
}
