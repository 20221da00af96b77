//! Physical and control constants, plus the prescribed surface profiles.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// All physical constants of the model together with the two surface
/// forcing profiles sampled on the y-nodes.
///
/// `lambda` is the surface heat-exchange rate, treated as a primitive
/// constant. `k` is the dimensionless control parameter of the
/// Ornstein-Uhlenbeck reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub nu: f64,
    pub kappa_t: f64,
    pub kappa_s: f64,
    pub g: f64,
    pub alpha_t: f64,
    pub alpha_s: f64,
    pub lambda: f64,
    pub k: f64,
    /// Atmosphere surface temperature theta(y) at the y-nodes.
    pub theta_profile: Vec<f64>,
    /// Freshwater flux F(y) at the y-nodes; trapezoid integral must vanish.
    pub f_profile: Vec<f64>,
}

/// Relative tolerance on the freshwater-flux integral constraint.
pub const F_INTEGRAL_TOL: f64 = 1e-12;

impl PhysParams {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("kappa_t", self.kappa_t),
            ("kappa_s", self.kappa_s),
            ("lambda", self.lambda),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Params(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("g", self.g),
            ("alpha_t", self.alpha_t),
            ("alpha_s", self.alpha_s),
            ("k", self.k),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Params(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.theta_profile.len() != grid.ny {
            return Err(Error::Params(format!(
                "theta profile has {} nodes, grid has ny={}",
                self.theta_profile.len(),
                grid.ny
            )));
        }
        if self.f_profile.len() != grid.ny {
            return Err(Error::Params(format!(
                "F profile has {} nodes, grid has ny={}",
                self.f_profile.len(),
                grid.ny
            )));
        }
        let integral = trapezoid_y(&self.f_profile, grid);
        let fmax = self.f_profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if integral.abs() > F_INTEGRAL_TOL * fmax.max(1.0) {
            return Err(Error::Params(format!(
                "freshwater flux must have zero integral over [-l, l]; \
                 trapezoid integral is {integral:.6e} (max |F| = {fmax:.6e})"
            )));
        }
        Ok(())
    }
}

/// Trapezoid integral of a node profile over [-l, l].
pub fn trapezoid_y(profile: &[f64], grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for (i, v) in profile.iter().enumerate() {
        acc += grid.wy(i) * v;
    }
    acc * grid.dy
}

/// theta(y) = theta0 * cos(pi * y / (2 l)): warm equator edge, cold pole edge.
pub fn cosine_theta(grid: &Grid, theta0: f64) -> Vec<f64> {
    (0..grid.ny)
        .map(|i| theta0 * (std::f64::consts::PI * grid.y(i) / (2.0 * grid.l)).cos())
        .collect()
}

/// F(y) = f0 * cos(pi * y / l); zero trapezoid integral by symmetry.
pub fn cosine_f(grid: &Grid, f0: f64) -> Vec<f64> {
    (0..grid.ny)
        .map(|i| f0 * (std::f64::consts::PI * grid.y(i) / grid.l).cos())
        .collect()
}
