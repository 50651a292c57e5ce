use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical knobs shared by the geometry routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    /// Maximal arc-length step of the RK4 integrators.
    pub ode_step: f64,
    /// Base finite-difference step. Second differences use `fd_step.sqrt()`.
    pub fd_step: f64,
    /// Minimal number of quadrature intervals along a segment.
    pub quadrature_points: usize,
    /// Generic comparison tolerance.
    pub tolerance: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            ode_step: 1e-3,
            fd_step: 1e-5,
            quadrature_points: 256,
            tolerance: 1e-9,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.ode_step) || !positive(self.fd_step) || !positive(self.tolerance) {
            return Err(Error::InvalidParameter(
                "ode_step, fd_step and tolerance must be positive".into(),
            ));
        }
        if self.quadrature_points < 16 {
            return Err(Error::InvalidParameter(
                "quadrature_points must be at least 16".into(),
            ));
        }
        Ok(())
    }

    /// Step for central second differences.
    pub fn second_difference_step(&self) -> f64 {
        self.fd_step.sqrt()
    }

    /// Number of uniform intervals used to sample a segment of length `len`, always even.
    pub fn intervals_for(&self, len: f64) -> usize {
        let n = ((len / self.ode_step).ceil() as usize).max(self.quadrature_points);
        n + n % 2
    }
}
