//! The Boolean model: radius laws, observation windows, simulated
//! realizations and contact queries.

mod contact;
mod index;
mod radius;
mod realization;
mod window;

use serde::{Deserialize, Serialize};

pub use contact::{ContactRecord, Hit};
pub use radius::{RadiusDistribution, RADIUS_TRUNCATION_TAIL};
pub use realization::Realization;
pub use window::Window;

use crate::error::{Error, Result};

/// Intensity, radius law and dimension of a stationary Boolean model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub intensity: f64,
    pub radius: RadiusDistribution,
    pub dim: usize,
}

impl ModelParams {
    pub fn new(intensity: f64, radius: RadiusDistribution, dim: usize) -> Result<Self> {
        let p = Self { intensity, radius, dim };
        p.validate()?;
        Ok(p)
    }

    /// Planar model.
    pub fn planar(intensity: f64, radius: RadiusDistribution) -> Result<Self> {
        Self::new(intensity, radius, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be positive and finite, got {}",
                self.intensity
            )));
        }
        if self.dim < 2 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        self.radius.validate()?;
        if !self.radius.has_positive_mass() {
            return Err(Error::InvalidParameter("radius law must satisfy P(R > 0) > 0".into()));
        }
        Ok(())
    }

    /// Volume fraction `1 - exp(-γ κ_d E R^d)`.
    pub fn volume_fraction(&self) -> f64 {
        let m = self.radius.moment(self.dim as u32);
        -(-self.intensity * crate::geometry::kappa(self.dim) * m).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_params() {
        let g = RadiusDistribution::uniform(0.05, 0.1).unwrap();
        assert!(ModelParams::planar(0.0, g).is_err());
        assert!(ModelParams::planar(f64::INFINITY, g).is_err());
        assert!(ModelParams::new(25.0, g, 1).is_err());
        let zero = RadiusDistribution::deterministic(0.0).unwrap();
        assert!(ModelParams::planar(25.0, zero).is_err());
        assert!(ModelParams::planar(25.0, g).is_ok());
    }
}
