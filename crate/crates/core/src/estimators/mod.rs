//! Estimators of the radius distribution: the weighted random measure `η`,
//! its edge-corrected variants and the arc-based limits.

mod arcs;
mod grid;
mod measure;
mod polar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use arcs::{
    estimate_limit_linear, estimate_limit_linear_combined, estimate_limit_spherical, visible_arcs, ArcDecomposition,
    VisibleArc,
};
pub use grid::{ContactField, PointFilter};
pub use measure::{RadiusSet, WeightedRadiusMeasure};
pub use polar::{polar_eta, PolarConfig};

use crate::emptyspace::WeightFunction;
use crate::error::{Error, Result};
use crate::geometry::GaugeBody;
use crate::model::{Realization, Window};

/// Grid spacing used unless configured otherwise.
pub const DEFAULT_GRID_H: f64 = 1.0 / 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `η_W` with `Z` observed on `W ⊕ εB`.
    Weighted,
    /// `η` over the eroded window `W ⊖ εB`.
    WeightedMinus,
    /// Contact against `Z ∩ W` only.
    Uncorrected,
    /// Keeps points closer to `Z` than to `∂W`.
    Hanisch,
    /// Visible-arc limit for the ball.
    LimitSpherical,
    /// Visible-arc limit for a segment direction.
    LimitLinear,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Weighted,
        Method::WeightedMinus,
        Method::Uncorrected,
        Method::Hanisch,
        Method::LimitSpherical,
        Method::LimitLinear,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Weighted => "weighted",
            Method::WeightedMinus => "minus",
            Method::Uncorrected => "uncorrected",
            Method::Hanisch => "hanisch",
            Method::LimitSpherical => "limit-spherical",
            Method::LimitLinear => "limit-linear",
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, Method::LimitSpherical | Method::LimitLinear)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

/// One estimator: method, gauge, weight and grid spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub gauge: GaugeBody,
    pub weight: WeightFunction,
    pub grid_h: f64,
}

impl EstimatorConfig {
    pub fn new(method: Method, gauge: GaugeBody, weight: WeightFunction, grid_h: f64) -> Result<Self> {
        let cfg = Self {
            method,
            gauge,
            weight,
            grid_h,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_h > 0.0 && self.grid_h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {}",
                self.grid_h
            )));
        }
        self.weight.validate()?;
        match self.method {
            Method::LimitSpherical if !self.gauge.is_ball() => Err(Error::UnsupportedGauge(
                "the spherical limit estimator needs the unit ball".into(),
            )),
            Method::LimitLinear if self.gauge.is_ball() => Err(Error::UnsupportedGauge(
                "the linear limit estimator needs a segment".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Gauge reach needed by grid methods: the end of the weight's support.
    pub fn reach(&self) -> Result<f64> {
        let end = self.weight.support_end();
        if end.is_finite() {
            Ok(end)
        } else {
            Err(Error::InvalidParameter(
                "grid estimators need a weight with bounded support".into(),
            ))
        }
    }
}

/// The measure `η_W` evaluated on the lattice `L_h ∩ W`.
pub fn eta_measure(z: &Realization, w: &Window, cfg: &EstimatorConfig) -> Result<WeightedRadiusMeasure> {
    cfg.validate()?;
    if cfg.method != Method::Weighted {
        return Err(Error::InvalidParameter(format!(
            "eta_measure computes the weighted estimator, got method {}",
            cfg.method
        )));
    }
    let field = ContactField::compute(z, w, &cfg.gauge, cfg.grid_h, cfg.reach()?)?;
    Ok(field.measure(z, &cfg.weight, &PointFilter::All))
}

/// `Ĝ(C) = η(C) / η(ℝ⁺)` with `0/0 = 0`.
pub fn estimate_ratio(measure: &WeightedRadiusMeasure, set: &RadiusSet) -> f64 {
    measure.ratio(set)
}

/// Minus-sampling, uncorrected or Hanisch version of `η`.
pub fn estimate_edge_corrected(z: &Realization, w: &Window, cfg: &EstimatorConfig) -> Result<WeightedRadiusMeasure> {
    cfg.validate()?;
    let reach = cfg.reach()?;
    match cfg.method {
        Method::WeightedMinus => {
            let eroded = w.erode(reach, &cfg.gauge)?;
            let field = ContactField::compute(z, w, &cfg.gauge, cfg.grid_h, reach)?;
            Ok(field.measure(z, &cfg.weight, &PointFilter::Inside(eroded)))
        }
        Method::Uncorrected => {
            let field = ContactField::compute_clipped(z, w, &cfg.gauge, cfg.grid_h, reach)?;
            Ok(field.measure(z, &cfg.weight, &PointFilter::All))
        }
        Method::Hanisch => {
            let field = ContactField::compute(z, w, &cfg.gauge, cfg.grid_h, reach)?;
            Ok(field.measure(z, &cfg.weight, &PointFilter::Hanisch))
        }
        m => Err(Error::InvalidParameter(format!("{m} is not an edge-corrected method"))),
    }
}

/// Runs any configured estimator.
pub fn estimate(z: &Realization, w: &Window, cfg: &EstimatorConfig) -> Result<WeightedRadiusMeasure> {
    match cfg.method {
        Method::Weighted => eta_measure(z, w, cfg),
        Method::WeightedMinus | Method::Uncorrected | Method::Hanisch => estimate_edge_corrected(z, w, cfg),
        Method::LimitSpherical => {
            cfg.validate()?;
            estimate_limit_spherical(z, w)
        }
        Method::LimitLinear => {
            cfg.validate()?;
            estimate_limit_linear(z, w, cfg.gauge.direction().expect("segment"))
        }
    }
}
