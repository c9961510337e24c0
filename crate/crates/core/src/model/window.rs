use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GaugeBody, GaugeKind};

/// Axis-parallel box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidParameter(
                "window corners must have equal, nonzero dimension".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || lo >= hi)
        {
            return Err(Error::InvalidParameter(format!(
                "window needs lower < upper componentwise, got {lower:?} {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]^d`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    /// The centered cube `[-n, n]^d`.
    pub fn centered(half_width: f64, dim: usize) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Grows the box by `margin` on every side.
    pub fn dilate(&self, margin: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| v - margin).collect(),
            upper: self.upper.iter().map(|v| v + margin).collect(),
        }
    }

    /// The eroded window `{x ∈ W : x + εB ⊆ W}`.
    pub fn erode(&self, eps: f64, gauge: &GaugeBody) -> Result<Self> {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        match gauge.kind() {
            GaugeKind::UnitBall => {
                for (lo, hi) in lower.iter_mut().zip(upper.iter_mut()) {
                    *lo += eps;
                    *hi -= eps;
                }
            }
            GaugeKind::Segment => {
                let u = gauge.direction().expect("segment has a direction");
                for i in 0..lower.len() {
                    if u[i] > 0.0 {
                        upper[i] -= eps * u[i];
                    } else if u[i] < 0.0 {
                        lower[i] -= eps * u[i];
                    }
                }
            }
        }
        Self::new(lower, upper).map_err(|_| Error::EmptyErodedWindow)
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn inner_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Points of the lattice `{((k - 1/2) h, …) : k ∈ ℤ}` lying in the window,
    /// flattened with stride `dim`, last coordinate fastest.
    pub fn lattice_points(&self, h: f64) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                let k0 = (lo / h + 0.5).ceil() as i64;
                let k1 = (hi / h + 0.5).floor() as i64;
                (k0..=k1)
                    .map(|k| (k as f64 - 0.5) * h)
                    .filter(|&v| v >= lo && v <= hi)
                    .collect()
            })
            .collect();
        let count: usize = axes.iter().map(Vec::len).product();
        let d = self.dim();
        let mut out = vec![0.0; count * d];
        for (n, point) in out.chunks_mut(d).enumerate() {
            let mut rest = n;
            for i in (0..d).rev() {
                let len = axes[i].len();
                point[i] = axes[i][rest % len];
                rest /= len;
            }
        }
        out
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.lower.iter().chain(&self.upper).map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(":"))
    }
}

impl FromStr for Window {
    type Err = Error;

    /// Parses `x0:y0:x1:y1` (lower corner then upper corner; any dimension).
    fn from_str(s: &str) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(':')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad window coordinate {t:?}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() < 4 || !vals.len().is_multiple_of(2) {
            return Err(Error::Parse(format!("window needs lower and upper corners, got {s:?}")));
        }
        let d = vals.len() / 2;
        Self::new(vals[..d].to_vec(), vals[d..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_lattice_matches_grid() {
        let w = Window::unit(2);
        let pts = w.lattice_points(1.0 / 300.0);
        assert_eq!(pts.len(), 2 * 90_000);
        assert!((pts[0] - 0.5 / 300.0).abs() < 1e-15);
        assert!((pts[3] - 1.5 / 300.0).abs() < 1e-15);
        assert!((pts[2 * 90_000 - 1] - 299.5 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn centered_lattice_is_symmetric() {
        let w = Window::centered(2.0, 2).unwrap();
        let pts = w.lattice_points(0.1);
        assert_eq!(pts.len(), 2 * 40 * 40);
    }

    #[test]
    fn erosion() {
        let w = Window::unit(2);
        let ball = GaugeBody::unit_ball(2).unwrap();
        let e = w.erode(0.05, &ball).unwrap();
        assert_eq!(e.lower(), &[0.05, 0.05]);
        assert_eq!(e.upper(), &[0.95, 0.95]);
        let seg = GaugeBody::axis_segment(0, false).unwrap();
        let e = w.erode(0.05, &seg).unwrap();
        assert_eq!(e.lower(), &[0.05, 0.0]);
        assert_eq!(e.upper(), &[1.0, 1.0]);
        assert_eq!(w.erode(0.0, &ball).unwrap(), w);
        assert_eq!(w.erode(0.5, &ball), Err(Error::EmptyErodedWindow));
        assert_eq!(w.erode(1.0, &seg), Err(Error::EmptyErodedWindow));
    }

    #[test]
    fn parse() {
        let w: Window = "0:0:1:2".parse().unwrap();
        assert_eq!(w.volume(), 2.0);
        assert_eq!(w.to_string(), "0:0:1:2");
        assert!("0:0:1".parse::<Window>().is_err());
        assert!("1:0:0:1".parse::<Window>().is_err());
    }
}
