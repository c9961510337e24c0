//! Gauge bodies, dimensional constants and ball-intersection volumes.
//!
//! The gauge body `B` defines the distance `d_B(x, A) = inf{t >= 0 : (x + tB) ∩ A ≠ ∅}`.
//! Two bodies are supported: the Euclidean unit ball and the unit segment
//! `{s u : 0 <= s <= 1}` with a unit direction `u`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the `k`-dimensional unit ball, `π^{k/2} / Γ(1 + k/2)`.
///
/// Uses the recurrence `κ_k = 2π/k · κ_{k-2}`, which is the Gamma-function
/// formula with `Γ(1) = 1` and `Γ(3/2) = √π/2` unrolled.
pub fn kappa(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / k as f64 * kappa(k - 2),
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeKind {
    UnitBall,
    Segment,
}

/// Structuring element used to measure distances from a point to `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeBody {
    kind: GaugeKind,
    /// Unit direction; empty for the ball.
    direction: Vec<f64>,
    dim: usize,
    /// `(j + 1) κ_{d-1-j} V_{j+1}(B)` for `j = 0..d`.
    density_coeffs: Vec<f64>,
}

impl GaugeBody {
    pub fn unit_ball(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self::build(GaugeKind::UnitBall, Vec::new(), dim))
    }

    /// Unit segment `[0, u]`. The direction must have norm 1 within `1e-12`.
    pub fn segment(direction: Vec<f64>) -> Result<Self> {
        let dim = direction.len();
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "segment direction must be a unit vector, got norm {norm}"
            )));
        }
        Ok(Self::build(GaugeKind::Segment, direction, dim))
    }

    /// Planar segment along a coordinate axis: `axis` 0 or 1, `positive` sign.
    pub fn axis_segment(axis: usize, positive: bool) -> Result<Self> {
        if axis > 1 {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        let mut u = vec![0.0; 2];
        u[axis] = if positive { 1.0 } else { -1.0 };
        Self::segment(u)
    }

    /// The four planar axis directions `+e1, -e1, +e2, -e2`.
    pub fn planar_axis_segments() -> [GaugeBody; 4] {
        [
            Self::axis_segment(0, true).unwrap(),
            Self::axis_segment(0, false).unwrap(),
            Self::axis_segment(1, true).unwrap(),
            Self::axis_segment(1, false).unwrap(),
        ]
    }

    fn build(kind: GaugeKind, direction: Vec<f64>, dim: usize) -> Self {
        let mut body = Self {
            kind,
            direction,
            dim,
            density_coeffs: Vec::new(),
        };
        let v = body.intrinsic_volumes();
        body.density_coeffs = (0..dim)
            .map(|j| (j + 1) as f64 * kappa(dim - 1 - j) * v[j + 1])
            .collect();
        body
    }

    pub fn kind(&self) -> GaugeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn direction(&self) -> Option<&[f64]> {
        match self.kind {
            GaugeKind::UnitBall => None,
            GaugeKind::Segment => Some(&self.direction),
        }
    }

    pub fn is_ball(&self) -> bool {
        self.kind == GaugeKind::UnitBall
    }

    /// Intrinsic volumes `(V_0, …, V_d)`.
    pub fn intrinsic_volumes(&self) -> Vec<f64> {
        let d = self.dim;
        match self.kind {
            GaugeKind::UnitBall => (0..=d).map(|j| binomial(d, j) * kappa(d) / kappa(d - j)).collect(),
            GaugeKind::Segment => {
                let mut v = vec![0.0; d + 1];
                v[0] = 1.0;
                v[1] = 1.0;
                v
            }
        }
    }

    /// The density `h_B(t, r) = Σ_{j<d} (j+1) κ_{d-1-j} V_{j+1}(B) r^{d-1-j} t^j`.
    pub fn density(&self, t: f64, r: f64) -> f64 {
        let d = self.dim;
        self.density_coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if *c == 0.0 {
                    0.0
                } else {
                    c * r.powi((d - 1 - j) as i32) * t.powi(j as i32)
                }
            })
            .sum()
    }

    /// Gauge distance from `x` to the closed ball `B(center, radius)`.
    ///
    /// Returns `f64::INFINITY` when a segment ray misses the ball.
    pub fn distance_to_ball(&self, x: &[f64], center: &[f64], radius: f64) -> f64 {
        match self.kind {
            GaugeKind::UnitBall => {
                let dist = euclid(x, center);
                (dist - radius).max(0.0)
            }
            GaugeKind::Segment => ray_ball_hit(x, &self.direction, center, radius),
        }
    }

    /// Gauge distance from `x ∈ W` to the boundary of the box `[lower, upper]`.
    pub fn distance_to_box_boundary(&self, x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
        match self.kind {
            GaugeKind::UnitBall => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&xi, (&lo, &hi))| (xi - lo).min(hi - xi))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            GaugeKind::Segment => ray_box_exit(x, &self.direction, lower, upper),
        }
    }
}

impl fmt::Display for GaugeBody {
    /// `ball`, `segment:+x` style names for axis segments, otherwise
    /// `segment:` followed by the comma separated direction.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GaugeKind::UnitBall => f.write_str("ball"),
            GaugeKind::Segment => {
                let axis = match self.direction.as_slice() {
                    [x, y] if *x == 1.0 && *y == 0.0 => Some("+x"),
                    [x, y] if *x == -1.0 && *y == 0.0 => Some("-x"),
                    [x, y] if *x == 0.0 && *y == 1.0 => Some("+y"),
                    [x, y] if *x == 0.0 && *y == -1.0 => Some("-y"),
                    _ => None,
                };
                match axis {
                    Some(a) => write!(f, "segment:{a}"),
                    None => {
                        let parts: Vec<String> = self.direction.iter().map(|v| v.to_string()).collect();
                        write!(f, "segment:{}", parts.join(","))
                    }
                }
            }
        }
    }
}

impl FromStr for GaugeBody {
    type Err = Error;

    /// Parses `ball` (planar), `segment:+x|-x|+y|-y` or `segment:u1,u2,…`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ball" => Self::unit_ball(2),
            "segment:+x" => Self::axis_segment(0, true),
            "segment:-x" => Self::axis_segment(0, false),
            "segment:+y" => Self::axis_segment(1, true),
            "segment:-y" => Self::axis_segment(1, false),
            t => {
                let dir = t
                    .strip_prefix("segment:")
                    .ok_or_else(|| Error::Parse(format!("gauge must be ball or segment:<dir>, got {s:?}")))?;
                let u = dir
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad direction {dir:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::segment(u)
            }
        }
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Smallest `t >= 0` with `x + t u` in the closed ball, or infinity.
///
/// Tangency counts as a hit. The root is taken in the cancellation-free form
/// `t = c / (-b + sqrt(b² - c))`.
pub(crate) fn ray_ball_hit(x: &[f64], u: &[f64], center: &[f64], radius: f64) -> f64 {
    let mut b = 0.0;
    let mut dd = 0.0;
    for i in 0..x.len() {
        let w = x[i] - center[i];
        b += u[i] * w;
        dd += w * w;
    }
    let c = dd - radius * radius;
    if c <= 0.0 {
        return 0.0;
    }
    if b >= 0.0 {
        return f64::INFINITY;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    c / (-b + disc.sqrt())
}

/// Distance along `u` from `x` (inside the box) to the box boundary.
pub(crate) fn ray_box_exit(x: &[f64], u: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..x.len() {
        if u[i] > 0.0 {
            t = t.min((upper[i] - x[i]) / u[i]);
        } else if u[i] < 0.0 {
            t = t.min((lower[i] - x[i]) / u[i]);
        }
    }
    t.max(0.0)
}

/// Arguments of `κ_B(u; t1, t2, r)` for the unit ball: the volume of
/// `B(o, radius1) ∩ B(offset, radius2)` with `radius_i = t_i + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LensSpec {
    pub offset: Vec<f64>,
    pub radius1: f64,
    pub radius2: f64,
}

impl LensSpec {
    pub fn new(offset: Vec<f64>, radius1: f64, radius2: f64) -> Result<Self> {
        if !(radius1 >= 0.0 && radius2 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lens radii must be nonnegative, got {radius1} and {radius2}"
            )));
        }
        Ok(Self {
            offset,
            radius1,
            radius2,
        })
    }
}

pub fn lens_volume(spec: &LensSpec) -> Result<f64> {
    let dist = spec.offset.iter().map(|v| v * v).sum::<f64>().sqrt();
    match spec.offset.len() {
        2 => Ok(lens_area(dist, spec.radius1, spec.radius2)),
        3 => Ok(lens_volume_3d(dist, spec.radius1, spec.radius2)),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Area of the intersection of two disks with radii `a`, `b` at center distance `dist`.
pub fn lens_area(dist: f64, a: f64, b: f64) -> f64 {
    if dist >= a + b {
        return 0.0;
    }
    let small = a.min(b);
    if dist <= (a - b).abs() {
        return PI * small * small;
    }
    let ca = ((dist * dist + a * a - b * b) / (2.0 * dist * a)).clamp(-1.0, 1.0);
    let cb = ((dist * dist + b * b - a * a) / (2.0 * dist * b)).clamp(-1.0, 1.0);
    let k = (-dist + a + b) * (dist + a - b) * (dist - a + b) * (dist + a + b);
    let area = a * a * ca.acos() + b * b * cb.acos() - 0.5 * k.max(0.0).sqrt();
    area.clamp(0.0, PI * small * small)
}

/// Volume of the intersection of two balls in three dimensions.
pub fn lens_volume_3d(dist: f64, a: f64, b: f64) -> f64 {
    if dist >= a + b {
        return 0.0;
    }
    let small = a.min(b);
    let full = 4.0 / 3.0 * PI * small.powi(3);
    if dist <= (a - b).abs() {
        return full;
    }
    let s = a + b - dist;
    let v = PI * s * s * (dist * dist + 2.0 * dist * (a + b) - 3.0 * (a - b) * (a - b)) / (12.0 * dist);
    v.clamp(0.0, full)
}
