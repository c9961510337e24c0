//! First- and second-order empty space functions, the normalization `β`
//! and the decay constant `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{kappa, lens_area, lens_volume_3d, GaugeBody};
use crate::model::{ModelParams, RadiusDistribution};
use crate::quadrature::{adaptive, gl64, GaussLegendre};

/// `F̄` values below this are treated as zero when truncating integrals.
pub const SURVIVAL_FLOOR: f64 = 1e-16;

/// Relative slack allowed when checking the second-order bounds.
const BOUND_SLACK: f64 = 1e-12;

/// Weight function `f` applied to contact distances.
///
/// Contributions at `t = 0` and `t = ∞` are always suppressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    /// `f(t) = 1{t <= ε} / ε`.
    IndicatorBand { eps: f64 },
    /// Linear interpolation between knots, zero below the first knot. Beyond
    /// the last knot `f` is zero, or `v_last · exp(g (t - t_last))` when a
    /// tail growth rate `g` is given.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
        tail_growth: Option<f64>,
    },
}

impl WeightFunction {
    pub fn indicator(eps: f64) -> Result<Self> {
        let f = Self::IndicatorBand { eps };
        f.validate()?;
        Ok(f)
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>, tail_growth: Option<f64>) -> Result<Self> {
        let f = Self::Tabulated {
            knots,
            values,
            tail_growth,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::IndicatorBand { eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "band width must be positive, got {eps}"
                    )));
                }
            }
            Self::Tabulated {
                knots,
                values,
                tail_growth,
            } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::InvalidParameter(
                        "tabulated weight needs matching knots and values".into(),
                    ));
                }
                if knots[0] < 0.0
                    || knots.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan())
                    || !knots[knots.len() - 1].is_finite()
                {
                    return Err(Error::InvalidParameter(
                        "weight knots must be >= 0, finite and strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter("weight values must be finite and >= 0".into()));
                }
                if tail_growth.is_some_and(|g| !g.is_finite()) {
                    return Err(Error::InvalidParameter("tail growth must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0 && t.is_finite()) {
            return 0.0;
        }
        match self {
            Self::IndicatorBand { eps } => {
                if t <= *eps {
                    1.0 / eps
                } else {
                    0.0
                }
            }
            Self::Tabulated {
                knots,
                values,
                tail_growth,
            } => {
                let n = knots.len();
                if t < knots[0] {
                    return 0.0;
                }
                if t >= knots[n - 1] {
                    return match tail_growth {
                        Some(g) => values[n - 1] * (g * (t - knots[n - 1])).exp(),
                        None if t == knots[n - 1] => values[n - 1],
                        None => 0.0,
                    };
                }
                let k = knots.partition_point(|&v| v <= t) - 1;
                let w = (t - knots[k]) / (knots[k + 1] - knots[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Right end of the support, infinite for an exponential tail.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::IndicatorBand { eps } => *eps,
            Self::Tabulated { knots, tail_growth, .. } => {
                if tail_growth.is_some() {
                    f64::INFINITY
                } else {
                    knots[knots.len() - 1]
                }
            }
        }
    }

    /// Points where `f` is not smooth, inside `(0, support_end]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::IndicatorBand { eps } => vec![*eps],
            Self::Tabulated { knots, .. } => knots.iter().copied().filter(|&k| k > 0.0).collect(),
        }
    }
}

/// `γ Σ_j κ_{d-j} V_j(B) t^j E R^{d-j}`, so that `F̄_B(t) = exp(-exponent)`.
pub fn empty_space_exponent(t: f64, params: &ModelParams, gauge: &GaugeBody) -> f64 {
    let d = params.dim;
    let v = gauge.intrinsic_volumes();
    let s: f64 = (0..=d)
        .filter(|&j| v[j] != 0.0)
        .map(|j| kappa(d - j) * v[j] * t.powi(j as i32) * params.radius.moment((d - j) as u32))
        .sum();
    params.intensity * s
}

/// Empty space function `F_B(t) = 1 - exp{-γ Σ_j κ_{d-j} V_j(B) t^j E R^{d-j}}`.
pub fn empty_space_f(t: f64, params: &ModelParams, gauge: &GaugeBody) -> f64 {
    -(-empty_space_exponent(t, params, gauge)).exp_m1()
}

/// Survival function `F̄_B(t) = 1 - F_B(t)`.
pub fn empty_space_fbar(t: f64, params: &ModelParams, gauge: &GaugeBody) -> f64 {
    (-empty_space_exponent(t, params, gauge)).exp()
}

/// Smallest `t` with `F̄_B(t) < 1e-16`.
pub fn survival_cutoff(params: &ModelParams, gauge: &GaugeBody) -> f64 {
    let target = -SURVIVAL_FLOOR.ln();
    let (mut lo, mut hi) = (0.0, 1.0);
    while empty_space_exponent(hi, params, gauge) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if empty_space_exponent(mid, params, gauge) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Lens volume `|B(o, t1 + r) ∩ B(u, t2 + r)|` for `‖u‖ = dist`.
#[inline]
pub(crate) fn lens(dim: usize, dist: f64, t1: f64, t2: f64, r: f64) -> f64 {
    if dim == 2 {
        lens_area(dist, t1 + r, t2 + r)
    } else {
        lens_volume_3d(dist, t1 + r, t2 + r)
    }
}

/// `E κ_B(u; t1, t2, R)` with the given rule on each smooth piece.
pub(crate) fn expected_lens(
    dim: usize,
    dist: f64,
    t1: f64,
    t2: f64,
    law: &RadiusDistribution,
    rule: &GaussLegendre,
) -> f64 {
    let kink = 0.5 * (dist - t1 - t2);
    let pieces = |a: f64, b: f64, density: &dyn Fn(f64) -> f64| -> f64 {
        let mut cuts = vec![a];
        if kink > a && kink < b {
            cuts.push(kink);
        }
        cuts.push(b);
        cuts.windows(2)
            .map(|w| {
                if kink >= w[1] {
                    0.0
                } else {
                    rule.integrate(w[0], w[1], |r| lens(dim, dist, t1, t2, r) * density(r))
                }
            })
            .sum()
    };
    match *law {
        RadiusDistribution::Deterministic { r0 } => lens(dim, dist, t1, t2, r0),
        RadiusDistribution::Uniform { a, b } => {
            let p = 1.0 / (b - a);
            pieces(a, b, &|_| p)
        }
        RadiusDistribution::Exponential { rate } => {
            let top = -SURVIVAL_FLOOR.ln() / rate;
            let panels = 8;
            let width = top / panels as f64;
            (0..panels)
                .map(|k| {
                    let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
                    pieces(a, b, &|r| rate * (-rate * r).exp())
                })
                .sum()
        }
    }
}

/// Second-order empty space function
/// `F̄⁽²⁾(u; t1, t2) = F̄(t1) F̄(t2) exp{γ E κ_B(u; t1, t2, R)}` for the unit ball.
///
/// The result is checked against `F̄F̄ <= F̄⁽²⁾ <= sqrt(F̄F̄)`; rounding-level
/// excursions are clamped, larger ones are reported as [`Error::BoundViolation`].
pub fn second_order_fbar(u: &[f64], t1: f64, t2: f64, params: &ModelParams, gauge: &GaugeBody) -> Result<f64> {
    if !gauge.is_ball() {
        return Err(Error::UnsupportedGauge(
            "second-order empty space function requires the unit ball".into(),
        ));
    }
    if u.len() != params.dim {
        return Err(Error::InvalidParameter("offset dimension mismatch".into()));
    }
    if !(2..=3).contains(&params.dim) {
        return Err(Error::UnsupportedDimension(params.dim));
    }
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(Error::InvalidParameter("second-order arguments must be >= 0".into()));
    }
    let dist = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    second_order_fbar_at(dist, t1, t2, params, gl64())
}

pub(crate) fn second_order_fbar_at(
    dist: f64,
    t1: f64,
    t2: f64,
    params: &ModelParams,
    rule: &GaussLegendre,
) -> Result<f64> {
    let ball = GaugeBody::unit_ball(params.dim)?;
    let fb1 = empty_space_fbar(t1, params, &ball);
    let fb2 = empty_space_fbar(t2, params, &ball);
    let el = params.intensity * expected_lens(params.dim, dist, t1, t2, &params.radius, rule);
    combine_second_order(fb1, fb2, el, (dist, t1, t2))
}

/// `F̄(t1) F̄(t2) exp(γ E κ_B)`, checked against `F̄F̄ <= · <= sqrt(F̄F̄)`.
pub(crate) fn combine_second_order(fb1: f64, fb2: f64, gamma_lens: f64, at: (f64, f64, f64)) -> Result<f64> {
    let lower = fb1 * fb2;
    let upper = lower.sqrt();
    let value = lower * gamma_lens.exp();
    if value.is_nan() || value < lower * (1.0 - BOUND_SLACK) || value > upper * (1.0 + BOUND_SLACK) {
        return Err(Error::BoundViolation(format!(
            "F2 = {value} outside [{lower}, {upper}] at |u| = {}, t1 = {}, t2 = {}",
            at.0, at.1, at.2
        )));
    }
    Ok(value.clamp(lower, upper))
}

/// Normalization `β = ∫ f(t) F̄_B(t) dt`.
pub fn beta_constant(f: &WeightFunction, params: &ModelParams, gauge: &GaugeBody) -> Result<f64> {
    f.validate()?;
    let cutoff = survival_cutoff(params, gauge);
    let end = f.support_end().min(cutoff);
    let mut cuts: Vec<f64> = vec![0.0];
    cuts.extend(f.breakpoints().into_iter().filter(|&b| b < end));
    cuts.push(end);
    let mut beta = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            beta += adaptive(|t| f.eval(t) * empty_space_fbar(t, params, gauge), w[0], w[1], 1e-11);
        }
    }
    if !beta.is_finite() || beta > f64::MAX / 4.0 {
        return Err(Error::DivergentWeight(format!("β = {beta}")));
    }
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(
            "β = ∫ f F̄ must be positive; the weight vanishes where F̄ > 0".into(),
        ));
    }
    Ok(beta)
}

/// Decay constant `c = γ κ_{d-1} V_1(B) E R^{d-1} / 4`.
pub fn decay_constant_c(params: &ModelParams, gauge: &GaugeBody) -> Result<f64> {
    let d = params.dim;
    let c = params.intensity * kappa(d - 1) * gauge.intrinsic_volumes()[1] * params.radius.moment((d - 1) as u32) / 4.0;
    if c > 0.0 {
        Ok(c)
    } else {
        Err(Error::InvalidParameter("decay constant must be positive".into()))
    }
}

/// Checks `∫ f(t) e^{-ct} dt < ∞`.
pub fn check_decay_condition(f: &WeightFunction, params: &ModelParams, gauge: &GaugeBody) -> Result<()> {
    let c = decay_constant_c(params, gauge)?;
    if let WeightFunction::Tabulated {
        tail_growth: Some(g), ..
    } = f
    {
        if *g >= c {
            return Err(Error::AssumptionViolated(format!(
                "weight grows like exp({g} t) but the decay constant is c = {c}"
            )));
        }
    }
    Ok(())
}
