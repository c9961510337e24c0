//! Asymptotic variances `σ²(C)` and `σ_G²(C)` for the planar unit ball, and
//! replication campaigns checking them.
//!
//! In polar coordinates around each grain the factor `f/h_B` becomes
//! `f(s) ds dθ / 2π`, so
//!
//! ```text
//! ∫ τ₁(C,u) du = ∫_C ∫∫ f(s1) f(s2) E_φ F̄⁽²⁾(D; s1, s2) ds1 ds2 G(dr)
//! ∫ τ₂(C,u) du = ∫_C ∫_C ∫∫ f(s1) f(s2) ∫ [p_A p_B F̄⁽²⁾(u; s1, s2) - F̄(s1) F̄(s2)] du ...
//! ```
//!
//! with `D = |(s1 + r) e_0 - (s2 + r) e_φ|` and `p_A`, `p_B` the fractions of
//! the circles `∂B(o, s2 + r2)` and `∂B(o, s1 + r1)` outside `B(u, s1 + r2)`
//! and `B(-u, s2 + r1)`. Both depend on `u` through `|u|` only.

mod campaign;
mod qmc;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use campaign::{
    anderson_darling_normal, clt_campaign, empirical_variance_curve, polar_replications, CampaignOptions, CltReport,
    NormalityTest, VariancePoint,
};
pub use qmc::QmcConfig;

use crate::emptyspace::WeightFunction;
use crate::emptyspace::{
    beta_constant, check_decay_condition, decay_constant_c, empty_space_fbar, second_order_fbar_at, SURVIVAL_FLOOR,
};
use crate::error::{Error, Result};
use crate::estimators::RadiusSet;
use crate::geometry::GaugeBody;
use crate::model::ModelParams;
use crate::quadrature::gl16;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VarianceOptions {
    pub qmc: QmcConfig,
    /// Evaluate shifts one after another instead of in parallel.
    pub sequential: bool,
}

/// `σ²(C) = γ ∫τ₁ + γ² ∫τ₂` with its integration error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    pub sigma2: f64,
    /// `γ ∫ τ₁(C, u) du`.
    pub tau1_part: f64,
    /// `γ² ∫ τ₂(C, u) du`.
    pub tau2_part: f64,
    /// Standard error of `sigma2` over the random shifts.
    pub std_error: f64,
    pub tau1_error: f64,
    pub tau2_error: f64,
    pub points: usize,
    pub shifts: usize,
}

/// `σ_G²(C)` by the three-variance combination, with the direct form as a
/// cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGResult {
    pub value: f64,
    pub std_error: f64,
    /// Direct evaluation from the centred integrands.
    pub direct: f64,
    pub direct_error: f64,
    pub g_c: f64,
    pub beta: f64,
    pub sigma2_c: VarianceResult,
    pub sigma2_complement: VarianceResult,
    pub sigma2_all: VarianceResult,
}

/// Fraction of the circle `∂B(o, a)` outside the disk `B(y, c)` with `|y| = rho`.
pub fn circle_outside_fraction(a: f64, rho: f64, c: f64) -> f64 {
    if a <= 0.0 {
        return if rho > c { 1.0 } else { 0.0 };
    }
    if rho >= a + c || rho + c <= a {
        return 1.0;
    }
    if rho + a <= c {
        return 0.0;
    }
    let cos = ((a * a + rho * rho - c * c) / (2.0 * a * rho)).clamp(-1.0, 1.0);
    1.0 - cos.acos() / PI
}

/// Upper end of the contact-distance integrals: the end of `f`'s support, or
/// the point where `e^{-4ct}` drops below `1e-16`.
fn distance_cutoff(f: &WeightFunction, params: &ModelParams, ball: &GaugeBody) -> Result<f64> {
    let c = decay_constant_c(params, ball)?;
    Ok(f.support_end().min(-SURVIVAL_FLOOR.ln() / (4.0 * c)))
}

fn check_inputs(params: &ModelParams, gauge: &GaugeBody, f: &WeightFunction) -> Result<()> {
    if !gauge.is_ball() {
        return Err(Error::UnsupportedGauge(
            "asymptotic variances are implemented for the unit ball only".into(),
        ));
    }
    if params.dim != 2 {
        return Err(Error::UnsupportedDimension(params.dim));
    }
    params.validate()?;
    f.validate()?;
    check_decay_condition(f, params, gauge)
}

/// Per-shift integrals. `t1[k] = [C, C', centred]`, `t2[k] = [CC, C'C', CC' + C'C, centred]`
/// where `C'` is the complement and "centred" uses `1{r ∈ C} - G(C)` weights.
struct Evaluation {
    t1: Vec<[f64; 3]>,
    t2: Vec<[f64; 4]>,
    g_c: f64,
    opts: VarianceOptions,
}

fn evaluate(
    set: &RadiusSet,
    params: &ModelParams,
    gauge: &GaugeBody,
    f: &WeightFunction,
    opts: &VarianceOptions,
) -> Result<Evaluation> {
    check_inputs(params, gauge, f)?;
    if opts.qmc.points == 0 || opts.qmc.shifts < 2 {
        return Err(Error::InvalidParameter(
            "QMC needs points and at least two shifts".into(),
        ));
    }
    let law = params.radius;
    let g_c = set.probability(&law);
    let s_max = distance_cutoff(f, params, gauge)?;
    let r_bound = law.radius_bound();
    let rule = gl16();
    let failure: OnceLock<Error> = OnceLock::new();
    let fbar = |t: f64| empty_space_fbar(t, params, gauge);
    let f2 = |dist: f64, s1: f64, s2: f64| -> f64 {
        match second_order_fbar_at(dist, s1, s2, params, rule) {
            Ok(v) => v,
            Err(e) => {
                let _ = failure.set(e);
                0.0
            }
        }
    };
    let indicator = |r: f64| if set.contains(r) { 1.0 } else { 0.0 };

    let t1 = qmc::shifted_means(4, &opts.qmc, opts.sequential, |u| {
        let (s1, s2) = (s_max * u[1], s_max * u[2]);
        let w = s_max * s_max * f.eval(s1) * f.eval(s2);
        if w == 0.0 {
            return [0.0; 3];
        }
        let r = law.quantile(u[0]);
        let (a, b) = (s1 + r, s2 + r);
        let dist = (a * a + b * b - 2.0 * a * b * (TAU * u[3]).cos()).max(0.0).sqrt();
        let v = w * f2(dist, s1, s2);
        let ic = indicator(r);
        [ic * v, (1.0 - ic) * v, (ic - g_c).powi(2) * v]
    });

    let t2 = qmc::shifted_means(5, &opts.qmc, opts.sequential, |u| {
        let (s1, s2) = (s_max * u[2], s_max * u[3]);
        let w = s_max * s_max * f.eval(s1) * f.eval(s2);
        if w == 0.0 {
            return [0.0; 4];
        }
        let (r1, r2) = (law.quantile(u[0]), law.quantile(u[1]));
        // Beyond this distance both fractions are 1 and the lens is empty.
        let rho_max = s1 + s2 + 2.0 * r_bound.max(r1).max(r2);
        let rho = rho_max * u[4].sqrt();
        let area = PI * rho_max * rho_max;
        let pa = circle_outside_fraction(s2 + r2, rho, s1 + r2);
        let pb = circle_outside_fraction(s1 + r1, rho, s2 + r1);
        let joint = f2(rho, s1, s2);
        let q = w * area * (pa * pb * joint - fbar(s1) * fbar(s2));
        let qt = w * area * (1.0 - pa) * (1.0 - pb) * joint;
        let (c1, c2) = (indicator(r1), indicator(r2));
        [
            c1 * c2 * q,
            (1.0 - c1) * (1.0 - c2) * q,
            (c1 * (1.0 - c2) + (1.0 - c1) * c2) * q,
            (c1 - g_c) * (c2 - g_c) * qt,
        ]
    });

    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Evaluation {
        t1,
        t2,
        g_c,
        opts: *opts,
    })
}

impl Evaluation {
    /// Combines per-shift `τ₁` and `τ₂` channels into a [`VarianceResult`].
    fn result(&self, gamma: f64, t1: impl Fn(&[f64; 3]) -> f64, t2: impl Fn(&[f64; 4]) -> f64) -> VarianceResult {
        let a: Vec<f64> = self.t1.iter().map(|v| gamma * t1(v)).collect();
        let b: Vec<f64> = self.t2.iter().map(|v| gamma * gamma * t2(v)).collect();
        let total: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (tau1_part, tau1_error) = qmc::mean_and_error(&a);
        let (tau2_part, tau2_error) = qmc::mean_and_error(&b);
        let (sigma2, std_error) = qmc::mean_and_error(&total);
        VarianceResult {
            sigma2,
            tau1_part,
            tau2_part,
            std_error,
            tau1_error,
            tau2_error,
            points: self.opts.qmc.points,
            shifts: self.opts.qmc.shifts,
        }
    }
}

/// `σ²(C)` with default integration settings.
pub fn sigma2(set: &RadiusSet, params: &ModelParams, gauge: &GaugeBody, f: &WeightFunction) -> Result<VarianceResult> {
    sigma2_with(set, params, gauge, f, &VarianceOptions::default())
}

pub fn sigma2_with(
    set: &RadiusSet,
    params: &ModelParams,
    gauge: &GaugeBody,
    f: &WeightFunction,
    opts: &VarianceOptions,
) -> Result<VarianceResult> {
    let ev = evaluate(set, params, gauge, f, opts)?;
    Ok(ev.result(params.intensity, |v| v[0], |v| v[0]))
}

/// `σ_G²(C)` with default integration settings.
pub fn sigma_g2(set: &RadiusSet, params: &ModelParams, gauge: &GaugeBody, f: &WeightFunction) -> Result<SigmaGResult> {
    sigma_g2_with(set, params, gauge, f, &VarianceOptions::default())
}

/// `σ_G²(C) = [(1-G(C)) σ²(C) + G(C) σ²(C') - G(C)(1-G(C)) σ²(ℝ⁺)] / (γβ)²`,
/// with all three variances read off the same points.
pub fn sigma_g2_with(
    set: &RadiusSet,
    params: &ModelParams,
    gauge: &GaugeBody,
    f: &WeightFunction,
    opts: &VarianceOptions,
) -> Result<SigmaGResult> {
    let ev = evaluate(set, params, gauge, f, opts)?;
    let beta = beta_constant(f, params, gauge)?;
    let gamma = params.intensity;
    let g = ev.g_c;
    let scale = (gamma * beta).powi(-2);
    let sigma2_c = ev.result(gamma, |v| v[0], |v| v[0]);
    let sigma2_complement = ev.result(gamma, |v| v[1], |v| v[1]);
    let sigma2_all = ev.result(gamma, |v| v[0] + v[1], |v| v[0] + v[1] + v[2]);
    let combined = ev.result(
        gamma,
        |v| scale * ((1.0 - g) * v[0] + g * v[1] - g * (1.0 - g) * (v[0] + v[1])),
        |v| scale * ((1.0 - g) * v[0] + g * v[1] - g * (1.0 - g) * (v[0] + v[1] + v[2])),
    );
    let direct = ev.result(gamma, |v| scale * v[2], |v| scale * v[3]);
    Ok(SigmaGResult {
        value: combined.sigma2,
        std_error: combined.std_error,
        direct: direct.sigma2,
        direct_error: direct.std_error,
        g_c: g,
        beta,
        sigma2_c,
        sigma2_complement,
        sigma2_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RadiusDistribution;
    use crate::quadrature::{adaptive, GaussLegendre};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::planar(25.0, RadiusDistribution::uniform(0.05, 0.1).unwrap()).unwrap()
    }

    fn ball() -> GaugeBody {
        GaugeBody::unit_ball(2).unwrap()
    }

    fn small() -> VarianceOptions {
        VarianceOptions {
            qmc: QmcConfig {
                points: 1 << 13,
                shifts: 8,
                seed: 3,
            },
            sequential: false,
        }
    }

    #[test]
    fn circle_fraction_matches_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = rng.random_range(0.0..1.0);
            let rho = rng.random_range(0.0..2.0);
            let c = rng.random_range(0.0..1.5);
            let n = 20_000;
            let outside = (0..n)
                .filter(|k| {
                    let th = TAU * (*k as f64 + 0.5) / n as f64;
                    let (x, y) = (a * th.cos() - rho, a * th.sin());
                    (x * x + y * y).sqrt() > c
                })
                .count() as f64
                / n as f64;
            assert!(
                (circle_outside_fraction(a, rho, c) - outside).abs() < 2e-4,
                "{a} {rho} {c}"
            );
        }
    }

    #[test]
    fn rejects_unsupported_configurations() {
        let f = WeightFunction::indicator(0.05).unwrap();
        let seg = GaugeBody::segment(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            sigma2(&RadiusSet::all(), &params(), &seg, &f),
            Err(Error::UnsupportedGauge(_))
        ));
        let p3 = ModelParams::new(25.0, RadiusDistribution::uniform(0.05, 0.1).unwrap(), 3).unwrap();
        assert!(matches!(
            sigma2(&RadiusSet::all(), &p3, &GaugeBody::unit_ball(3).unwrap(), &f),
            Err(Error::UnsupportedDimension(3))
        ));
        let grow = WeightFunction::tabulated(vec![0.0, 1.0], vec![1.0, 1.0], Some(10.0)).unwrap();
        assert!(matches!(
            sigma2(&RadiusSet::all(), &params(), &ball(), &grow),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn empty_radius_set_has_zero_variance() {
        let f = WeightFunction::indicator(0.05).unwrap();
        let v = sigma2_with(&RadiusSet::up_to(0.01), &params(), &ball(), &f, &small()).unwrap();
        assert_eq!(v.sigma2, 0.0);
        assert_eq!(v.tau1_part, 0.0);
    }

    #[test]
    fn variances_are_positive_and_additive() {
        let f = WeightFunction::indicator(0.05).unwrap();
        let set = RadiusSet::up_to(0.075);
        let g = sigma_g2_with(&set, &params(), &ball(), &f, &small()).unwrap();
        assert!(g.sigma2_c.sigma2 > 0.0 && g.sigma2_complement.sigma2 > 0.0 && g.sigma2_all.sigma2 > 0.0);
        assert!(g.value > 0.0);
        // Parts add up to the total.
        for v in [g.sigma2_c, g.sigma2_all] {
            assert!((v.tau1_part + v.tau2_part - v.sigma2).abs() < 1e-12 * v.sigma2.abs().max(1.0));
        }
        // Combination and direct form estimate the same integral.
        let tol = 2.0 * (g.std_error + g.direct_error);
        assert!(
            (g.value - g.direct).abs() < tol,
            "{} vs {} (tol {tol})",
            g.value,
            g.direct
        );
        let all = sigma_g2_with(&RadiusSet::all(), &params(), &ball(), &f, &small()).unwrap();
        assert!(all.value.abs() < 1e-12 && all.direct.abs() < 1e-12);
    }

    /// Nested Gauss–Legendre oracle for a point-mass radius law.
    fn nested_oracle(params: &ModelParams, eps: f64) -> (f64, f64) {
        let r0 = params.radius.radius_bound();
        let rule = GaussLegendre::new(16);
        let ball = ball();
        let panels = 6;
        // f = 1/ε on the band.
        let ff_weight = eps.powi(-2);
        let composite = |g: &dyn Fn(f64) -> f64| -> f64 {
            let w = eps / panels as f64;
            (0..panels)
                .map(|k| rule.integrate(k as f64 * w, (k + 1) as f64 * w, g))
                .sum()
        };
        let t1 = composite(&|s1| {
            composite(&|s2| {
                let (a, b) = (s1 + r0, s2 + r0);
                adaptive(
                    |phi| {
                        let d = (a * a + b * b - 2.0 * a * b * phi.cos()).max(0.0).sqrt();
                        second_order_fbar_at(d, s1, s2, params, gl16()).unwrap()
                    },
                    0.0,
                    TAU,
                    1e-9,
                ) / TAU
            })
        });
        let t2 = composite(&|s1| {
            composite(&|s2| {
                let ff = empty_space_fbar(s1, params, &ball) * empty_space_fbar(s2, params, &ball);
                adaptive(
                    |rho| {
                        let pa = circle_outside_fraction(s2 + r0, rho, s1 + r0);
                        let pb = circle_outside_fraction(s1 + r0, rho, s2 + r0);
                        TAU * rho * (pa * pb * second_order_fbar_at(rho, s1, s2, params, gl16()).unwrap() - ff)
                    },
                    0.0,
                    s1 + s2 + 2.0 * r0,
                    1e-9,
                )
            })
        });
        (ff_weight * t1, ff_weight * t2)
    }

    #[test]
    fn qmc_matches_nested_quadrature_for_point_mass_radii() {
        let p = ModelParams::planar(25.0, RadiusDistribution::deterministic(0.075).unwrap()).unwrap();
        let f = WeightFunction::indicator(0.05).unwrap();
        let (t1, t2) = nested_oracle(&p, 0.05);
        let v = sigma2_with(&RadiusSet::all(), &p, &ball(), &f, &small()).unwrap();
        let g = p.intensity;
        let rel1 = (v.tau1_part - g * t1).abs() / (g * t1);
        assert!(rel1 < 2e-3, "τ₁ part {} vs {}", v.tau1_part, g * t1);
        assert!(
            (v.tau2_part - g * g * t2).abs() < 4.0 * v.tau2_error + 2e-3 * (g * g * t2).abs(),
            "τ₂ part {} ± {} vs {}",
            v.tau2_part,
            v.tau2_error,
            g * g * t2
        );
    }
}
