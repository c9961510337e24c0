//! Cross-module invariant suites with a machine-readable report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emptyspace::{beta_constant, empty_space_f, second_order_fbar, WeightFunction};
use crate::error::Result;
use crate::estimators::{
    estimate_edge_corrected, estimate_ratio, ContactField, EstimatorConfig, Method, PointFilter, RadiusSet,
    WeightedRadiusMeasure,
};
use crate::geometry::GaugeBody;
use crate::model::{ModelParams, RadiusDistribution, Realization, Window};
use crate::quadrature::adaptive;
use crate::variance::{clt_campaign, empirical_variance_curve, sigma2_with, CampaignOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Unbiasedness,
    EmptySpace,
    QuadratureIdentity,
    SecondOrderBounds,
    Structural,
    Variance,
    Clt,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Unbiasedness,
        Suite::EmptySpace,
        Suite::QuadratureIdentity,
        Suite::SecondOrderBounds,
        Suite::Structural,
        Suite::Variance,
        Suite::Clt,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub intensity: f64,
    pub radius: RadiusDistribution,
    /// Band width of the weight `1{t <= ε}/ε`.
    pub epsilon: f64,
    pub grid_h: f64,
    /// Replications of the grid suites; zero skips every suite.
    pub replications: usize,
    pub seed: u64,
    pub suites: Vec<Suite>,
    /// Half side of `W_n = [-n, n)²` for the variance suite.
    pub variance_n: f64,
    pub variance_replications: usize,
    pub clt_n: f64,
    pub clt_replications: usize,
    #[serde(default)]
    pub sequential: bool,
    /// Multiplies `h_B` in the unbiasedness suite; anything but 1 is a
    /// deliberate fault.
    #[serde(default = "unit_scale", skip_serializing_if = "is_unit")]
    #[doc(hidden)]
    pub density_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

fn is_unit(v: &f64) -> bool {
    *v == 1.0
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            intensity: 25.0,
            radius: RadiusDistribution::Uniform { a: 0.05, b: 0.1 },
            epsilon: 0.05,
            grid_h: 1.0 / 100.0,
            replications: 200,
            seed: 1,
            suites: Suite::ALL.to_vec(),
            variance_n: 3.0,
            variance_replications: 300,
            clt_n: 3.0,
            clt_replications: 300,
            sequential: false,
            density_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub expected: f64,
    /// Allowed `|observed - expected|`.
    pub tolerance: f64,
}

impl Check {
    fn within(name: String, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: (observed - expected).abs() <= tolerance,
            observed,
            expected,
            tolerance,
        }
    }

    fn holds(name: String, ok: bool) -> Self {
        Self {
            name,
            passed: ok,
            observed: if ok { 1.0 } else { 0.0 },
            expected: 1.0,
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    pub checks: Vec<Check>,
    /// Set when the suite could not run.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub status: Status,
    pub suites: Vec<SuiteReport>,
}

/// Mean and standard error.
fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

fn map_reps<T: Send, F>(cfg: &ValidationConfig, reps: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let seeds: Vec<u64> = (0..reps as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    if cfg.sequential {
        seeds.into_iter().map(f).collect()
    } else {
        seeds.into_par_iter().map(f).collect()
    }
}

fn params(cfg: &ValidationConfig) -> Result<ModelParams> {
    ModelParams::planar(cfg.intensity, cfg.radius)
}

fn test_sets(law: &RadiusDistribution) -> Vec<RadiusSet> {
    let q = |p: f64| law.quantile(p);
    vec![
        RadiusSet::all(),
        RadiusSet::up_to(q(0.25)),
        RadiusSet::up_to(q(0.5)),
        RadiusSet::interval(q(0.3), q(0.8)).expect("ordered quantiles"),
        RadiusSet::interval(q(0.75), f64::INFINITY).expect("ordered quantiles"),
    ]
}

/// Mean of `η_W(C) / (γ β |W|)` against `G(C)` for both gauges.
pub fn unbiasedness_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let f = WeightFunction::indicator(cfg.epsilon)?;
    let w = Window::unit(2);
    let gauges = [GaugeBody::unit_ball(2)?, GaugeBody::axis_segment(0, true)?];
    let sets = test_sets(&p.radius);
    let betas = gauges
        .iter()
        .map(|g| beta_constant(&f, &p, g))
        .collect::<Result<Vec<_>>>()?;
    let per_rep = map_reps(cfg, cfg.replications, |seed| {
        let z = Realization::sample(&p, &w, cfg.epsilon, seed)?;
        let mut out = Vec::new();
        for (g, beta) in gauges.iter().zip(&betas) {
            let field = ContactField::compute(&z, &w, g, cfg.grid_h, cfg.epsilon)?;
            let m = field.measure_scaled(&z, &f, &PointFilter::All, cfg.density_scale);
            let norm = p.intensity * beta * w.volume();
            out.extend(sets.iter().map(|c| m.mass(c) / norm));
        }
        Ok(out)
    })?;
    let mut checks = Vec::new();
    for (gi, g) in gauges.iter().enumerate() {
        for (si, c) in sets.iter().enumerate() {
            let col: Vec<f64> = per_rep.iter().map(|v| v[gi * sets.len() + si]).collect();
            let (m, se) = mean_se(&col);
            checks.push(Check::within(
                format!("{:?} C={c}", g.kind()),
                m,
                c.probability(&p.radius),
                3.0 * se,
            ));
        }
    }
    Ok(checks)
}

/// Lattice frequencies of `d_B(x, Z) <= t` against the closed form.
pub fn empty_space_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let w = Window::unit(2);
    let gauges = [GaugeBody::unit_ball(2)?, GaugeBody::axis_segment(1, true)?];
    // Ten distances up to where F_B reaches about 0.95.
    let t_max: Vec<f64> = gauges
        .iter()
        .map(|g| {
            let (mut lo, mut hi) = (0.0, 10.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if empty_space_f(mid, &p, g) < 0.95 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        })
        .collect();
    let ts: Vec<Vec<f64>> = t_max
        .iter()
        .map(|&m| (0..10).map(|k| m * k as f64 / 9.0).collect())
        .collect();
    let reach = t_max.iter().copied().fold(0.0, f64::max);
    let per_rep = map_reps(cfg, cfg.replications, |seed| {
        let z = Realization::sample(&p, &w, reach, seed)?;
        let mut out = Vec::new();
        for (g, t) in gauges.iter().zip(&ts) {
            let field = ContactField::compute(&z, &w, g, cfg.grid_h, reach)?;
            let n = field.len() as f64;
            out.extend(
                t.iter()
                    .map(|&t| (0..field.len()).filter(|&k| field.distance(k) <= t).count() as f64 / n),
            );
        }
        Ok(out)
    })?;
    let mut checks = Vec::new();
    for (gi, g) in gauges.iter().enumerate() {
        for (ti, &t) in ts[gi].iter().enumerate() {
            let col: Vec<f64> = per_rep.iter().map(|v| v[gi * 10 + ti]).collect();
            let (m, se) = mean_se(&col);
            checks.push(Check::within(
                format!("{:?} t={t:.4}", g.kind()),
                m,
                empty_space_f(t, &p, g),
                3.0 * se,
            ));
        }
    }
    Ok(checks)
}

/// `∫ f(d_B(z, rB)) dz = ∫ h_B(t, r) f(t) dt` by Monte Carlo over a box.
pub fn quadrature_identity_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let samples = 200 * cfg.replications.max(1);
    let cases = [(0.05, 0.05), (0.1, 0.02), (0.2, 0.1)];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    for gauge in [GaugeBody::unit_ball(2)?, GaugeBody::segment(vec![0.6, 0.8])?] {
        for &(r, eps) in &cases {
            let f = WeightFunction::indicator(eps)?;
            let half = r + eps + 0.01;
            let area = (2.0 * half).powi(2);
            let vals: Vec<f64> = (0..samples)
                .map(|_| {
                    let z = [rng.random_range(-half..half), rng.random_range(-half..half)];
                    area * f.eval(gauge.distance_to_ball(&z, &[0.0, 0.0], r))
                })
                .collect();
            let (m, se) = mean_se(&vals);
            let exact = adaptive(|t| gauge.density(t, r) * f.eval(t), 0.0, eps, 1e-12);
            checks.push(Check::within(
                format!("{:?} r={r} eps={eps}", gauge.kind()),
                m,
                exact,
                3.0 * se,
            ));
        }
    }
    Ok(checks)
}

/// `F̄F̄ <= F̄⁽²⁾ <= sqrt(F̄F̄)` analytically, and `F̄⁽²⁾` against joint
/// avoidance frequencies.
pub fn second_order_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let ball = GaugeBody::unit_ball(2)?;
    let fbar = |t: f64| 1.0 - empty_space_f(t, &p, &ball);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x2f2f);
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let u = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let (t1, t2) = (rng.random_range(0.0..0.1), rng.random_range(0.0..0.1));
        let v = second_order_fbar(&u, t1, t2, &p, &ball)?;
        let lo = fbar(t1) * fbar(t2);
        let excess = (lo - v).max(v - lo.sqrt());
        worst = worst.max(excess);
        if excess.is_nan() || excess > 1e-12 {
            violations += 1;
        }
    }
    let mut checks = vec![Check::holds(
        format!("bounds hold at 10000 points ({violations} violations, worst excess {worst:.1e})"),
        violations == 0,
    )];
    let triples: Vec<([f64; 2], f64, f64)> = (0..20)
        .map(|_| {
            let d = rng.random_range(0.0..0.3);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            (
                [d * a.cos(), d * a.sin()],
                rng.random_range(0.0..0.06),
                rng.random_range(0.0..0.06),
            )
        })
        .collect();
    let w = Window::new(vec![0.0, 0.0], vec![2.0, 2.0])?;
    let probes = 200;
    let per_rep = map_reps(cfg, cfg.replications, |seed| {
        let z = Realization::sample(&p, &w, 0.4, seed)?;
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        Ok(triples
            .iter()
            .map(|(u, t1, t2)| {
                let hits = (0..probes)
                    .filter(|_| {
                        let x = [r.random_range(0.5..1.5), r.random_range(0.5..1.5)];
                        let y = [x[0] + u[0], x[1] + u[1]];
                        let far =
                            |q: &[f64], t: f64| z.contact_within(q, &ball, t).map(|h| h.is_none()).unwrap_or(false);
                        far(&x, *t1) && far(&y, *t2)
                    })
                    .count();
                hits as f64 / probes as f64
            })
            .collect::<Vec<f64>>())
    })?;
    for (i, (u, t1, t2)) in triples.iter().enumerate() {
        let col: Vec<f64> = per_rep.iter().map(|v| v[i]).collect();
        let (m, se) = mean_se(&col);
        let exact = second_order_fbar(u, *t1, *t2, &p, &ball)?;
        checks.push(Check::within(
            format!("|u|={:.3} t1={t1:.3} t2={t2:.3}", (u[0] * u[0] + u[1] * u[1]).sqrt()),
            m,
            exact,
            3.0 * se + 1e-12,
        ));
    }
    Ok(checks)
}

/// Identities that hold per realization: Hanisch equals uncorrected for a
/// segment, `Ĝ(ℝ⁺) = 1` for a non-null measure, and `0/0 = 0`.
pub fn structural_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let w = Window::unit(2);
    let f = WeightFunction::indicator(cfg.epsilon)?;
    let reps = cfg.replications.min(20);
    let per_rep = map_reps(cfg, reps, |seed| {
        let z = Realization::sample(&p, &w, cfg.epsilon, seed)?;
        let mut same = true;
        for g in GaugeBody::planar_axis_segments() {
            let run = |m: Method| {
                estimate_edge_corrected(&z, &w, &EstimatorConfig::new(m, g.clone(), f.clone(), cfg.grid_h)?)
            };
            let (u, h) = (run(Method::Uncorrected)?, run(Method::Hanisch)?);
            same &= u.atoms() == h.atoms();
        }
        let ball = GaugeBody::unit_ball(2)?;
        let m = estimate_edge_corrected(
            &z,
            &w,
            &EstimatorConfig::new(Method::Hanisch, ball, f.clone(), cfg.grid_h)?,
        )?;
        let unit = m.is_null() || (estimate_ratio(&m, &RadiusSet::all()) - 1.0).abs() < 1e-12;
        Ok((same, unit))
    })?;
    let null = WeightedRadiusMeasure::null();
    Ok(vec![
        Check::holds(
            format!("hanisch atoms equal uncorrected atoms for segments ({reps} realizations)"),
            per_rep.iter().all(|r| r.0),
        ),
        Check::holds("ratio of the whole half-line is 1".into(), per_rep.iter().all(|r| r.1)),
        Check::holds(
            "null measure gives the null estimate".into(),
            estimate_ratio(&null, &RadiusSet::all()) == 0.0 && estimate_ratio(&null, &RadiusSet::up_to(1.0)) == 0.0,
        ),
    ])
}

fn campaign_options(cfg: &ValidationConfig) -> CampaignOptions {
    let mut o = CampaignOptions {
        sequential: cfg.sequential,
        ..CampaignOptions::default()
    };
    o.variance.sequential = cfg.sequential;
    o
}

/// Empirical `Var η_{W_n}(ℝ⁺)/|W_n|` within 20% of `σ²(ℝ⁺)`.
pub fn variance_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let f = WeightFunction::indicator(cfg.epsilon)?;
    let opts = campaign_options(cfg);
    let all = RadiusSet::all();
    let s = sigma2_with(&all, &p, &GaugeBody::unit_ball(2)?, &f, &opts.variance)?;
    let curve = empirical_variance_curve(
        &all,
        &p,
        &f,
        &[cfg.variance_n],
        cfg.variance_replications,
        cfg.seed,
        &opts,
    )?;
    Ok(vec![Check::within(
        format!("n={} variance per area", cfg.variance_n),
        curve[0].variance_per_area,
        s.sigma2,
        0.2 * s.sigma2,
    )])
}

/// Normality of the standardized ratio estimator and its variance.
pub fn clt_suite(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let p = params(cfg)?;
    let f = WeightFunction::indicator(cfg.epsilon)?;
    let set = RadiusSet::up_to(p.radius.quantile(0.5));
    let r = clt_campaign(
        &set,
        &p,
        &f,
        cfg.clt_n,
        cfg.clt_replications,
        cfg.seed,
        &campaign_options(cfg),
    )?;
    Ok(vec![
        Check {
            name: "Anderson-Darling p-value >= 0.01".into(),
            passed: r.normality.p_value >= 0.01,
            observed: r.normality.p_value,
            expected: 0.01,
            tolerance: 0.0,
        },
        Check::within("variance ratio".into(), r.variance_ratio, 1.0, 0.25),
    ])
}

fn run_suite(suite: Suite, cfg: &ValidationConfig) -> Result<Vec<Check>> {
    match suite {
        Suite::Unbiasedness => unbiasedness_suite(cfg),
        Suite::EmptySpace => empty_space_suite(cfg),
        Suite::QuadratureIdentity => quadrature_identity_suite(cfg),
        Suite::SecondOrderBounds => second_order_suite(cfg),
        Suite::Structural => structural_suite(cfg),
        Suite::Variance => variance_suite(cfg),
        Suite::Clt => clt_suite(cfg),
    }
}

/// Runs the configured suites. Errors inside a suite become failed entries.
pub fn run_validation_suite(cfg: &ValidationConfig) -> ValidationReport {
    let suites: Vec<SuiteReport> = cfg
        .suites
        .iter()
        .map(|&suite| {
            if cfg.replications == 0 {
                return SuiteReport {
                    suite,
                    status: Status::Skipped,
                    checks: Vec::new(),
                    error: None,
                };
            }
            log::info!("running {suite:?} suite");
            match run_suite(suite, cfg) {
                Ok(checks) => SuiteReport {
                    suite,
                    status: if checks.iter().all(|c| c.passed) {
                        Status::Pass
                    } else {
                        Status::Fail
                    },
                    checks,
                    error: None,
                },
                Err(e) => SuiteReport {
                    suite,
                    status: Status::Fail,
                    checks: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let status = if suites.iter().any(|s| s.status == Status::Fail) {
        Status::Fail
    } else if suites.is_empty() || suites.iter().all(|s| s.status == Status::Skipped) {
        Status::Skipped
    } else {
        Status::Pass
    };
    ValidationReport {
        config: cfg.clone(),
        status,
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only(suites: &[Suite], reps: usize) -> ValidationConfig {
        ValidationConfig {
            suites: suites.to_vec(),
            replications: reps,
            grid_h: 1.0 / 60.0,
            ..ValidationConfig::default()
        }
    }

    #[test]
    fn zero_replications_skip_everything() {
        let r = run_validation_suite(&only(&Suite::ALL, 0));
        assert_eq!(r.status, Status::Skipped);
        assert!(r
            .suites
            .iter()
            .all(|s| s.status == Status::Skipped && s.checks.is_empty()));
    }

    #[test]
    fn grid_suites_pass() {
        let r = run_validation_suite(&only(
            &[
                Suite::Unbiasedness,
                Suite::EmptySpace,
                Suite::QuadratureIdentity,
                Suite::SecondOrderBounds,
                Suite::Structural,
            ],
            200,
        ));
        for s in &r.suites {
            assert_eq!(s.status, Status::Pass, "{s:#?}");
        }
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn doubled_density_breaks_unbiasedness() {
        let cfg = ValidationConfig {
            density_scale: 2.0,
            ..only(&[Suite::Unbiasedness], 100)
        };
        let r = run_validation_suite(&cfg);
        assert_eq!(r.status, Status::Fail);
        assert!(r.suites[0].checks.iter().all(|c| !c.passed));
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = run_validation_suite(&only(&[Suite::Structural], 3));
        let back: ValidationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
    }
}
