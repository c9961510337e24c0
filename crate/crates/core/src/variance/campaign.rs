use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{sigma_g2_with, SigmaGResult, VarianceOptions};
use crate::emptyspace::WeightFunction;
use crate::error::{Error, Result};
use crate::estimators::{polar_eta, PolarConfig, RadiusSet, WeightedRadiusMeasure};
use crate::geometry::GaugeBody;
use crate::model::{ModelParams, Realization, Window};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub polar: PolarConfig,
    pub variance: VarianceOptions,
    /// Run replications one after another.
    pub sequential: bool,
}

/// One point of the curve `n ↦ Var η_{W_n}(C) / |W_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePoint {
    /// Half side length: `W_n = [-n, n)²`.
    pub n: f64,
    pub area: f64,
    pub mean_eta: f64,
    pub variance_per_area: f64,
    /// Standard error of `variance_per_area`.
    pub std_error: f64,
    pub replications: usize,
}

/// Anderson–Darling test of normality with estimated mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityTest {
    pub statistic: f64,
    /// `A²(1 + 0.75/n + 2.25/n²)`.
    pub modified: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub replications: usize,
    pub n: f64,
    pub seed: u64,
    pub g_c: f64,
    pub sigma_g2: SigmaGResult,
    /// `√|W_n| (Ĝ_n(C) - G(C))` per replication.
    pub raw: Vec<f64>,
    /// `raw / σ_G(C)`.
    pub standardized: Vec<f64>,
    pub normality: NormalityTest,
    /// Sample variance of `raw` over `σ_G²(C)`.
    pub variance_ratio: f64,
}

/// `η_{W_n}` for `reps` independent realizations on `W_n = [-n, n)²`, with
/// replication `k` seeded by `seed + k`.
pub fn polar_replications(
    params: &ModelParams,
    f: &WeightFunction,
    n: f64,
    reps: usize,
    seed: u64,
    opts: &CampaignOptions,
) -> Result<Vec<WeightedRadiusMeasure>> {
    let w = Window::centered(n, 2)?;
    let reach = f.support_end();
    let run = |k: usize| -> Result<WeightedRadiusMeasure> {
        let z = Realization::sample(params, &w, reach, seed.wrapping_add(k as u64))?;
        polar_eta(&z, &w, f, &opts.polar)
    };
    if opts.sequential {
        (0..reps).map(run).collect()
    } else {
        (0..reps).into_par_iter().map(run).collect()
    }
}

fn sample_moments(x: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m;
    (mean, var, m4)
}

/// Sample variance of `η_{W_n}(C)` divided by `|W_n|` for each `n`.
pub fn empirical_variance_curve(
    set: &RadiusSet,
    params: &ModelParams,
    f: &WeightFunction,
    n_list: &[f64],
    replications: usize,
    seed: u64,
    opts: &CampaignOptions,
) -> Result<Vec<VariancePoint>> {
    if replications < 100 {
        return Err(Error::InvalidParameter(format!(
            "variance curves need at least 100 replications, got {replications}"
        )));
    }
    n_list
        .iter()
        .map(|&n| {
            let etas: Vec<f64> = polar_replications(params, f, n, replications, seed, opts)?
                .iter()
                .map(|m| m.mass(set))
                .collect();
            let area = (2.0 * n).powi(2);
            let (mean, var, m4) = sample_moments(&etas);
            Ok(VariancePoint {
                n,
                area,
                mean_eta: mean,
                variance_per_area: var / area,
                std_error: ((m4 - var * var).max(0.0) / replications as f64).sqrt() / area,
                replications,
            })
        })
        .collect()
}

/// Anderson–Darling statistic against the normal family, with the
/// D'Agostino–Stephens p-value approximation for estimated parameters.
pub fn anderson_darling_normal(sample: &[f64]) -> Result<NormalityTest> {
    if sample.len() < 8 || sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "normality test needs at least 8 finite values".into(),
        ));
    }
    let (mean, var, _) = sample_moments(sample);
    if var <= 0.0 {
        return Err(Error::InvalidParameter(
            "normality test needs a non-degenerate sample".into(),
        ));
    }
    let sd = var.sqrt();
    let mut y: Vec<f64> = sample.iter().map(|v| (v - mean) / sd).collect();
    y.sort_by(f64::total_cmp);
    let std = Normal::standard();
    let n = y.len();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let lo = std.cdf(y[i]).max(f64::MIN_POSITIVE).ln();
        let hi = std.cdf(-y[n - 1 - i]).max(f64::MIN_POSITIVE).ln();
        s += (2.0 * i as f64 + 1.0) * (lo + hi);
    }
    let a2 = -nf - s / nf;
    let am = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if am >= 0.6 {
        (1.2937 - 5.709 * am + 0.0186 * am * am).exp()
    } else if am >= 0.34 {
        (0.9177 - 4.279 * am - 1.38 * am * am).exp()
    } else if am >= 0.2 {
        1.0 - (-8.318 + 42.796 * am - 59.938 * am * am).exp()
    } else {
        1.0 - (-13.436 + 101.14 * am - 223.73 * am * am).exp()
    };
    Ok(NormalityTest {
        statistic: a2,
        modified: am,
        p_value: p.clamp(0.0, 1.0),
    })
}

/// Replicates `√|W_n| (Ĝ_n(C) - G(C)) / σ_G(C)` on `W_n = [-n, n)²`.
pub fn clt_campaign(
    set: &RadiusSet,
    params: &ModelParams,
    f: &WeightFunction,
    n: f64,
    replications: usize,
    seed: u64,
    opts: &CampaignOptions,
) -> Result<CltReport> {
    if replications < 200 {
        return Err(Error::InvalidParameter(format!(
            "CLT campaigns need at least 200 replications, got {replications}"
        )));
    }
    let g_c = set.probability(&params.radius);
    if !(g_c > 0.0 && g_c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "σ_G(C) vanishes for G(C) = {g_c}; pick a set with 0 < G(C) < 1"
        )));
    }
    let ball = GaugeBody::unit_ball(2)?;
    let sigma = sigma_g2_with(set, params, &ball, f, &opts.variance)?;
    if sigma.value <= 0.0 {
        return Err(Error::InvalidParameter(format!("σ_G² evaluated to {}", sigma.value)));
    }
    let root_area = 2.0 * n;
    let raw: Vec<f64> = polar_replications(params, f, n, replications, seed, opts)?
        .iter()
        .map(|m| root_area * (m.ratio(set) - g_c))
        .collect();
    let sd = sigma.value.sqrt();
    let standardized: Vec<f64> = raw.iter().map(|v| v / sd).collect();
    let normality = anderson_darling_normal(&standardized)?;
    let (_, var, _) = sample_moments(&raw);
    Ok(CltReport {
        replications,
        n,
        seed,
        g_c,
        sigma_g2: sigma,
        raw,
        standardized,
        normality,
        variance_ratio: var / sigma.value,
    })
}
