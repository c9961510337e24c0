//! Kolmogorov–Smirnov and Cramér–von Mises distances between an estimated
//! radius CDF and the true law.

use crate::estimators::WeightedRadiusMeasure;
use crate::model::RadiusDistribution;

/// Quantile closing the Cramér–von Mises range for unbounded laws.
pub const CVM_TRUNCATION_QUANTILE: f64 = 0.999;

/// Step function `Ĝ` as jump locations and right-continuous values.
fn steps(est: &WeightedRadiusMeasure) -> (Vec<f64>, Vec<f64>) {
    let total = est.total();
    let mut locs = Vec::with_capacity(est.atoms().len());
    let mut vals = Vec::with_capacity(est.atoms().len());
    let mut acc = 0.0;
    for &(r, w) in est.atoms() {
        acc += w;
        locs.push(r);
        vals.push(if total > 0.0 { (acc / total).min(1.0) } else { 0.0 });
    }
    (locs, vals)
}

/// `sup_{s >= 0} |Ĝ(s) - G(s)|`, evaluated at the jumps of both functions
/// (with one-sided limits), at zero and at infinity.
pub fn ks_distance(est: &WeightedRadiusMeasure, law: &RadiusDistribution) -> f64 {
    let (locs, vals) = steps(est);
    let at = |s: f64| -> f64 {
        let k = locs.partition_point(|&r| r <= s);
        if k == 0 {
            0.0
        } else {
            vals[k - 1]
        }
    };
    let before = |s: f64| -> f64 {
        let k = locs.partition_point(|&r| r < s);
        if k == 0 {
            0.0
        } else {
            vals[k - 1]
        }
    };
    let mut probes = locs.clone();
    probes.extend(law.breakpoints());
    probes.push(0.0);
    let mut sup: f64 = 0.0;
    for s in probes.into_iter().filter(|s| *s >= 0.0) {
        sup = sup.max((at(s) - law.cdf(s)).abs());
        if s > 0.0 {
            sup = sup.max((before(s) - law.cdf_left(s)).abs());
        }
    }
    let tail = vals.last().copied().unwrap_or(0.0);
    sup.max((tail - 1.0).abs()).min(1.0)
}

/// Integration range `(a, b)` of the Cramér–von Mises distance: the support
/// of a uniform law, `[0, 2 r0]` for a point mass, and `[0, q]` with the
/// 0.999 quantile `q` for the exponential law.
pub fn cvm_support(law: &RadiusDistribution) -> (f64, f64) {
    match *law {
        RadiusDistribution::Uniform { a, b } => (a, b),
        RadiusDistribution::Deterministic { r0 } => (0.0, (2.0 * r0).max(f64::MIN_POSITIVE)),
        RadiusDistribution::Exponential { .. } => (0.0, law.quantile(CVM_TRUNCATION_QUANTILE)),
    }
}

/// `∫_a^b (c - G(s))² ds` on an interval where `G` is smooth.
fn piece(law: &RadiusDistribution, c: f64, s0: f64, s1: f64) -> f64 {
    if s1 <= s0 {
        return 0.0;
    }
    match *law {
        RadiusDistribution::Uniform { .. } => {
            let (e0, e1) = (c - law.cdf(s0), c - law.cdf(s1));
            (s1 - s0) * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0
        }
        RadiusDistribution::Exponential { rate } => {
            // (c - 1 + e^{-λs})² = (e^{-λs} - q)² with q = 1 - c.
            let q = 1.0 - c;
            let prim = |s: f64| {
                let e = (-rate * s).exp();
                -e * e / (2.0 * rate) + 2.0 * q * e / rate + q * q * s
            };
            prim(s1) - prim(s0)
        }
        RadiusDistribution::Deterministic { .. } => {
            let mid = 0.5 * (s0 + s1);
            let e = c - law.cdf(mid);
            (s1 - s0) * e * e
        }
    }
}

/// `∫_a^b (Ĝ(s) - G(s))² ds / (b - a)` over the range of [`cvm_support`],
/// integrated in closed form between consecutive jumps.
pub fn cvm_distance(est: &WeightedRadiusMeasure, law: &RadiusDistribution) -> f64 {
    let (a, b) = cvm_support(law);
    let (locs, vals) = steps(est);
    let mut cuts = vec![a];
    cuts.extend(locs.iter().copied().filter(|&r| r > a && r < b));
    cuts.extend(law.breakpoints().into_iter().filter(|&r| r > a && r < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let k = locs.partition_point(|&r| r <= mid);
        let c = if k == 0 { 0.0 } else { vals[k - 1] };
        total += piece(law, c, w[0], w[1]);
    }
    (total / (b - a)).max(0.0)
}
