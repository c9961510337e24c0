use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile at which unbounded radius laws are truncated for simulation margins.
pub const RADIUS_TRUNCATION_TAIL: f64 = 1e-8;

/// Law `G` of the grain radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RadiusDistribution {
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Deterministic { r0: f64 },
}

impl RadiusDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let g = Self::Uniform { a, b };
        g.validate()?;
        Ok(g)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        let g = Self::Exponential { rate };
        g.validate()?;
        Ok(g)
    }

    pub fn deterministic(r0: f64) -> Result<Self> {
        let g = Self::Deterministic { r0 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Uniform { a, b } => a >= 0.0 && a < b && b.is_finite(),
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::Deterministic { r0 } => r0 >= 0.0 && r0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid radius law {self}")))
        }
    }

    /// `P(R > 0) > 0`.
    pub fn has_positive_mass(&self) -> bool {
        !matches!(*self, Self::Deterministic { r0 } if r0 == 0.0)
    }

    /// Whether `G` has an atom at zero.
    pub fn has_atom_at_zero(&self) -> bool {
        matches!(*self, Self::Deterministic { r0 } if r0 == 0.0)
    }

    /// Exact moment `E R^k`.
    pub fn moment(&self, k: u32) -> f64 {
        match *self {
            Self::Uniform { a, b } => {
                let k1 = (k + 1) as i32;
                (b.powi(k1) - a.powi(k1)) / ((k + 1) as f64 * (b - a))
            }
            Self::Exponential { rate } => (1..=k).fold(1.0, |acc, i| acc * i as f64 / rate),
            Self::Deterministic { r0 } => r0.powi(k as i32),
        }
    }

    /// `G(s) = P(R <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => ((s - a) / (b - a)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if s <= 0.0 {
                    0.0
                } else {
                    -(-rate * s).exp_m1()
                }
            }
            Self::Deterministic { r0 } => {
                if s >= r0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Left limit `G(s-) = P(R < s)`.
    pub fn cdf_left(&self, s: f64) -> f64 {
        match *self {
            Self::Deterministic { r0 } => {
                if s > r0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(s),
        }
    }

    /// Generalized inverse of the CDF for `p ∈ [0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => a + p * (b - a),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::Deterministic { r0 } => r0,
        }
    }

    /// Largest radius taken into account by simulation margins: the essential
    /// supremum when finite, else the `1 - 1e-8` quantile.
    pub fn radius_bound(&self) -> f64 {
        match *self {
            Self::Uniform { b, .. } => b,
            Self::Deterministic { r0 } => r0,
            Self::Exponential { .. } => self.quantile(1.0 - RADIUS_TRUNCATION_TAIL),
        }
    }

    /// Points where the CDF is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Uniform { a, b } => vec![a, b],
            Self::Exponential { .. } => vec![0.0],
            Self::Deterministic { r0 } => vec![r0],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Self::Exponential { rate } => {
                let u: f64 = rng.random();
                -(-u).ln_1p() / rate
            }
            Self::Deterministic { r0 } => r0,
        }
    }
}

impl fmt::Display for RadiusDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform { a, b } => write!(f, "uniform:{a}:{b}"),
            Self::Exponential { rate } => write!(f, "exp:{rate}"),
            Self::Deterministic { r0 } => write!(f, "det:{r0}"),
        }
    }
}

impl FromStr for RadiusDistribution {
    type Err = Error;

    /// Parses `uniform:a:b`, `exp:rate` or `det:r0`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in radius law {s:?}")))
        };
        match parts.as_slice() {
            ["uniform", a, b] => Self::uniform(num(a)?, num(b)?),
            ["exp", rate] => Self::exponential(num(rate)?),
            ["det", r0] => Self::deterministic(num(r0)?),
            _ => Err(Error::Parse(format!(
                "radius law must be uniform:a:b, exp:rate or det:r0, got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mc_moment(g: &RadiusDistribution, k: i32, n: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = g.sample(&mut rng).powi(k);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn uniform_second_moment() {
        let g = RadiusDistribution::uniform(0.05, 0.1).unwrap();
        let exact = (0.1f64.powi(3) - 0.05f64.powi(3)) / (3.0 * 0.05);
        assert_relative_eq!(g.moment(2), exact, max_relative = 1e-14);
        assert_relative_eq!(g.moment(2), 0.005833333333333333, max_relative = 1e-12);
        let (mc, se) = mc_moment(&g, 2, 10_000_000);
        assert!((mc - exact).abs() < 4.0 * se, "mc={mc} se={se}");
    }

    #[test]
    fn exponential_moments() {
        let g = RadiusDistribution::exponential(20.0).unwrap();
        assert_relative_eq!(g.moment(0), 1.0);
        assert_relative_eq!(g.moment(3), 6.0 / 8000.0, max_relative = 1e-14);
        let (mc, se) = mc_moment(&g, 2, 10_000_000);
        assert!((mc - 2.0 / 400.0).abs() < 4.0 * se);
    }

    #[test]
    fn deterministic_moments() {
        let g = RadiusDistribution::deterministic(0.1).unwrap();
        assert_relative_eq!(g.moment(4), 1e-4, max_relative = 1e-14);
        assert!(g.has_positive_mass());
        assert!(!RadiusDistribution::deterministic(0.0).unwrap().has_positive_mass());
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["uniform:0.05:0.1", "exp:12.5", "det:0.1"] {
            let g: RadiusDistribution = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("uniform:0.1:0.05".parse::<RadiusDistribution>().is_err());
        assert!("gamma:1".parse::<RadiusDistribution>().is_err());
        assert!("exp:-1".parse::<RadiusDistribution>().is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let laws = [
            RadiusDistribution::uniform(0.05, 0.1).unwrap(),
            RadiusDistribution::exponential(3.0).unwrap(),
        ];
        for g in laws {
            for p in [0.0, 0.1, 0.5, 0.99] {
                assert_relative_eq!(g.cdf(g.quantile(p)), p, epsilon = 1e-14);
            }
        }
        let e = RadiusDistribution::exponential(1.0).unwrap();
        assert_relative_eq!(e.radius_bound(), 8.0 * 10f64.ln(), max_relative = 1e-6);
    }
}
