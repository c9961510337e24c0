use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RadiusDistribution;

/// Finite union of intervals `(lo, hi]` of radii. `lo = -∞` makes the
/// interval closed at zero, so `[0, s]` is `(-∞, s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSet {
    intervals: Vec<(f64, f64)>,
}

impl RadiusSet {
    /// Sorts and merges the given intervals; empty intervals are dropped.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
            return Err(Error::InvalidParameter("radius set bounds must not be NaN".into()));
        }
        let mut iv: Vec<(f64, f64)> = intervals.into_iter().filter(|(a, b)| a < b).collect();
        iv.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    /// All radii, `ℝ⁺`.
    pub fn all() -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// `[0, s]`.
    pub fn up_to(s: f64) -> Self {
        Self {
            intervals: vec![(f64::NEG_INFINITY, s)],
        }
    }

    /// `(lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, r: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| r > a && r <= b)
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        Self { intervals: out }
    }

    /// `G(C)`.
    pub fn probability(&self, law: &RadiusDistribution) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                let upper = if b == f64::INFINITY { 1.0 } else { law.cdf(b) };
                let lower = if a == f64::NEG_INFINITY { 0.0 } else { law.cdf(a) };
                upper - lower
            })
            .sum()
    }
}

impl fmt::Display for RadiusSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "empty");
        }
        if self.intervals == [(f64::NEG_INFINITY, f64::INFINITY)] {
            return write!(f, "all");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|&(a, b)| {
                let lo = if a == f64::NEG_INFINITY {
                    "-inf".to_string()
                } else {
                    a.to_string()
                };
                let hi = if b == f64::INFINITY {
                    "inf".to_string()
                } else {
                    b.to_string()
                };
                format!("{lo}:{hi}")
            })
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for RadiusSet {
    type Err = Error;

    /// Parses `all`, `empty`, `le:s` (that is `[0, s]`) or a comma list of
    /// `lo:hi` intervals `(lo, hi]` where `-inf` and `inf` are allowed.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "all" => return Ok(Self::all()),
            "empty" => return Ok(Self::empty()),
            _ => {}
        }
        let num = |t: &str| -> Result<f64> {
            match t.trim() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                v => v.parse().map_err(|_| Error::Parse(format!("bad radius bound {v:?}"))),
            }
        };
        if let Some(rest) = s.strip_prefix("le:") {
            return Ok(Self::up_to(num(rest)?));
        }
        let intervals = s
            .split(',')
            .map(|part| {
                let (a, b) = part
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("radius interval must be lo:hi, got {part:?}")))?;
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}

/// Discrete measure `Σ w_i δ_{r_i}` on radii, atoms sorted by radius with
/// equal radii merged.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedRadiusMeasure {
    atoms: Vec<(f64, f64)>,
    total: f64,
}

impl WeightedRadiusMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms
            .iter()
            .any(|&(r, w)| !(w >= 0.0 && w.is_finite()) || !(r >= 0.0 && r.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "atoms need finite radii and weights >= 0".into(),
            ));
        }
        atoms.retain(|&(_, w)| w > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (r, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 += w,
                _ => merged.push((r, w)),
            }
        }
        let total = merged.iter().map(|a| a.1).sum();
        Ok(Self { atoms: merged, total })
    }

    /// The null measure.
    pub fn null() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_null(&self) -> bool {
        self.total == 0.0
    }

    /// `η(C)`.
    pub fn mass(&self, set: &RadiusSet) -> f64 {
        self.atoms.iter().filter(|a| set.contains(a.0)).map(|a| a.1).sum()
    }

    /// The ratio estimate `η(C) / η(ℝ⁺)` with `0/0 = 0`.
    pub fn ratio(&self, set: &RadiusSet) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.mass(set) / self.total
        }
    }

    /// Estimated CDF `Ĝ(s) = η([0, s]) / η(ℝ⁺)`.
    pub fn cdf(&self, s: f64) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = self.atoms.partition_point(|a| a.0 <= s);
        let m: f64 = self.atoms[..k].iter().map(|a| a.1).sum();
        (m / self.total).min(1.0)
    }

    /// The probability measure `η / η(ℝ⁺)`, or the null measure.
    pub fn normalized(&self) -> Self {
        if self.total == 0.0 {
            return Self::null();
        }
        let atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(r, w)| (r, w / self.total)).collect();
        let total = atoms.iter().map(|a| a.1).sum();
        Self { atoms, total }
    }

    /// Average of the normalized measures; null inputs contribute zero.
    pub fn average_normalized(parts: &[Self]) -> Self {
        if parts.is_empty() {
            return Self::null();
        }
        let k = parts.len() as f64;
        let atoms: Vec<(f64, f64)> = parts
            .iter()
            .flat_map(|p| {
                let t = p.total;
                p.atoms.iter().map(move |&(r, w)| (r, w / t / k))
            })
            .collect();
        Self::new(atoms).expect("normalized weights are finite")
    }

    /// Writes `radius,weight` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "radius,weight")?;
        for (r, w) in &self.atoms {
            writeln!(out, "{r},{w}")?;
        }
        Ok(())
    }
}
