use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::index::GridIndex;
use super::{ModelParams, RadiusDistribution, Window};
use crate::error::{Error, Result};

/// A finite sample of germs and radii on an extended window.
///
/// Germs are numbered by their position in the list. Sampled realizations
/// know their margin: queries that could be influenced by germs outside the
/// simulated region fail with [`Error::InsufficientMargin`]. Hand-built
/// realizations ([`Realization::from_germs`]) are exhaustive, that is the
/// germ list is the whole model, and never raise that error.
#[derive(Debug, Clone)]
pub struct Realization {
    pub(crate) dim: usize,
    pub(crate) centers: Vec<f64>,
    pub(crate) radii: Vec<f64>,
    pub(crate) observed: Window,
    pub(crate) sim_window: Window,
    pub(crate) margin: f64,
    pub(crate) radius_bound: f64,
    pub(crate) max_radius: f64,
    pub(crate) exhaustive: bool,
    pub(crate) params: Option<ModelParams>,
    pub(crate) seed: Option<u64>,
    pub(crate) index: GridIndex,
}

impl Realization {
    /// Samples the Boolean model on `observed` dilated by
    /// `radius_bound + reach`, where `reach` is the largest gauge distance
    /// that will be queried.
    pub fn sample(params: &ModelParams, observed: &Window, reach: f64, seed: u64) -> Result<Self> {
        params.validate()?;
        if observed.dim() != params.dim {
            return Err(Error::InvalidParameter(format!(
                "window dimension {} does not match model dimension {}",
                observed.dim(),
                params.dim
            )));
        }
        if !(2..=3).contains(&params.dim) {
            return Err(Error::UnsupportedDimension(params.dim));
        }
        if !(reach >= 0.0 && reach.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reach must be finite and >= 0, got {reach}"
            )));
        }
        let radius_bound = params.radius.radius_bound();
        let margin = radius_bound + reach;
        let sim_window = observed.dilate(margin);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = params.intensity * sim_window.volume();
        let count = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("germ count law: {e}")))?
            .sample(&mut rng) as usize;
        let d = params.dim;
        let mut centers = Vec::with_capacity(count * d);
        let mut radii = Vec::with_capacity(count);
        for _ in 0..count {
            for i in 0..d {
                let (lo, hi) = (sim_window.lower()[i], sim_window.upper()[i]);
                centers.push(lo + (hi - lo) * rng.random::<f64>());
            }
            radii.push(params.radius.sample(&mut rng));
        }
        Ok(Self::assemble(
            d,
            centers,
            radii,
            observed.clone(),
            sim_window,
            margin,
            radius_bound,
            false,
            Some(*params),
            Some(seed),
        ))
    }

    /// An exhaustive realization made of exactly the given germs.
    /// `centers` is flat with stride `dim`.
    pub fn from_germs(observed: &Window, centers: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        let d = observed.dim();
        if !(2..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if centers.len() != radii.len() * d {
            return Err(Error::InvalidParameter(format!(
                "{} center coordinates for {} radii in dimension {d}",
                centers.len(),
                radii.len()
            )));
        }
        if centers.iter().any(|v| !v.is_finite()) || radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(
                "germs need finite centers and radii >= 0".into(),
            ));
        }
        let mut lower = observed.lower().to_vec();
        let mut upper = observed.upper().to_vec();
        for c in centers.chunks(d) {
            for i in 0..d {
                lower[i] = lower[i].min(c[i]);
                upper[i] = upper[i].max(c[i]);
            }
        }
        let sim_window = Window::new(lower, upper)?;
        let radius_bound = radii.iter().copied().fold(0.0, f64::max);
        Ok(Self::assemble(
            d,
            centers,
            radii,
            observed.clone(),
            sim_window,
            f64::INFINITY,
            radius_bound,
            true,
            None,
            None,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        centers: Vec<f64>,
        radii: Vec<f64>,
        observed: Window,
        sim_window: Window,
        margin: f64,
        radius_bound: f64,
        exhaustive: bool,
        params: Option<ModelParams>,
        seed: Option<u64>,
    ) -> Self {
        let max_radius = radii.iter().copied().fold(0.0, f64::max);
        let n = radii.len().max(1) as f64;
        let spacing = (4.0 * sim_window.volume() / n).powf(1.0 / dim as f64);
        let cell = max_radius.max(spacing).max(1e-9);
        let index = GridIndex::build(dim, &centers, sim_window.lower(), sim_window.upper(), cell);
        Self {
            dim,
            centers,
            radii,
            observed,
            sim_window,
            margin,
            radius_bound,
            max_radius,
            exhaustive,
            params,
            seed,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn center(&self, id: usize) -> &[f64] {
        &self.centers[id * self.dim..(id + 1) * self.dim]
    }

    pub fn radius(&self, id: usize) -> f64 {
        self.radii[id]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// The window the realization was built for.
    pub fn observed(&self) -> &Window {
        &self.observed
    }

    /// The populated region.
    pub fn sim_window(&self) -> &Window {
        &self.sim_window
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Whether `x` is covered by some grain.
    pub fn covers(&self, x: &[f64]) -> bool {
        let mut hit = false;
        self.index.for_each_near(x, self.max_radius, |g| {
            if !hit {
                hit = crate::geometry::euclid(x, self.center(g)) <= self.radii[g];
            }
        });
        hit
    }

    /// Writes the germs as CSV (`id,x1,..,xd,radius`) after `#` header lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# boolean-spheres realization v1")?;
        writeln!(out, "# dim={}", self.dim)?;
        writeln!(out, "# observed={}", self.observed)?;
        writeln!(out, "# sim_window={}", self.sim_window)?;
        writeln!(out, "# margin={}", self.margin)?;
        writeln!(out, "# radius_bound={}", self.radius_bound)?;
        writeln!(out, "# exhaustive={}", self.exhaustive)?;
        if let Some(p) = &self.params {
            writeln!(out, "# intensity={}", p.intensity)?;
            writeln!(out, "# radius_dist={}", p.radius)?;
        }
        if let Some(s) = self.seed {
            writeln!(out, "# seed={s}")?;
        }
        let coords: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        writeln!(out, "id,{},radius", coords.join(","))?;
        for (g, r) in self.radii.iter().enumerate() {
            write!(out, "{g}")?;
            for v in self.center(g) {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{r}")?;
        }
        Ok(())
    }

    /// Reads CSV written by [`Realization::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut meta = std::collections::BTreeMap::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("id") {
                    continue;
                }
            }
            rows.push(line.to_string());
        }
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| Error::Parse(format!("realization CSV lacks '# {k}=' header")))
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?} in realization CSV")))
        };
        let dim: usize = get("dim")?.parse().map_err(|_| Error::Parse("bad dim header".into()))?;
        let observed: Window = get("observed")?.parse()?;
        let sim_window: Window = get("sim_window")?.parse()?;
        let margin = num(get("margin")?)?;
        let radius_bound = num(get("radius_bound")?)?;
        let exhaustive = get("exhaustive")? == "true";
        let params = match (meta.get("intensity"), meta.get("radius_dist")) {
            (Some(i), Some(g)) => Some(ModelParams::new(num(i)?, g.parse::<RadiusDistribution>()?, dim)?),
            _ => None,
        };
        let seed = match meta.get("seed") {
            Some(s) => Some(s.parse::<u64>().map_err(|_| Error::Parse("bad seed header".into()))?),
            None => None,
        };
        let mut centers = Vec::with_capacity(rows.len() * dim);
        let mut radii = Vec::with_capacity(rows.len());
        for (n, row) in rows.iter().enumerate() {
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != dim + 2 {
                return Err(Error::Parse(format!(
                    "row {n} has {} fields, expected {}",
                    fields.len(),
                    dim + 2
                )));
            }
            let id: usize = fields[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad id in row {n}")))?;
            if id != n {
                return Err(Error::Parse(format!(
                    "germ ids must be 0..n in order, row {n} has id {id}"
                )));
            }
            for f in &fields[1..=dim] {
                centers.push(num(f.trim())?);
            }
            radii.push(num(fields[dim + 1].trim())?);
        }
        if centers.chunks(dim).any(|c| !sim_window.contains(c)) {
            return Err(Error::Parse("germ center outside sim_window".into()));
        }
        Ok(Self::assemble(
            dim,
            centers,
            radii,
            observed,
            sim_window,
            margin,
            radius_bound,
            exhaustive,
            params,
            seed,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ModelParams {
        ModelParams::planar(25.0, RadiusDistribution::uniform(0.05, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn same_seed_same_germs() {
        let w = Window::unit(2);
        let a = Realization::sample(&params(), &w, 0.05, 7).unwrap();
        let b = Realization::sample(&params(), &w, 0.05, 7).unwrap();
        assert_eq!(a.centers, b.centers);
        assert_eq!(a.radii, b.radii);
        let c = Realization::sample(&params(), &w, 0.05, 8).unwrap();
        assert_ne!(a.radii, c.radii);
    }

    #[test]
    fn germ_count_is_poisson_mean() {
        let w = Window::unit(2);
        let p = params();
        let reach = 0.05;
        let expected = 25.0 * w.dilate(0.1 + reach).volume();
        let n = 1000;
        let counts: Vec<f64> = (0..n)
            .map(|s| Realization::sample(&p, &w, reach, s).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let se = (expected / n as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} vs {expected}");
    }

    #[test]
    fn centers_inside_sim_window() {
        let r = Realization::sample(&params(), &Window::unit(2), 0.2, 3).unwrap();
        assert!(r.centers.chunks(2).all(|c| r.sim_window.contains(c)));
        assert!((r.margin - 0.3).abs() < 1e-15);
    }

    #[test]
    fn csv_rejects_garbage() {
        let bad = "# dim=2\nid,x1,x2,radius\n0,1,2\n";
        assert!(Realization::read_csv(bad.as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn csv_roundtrip_is_bit_exact(seed in any::<u64>(), gamma in 1.0f64..200.0) {
            let p = ModelParams::planar(gamma, RadiusDistribution::exponential(17.3).unwrap()).unwrap();
            let r = Realization::sample(&p, &Window::unit(2), 0.013, seed).unwrap();
            let mut buf = Vec::new();
            r.write_csv(&mut buf).unwrap();
            let back = Realization::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back.centers, &r.centers);
            prop_assert_eq!(&back.radii, &r.radii);
            prop_assert_eq!(back.margin, r.margin);
            prop_assert_eq!(back.sim_window, r.sim_window);
            prop_assert_eq!(back.params, r.params);
            prop_assert_eq!(back.seed, r.seed);
        }
    }
}
