use super::WeightedRadiusMeasure;
use crate::emptyspace::WeightFunction;
use crate::error::Result;
use crate::geometry::GaugeBody;
use crate::model::{Realization, Window};

const NO_GRAIN: u32 = u32::MAX;

/// Which lattice points contribute to `η`.
#[derive(Debug, Clone, PartialEq)]
pub enum PointFilter {
    All,
    /// Points of the given (eroded) window only.
    Inside(Window),
    /// Points with `d_B(x, Z) <= d_B(x, ∂W)`.
    Hanisch,
}

/// Contact distances and contacted grains on the lattice `L_h ∩ W`, up to a
/// fixed reach. Several estimators sharing a gauge can be read off one field.
#[derive(Debug, Clone)]
pub struct ContactField {
    gauge: GaugeBody,
    window: Window,
    h: f64,
    reach: f64,
    points: Vec<f64>,
    distance: Vec<f64>,
    grain: Vec<u32>,
}

impl ContactField {
    /// Contacts with the full realization.
    pub fn compute(z: &Realization, w: &Window, gauge: &GaugeBody, h: f64, reach: f64) -> Result<Self> {
        Self::build(w, gauge, h, reach, |x| z.contact_within(x, gauge, reach))
    }

    /// Contacts with `Z ∩ W`.
    pub fn compute_clipped(z: &Realization, w: &Window, gauge: &GaugeBody, h: f64, reach: f64) -> Result<Self> {
        Self::build(w, gauge, h, reach, |x| z.contact_clipped_within(x, gauge, w, reach))
    }

    fn build<F>(w: &Window, gauge: &GaugeBody, h: f64, reach: f64, mut query: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Option<crate::model::Hit>>,
    {
        let points = w.lattice_points(h);
        let d = w.dim();
        let n = points.len() / d;
        let mut distance = Vec::with_capacity(n);
        let mut grain = Vec::with_capacity(n);
        for x in points.chunks(d) {
            match query(x)? {
                Some(hit) => {
                    distance.push(hit.distance);
                    grain.push(hit.grain as u32);
                }
                None => {
                    distance.push(f64::INFINITY);
                    grain.push(NO_GRAIN);
                }
            }
        }
        Ok(Self {
            gauge: gauge.clone(),
            window: w.clone(),
            h,
            reach,
            points,
            distance,
            grain,
        })
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn gauge(&self) -> &GaugeBody {
        &self.gauge
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.window.dim();
        &self.points[k * d..(k + 1) * d]
    }

    /// Contact distance at lattice point `k`; infinite beyond the reach.
    pub fn distance(&self, k: usize) -> f64 {
        self.distance[k]
    }

    pub fn grain(&self, k: usize) -> Option<usize> {
        (self.grain[k] != NO_GRAIN).then_some(self.grain[k] as usize)
    }

    /// Share of lattice points covered by `Z`.
    pub fn covered_fraction(&self) -> f64 {
        self.distance.iter().filter(|&&d| d == 0.0).count() as f64 / self.len().max(1) as f64
    }

    /// Riemann sum `Σ_x h^d f(d) / h_B(d, r)` aggregated per contact radius.
    pub fn measure(&self, z: &Realization, f: &WeightFunction, filter: &PointFilter) -> WeightedRadiusMeasure {
        self.measure_scaled(z, f, filter, 1.0)
    }

    /// As [`ContactField::measure`] with `h_B` multiplied by `density_scale`.
    /// Exists to let validation suites inject a wrong density.
    #[doc(hidden)]
    pub fn measure_scaled(
        &self,
        z: &Realization,
        f: &WeightFunction,
        filter: &PointFilter,
        density_scale: f64,
    ) -> WeightedRadiusMeasure {
        let cell = self.h.powi(self.window.dim() as i32);
        let mut per_grain = vec![0.0f64; z.len()];
        let mut dropped_zero_radius = 0usize;
        for k in 0..self.len() {
            let t = self.distance[k];
            if !(t > 0.0 && t.is_finite()) {
                continue;
            }
            let fv = f.eval(t);
            if fv == 0.0 {
                continue;
            }
            let keep = match filter {
                PointFilter::All => true,
                PointFilter::Inside(win) => win.contains(self.point(k)),
                PointFilter::Hanisch => {
                    t <= self
                        .gauge
                        .distance_to_box_boundary(self.point(k), self.window.lower(), self.window.upper())
                }
            };
            if !keep {
                continue;
            }
            let g = self.grain[k] as usize;
            let hb = density_scale * self.gauge.density(t, z.radius(g));
            if hb <= 0.0 {
                dropped_zero_radius += 1;
                continue;
            }
            per_grain[g] += cell * fv / hb;
        }
        if dropped_zero_radius > 0 {
            log::warn!("{dropped_zero_radius} lattice points contacted zero-radius grains and were skipped");
        }
        let atoms = per_grain
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(g, &w)| (z.radius(g), w))
            .collect();
        WeightedRadiusMeasure::new(atoms).expect("weights are finite and positive")
    }
}
