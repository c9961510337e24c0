//! Contact distances `d_B(x, Z)` and contact radii `r_B(x, Z)`.

use serde::{Deserialize, Serialize};

use super::{Realization, Window};
use crate::error::{Error, Result};
use crate::geometry::{euclid, ray_ball_hit, ray_box_exit, GaugeBody, GaugeKind};

/// Nearest grain found by a bounded contact search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub grain: usize,
}

/// Full contact information at a query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub point: Vec<f64>,
    /// `d_B(x, Z)`, infinite when a segment ray misses every grain.
    pub distance: f64,
    /// `r_B(x, Z)`, defined when `0 < distance < ∞`.
    pub radius: Option<f64>,
    pub grain: Option<usize>,
    /// Nearest boundary point (ball) or first-hit point (segment).
    pub contact_point: Option<Vec<f64>>,
}

const MARGIN_SLACK: f64 = 1e-9;

impl Realization {
    #[inline]
    fn gauge_distance(&self, g: usize, x: &[f64], gauge: &GaugeBody) -> f64 {
        gauge.distance_to_ball(x, self.center(g), self.radii[g])
    }

    fn check_gauge(&self, x: &[f64], gauge: &GaugeBody) -> Result<()> {
        if gauge.dim() != self.dim || x.len() != self.dim {
            return Err(Error::InvalidParameter(format!(
                "query of dimension {} with gauge of dimension {} on a {}-dimensional realization",
                x.len(),
                gauge.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Fails unless every germ that could be within `needed` of `x` has been simulated.
    fn certify(&self, x: &[f64], needed: f64) -> Result<()> {
        if self.exhaustive {
            return Ok(());
        }
        let room = if self.sim_window.contains(x) {
            self.sim_window.inner_distance(x)
        } else {
            -1.0
        };
        if needed + self.radius_bound <= room + MARGIN_SLACK * (1.0 + room.abs()) {
            Ok(())
        } else {
            Err(Error::InsufficientMargin { point: x.to_vec() })
        }
    }

    fn search(&self, x: &[f64], gauge: &GaugeBody, limit: f64) -> Option<(f64, usize)> {
        match gauge.kind() {
            GaugeKind::UnitBall => self.index.nearest(x, limit, self.max_radius, |g| {
                let dist = euclid(x, self.center(g));
                (dist - self.radii[g]).max(0.0)
            }),
            GaugeKind::Segment => {
                let u = gauge.direction().unwrap();
                self.index.nearest_along_ray(x, u, limit, self.max_radius, |g| {
                    ray_ball_hit(x, u, self.center(g), self.radii[g])
                })
            }
        }
    }

    /// Nearest grain within gauge distance `reach` of `x`, or `None`.
    pub fn contact_within(&self, x: &[f64], gauge: &GaugeBody, reach: f64) -> Result<Option<Hit>> {
        self.check_gauge(x, gauge)?;
        let found = self.search(x, gauge, reach);
        let needed = found.map_or(reach, |(d, _)| d.min(reach));
        self.certify(x, needed)?;
        Ok(found.map(|(distance, grain)| Hit { distance, grain }))
    }

    /// Full contact record with no distance limit.
    pub fn contact(&self, x: &[f64], gauge: &GaugeBody) -> Result<ContactRecord> {
        let hit = self.contact_within(x, gauge, f64::INFINITY)?;
        Ok(self.record(x, gauge, hit))
    }

    /// Reference implementation scanning every germ.
    pub fn contact_brute_force(&self, x: &[f64], gauge: &GaugeBody, reach: f64) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for g in 0..self.len() {
            let v = self.gauge_distance(g, x, gauge);
            if v <= reach && v < f64::INFINITY && best.is_none_or(|b| v < b.distance) {
                best = Some(Hit { distance: v, grain: g });
            }
        }
        best
    }

    fn record(&self, x: &[f64], gauge: &GaugeBody, hit: Option<Hit>) -> ContactRecord {
        match hit {
            None => ContactRecord {
                point: x.to_vec(),
                distance: f64::INFINITY,
                radius: None,
                grain: None,
                contact_point: None,
            },
            Some(Hit { distance, grain }) => {
                let c = self.center(grain);
                let r = self.radii[grain];
                let contact_point = if distance == 0.0 {
                    x.to_vec()
                } else {
                    match gauge.direction() {
                        None => {
                            let norm = euclid(x, c);
                            x.iter().zip(c).map(|(xi, ci)| ci + (xi - ci) * r / norm).collect()
                        }
                        Some(u) => x.iter().zip(u).map(|(xi, ui)| xi + distance * ui).collect(),
                    }
                };
                ContactRecord {
                    point: x.to_vec(),
                    distance,
                    radius: (distance > 0.0).then_some(r),
                    grain: Some(grain),
                    contact_point: Some(contact_point),
                }
            }
        }
    }

    /// Nearest grain of `Z ∩ clip` within `reach`, where each grain is the
    /// clipped set `B(ξ, R) ∩ clip`. Planar ball gauge or any segment gauge.
    pub fn contact_clipped_within(
        &self,
        x: &[f64],
        gauge: &GaugeBody,
        clip: &Window,
        reach: f64,
    ) -> Result<Option<Hit>> {
        self.check_gauge(x, gauge)?;
        if gauge.is_ball() && self.dim != 2 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if !self.exhaustive {
            let sim = &self.sim_window;
            let ok = (0..self.dim).all(|i| {
                sim.lower()[i] <= clip.lower()[i] - self.radius_bound + MARGIN_SLACK
                    && sim.upper()[i] >= clip.upper()[i] + self.radius_bound - MARGIN_SLACK
            });
            if !ok {
                return Err(Error::InsufficientMargin { point: x.to_vec() });
            }
        }
        let (lo, hi) = (clip.lower(), clip.upper());
        let found = match gauge.direction() {
            None => self.index.nearest(x, reach, self.max_radius, |g| {
                clipped_disk_distance(x, self.center(g), self.radii[g], lo, hi)
            }),
            Some(u) => {
                let exit = ray_box_exit(x, u, lo, hi);
                self.index
                    .nearest_along_ray(x, u, reach.min(exit), self.max_radius, |g| {
                        let t = ray_ball_hit(x, u, self.center(g), self.radii[g]);
                        if t <= exit {
                            t
                        } else {
                            f64::INFINITY
                        }
                    })
            }
        };
        Ok(found.map(|(distance, grain)| Hit { distance, grain }))
    }

    /// Reference implementation of [`Realization::contact_clipped_within`].
    pub fn contact_clipped_brute_force(&self, x: &[f64], gauge: &GaugeBody, clip: &Window, reach: f64) -> Option<Hit> {
        let (lo, hi) = (clip.lower(), clip.upper());
        let mut best: Option<Hit> = None;
        for g in 0..self.len() {
            let v = match gauge.direction() {
                None => clipped_disk_distance(x, self.center(g), self.radii[g], lo, hi),
                Some(u) => {
                    let t = ray_ball_hit(x, u, self.center(g), self.radii[g]);
                    if t <= ray_box_exit(x, u, lo, hi) {
                        t
                    } else {
                        f64::INFINITY
                    }
                }
            };
            if v <= reach && v < f64::INFINITY && best.is_none_or(|b| v < b.distance) {
                best = Some(Hit { distance: v, grain: g });
            }
        }
        best
    }
}

/// Euclidean distance from `x` to the convex set `B(c, r) ∩ [lo, hi]` in the plane.
///
/// When the projection onto the disk falls outside the box, the nearest point
/// of the clipped set lies on one of the chords cut from the disk by the box
/// edges.
pub(crate) fn clipped_disk_distance(x: &[f64], c: &[f64], r: f64, lo: &[f64], hi: &[f64]) -> f64 {
    let dx = x[0] - c[0];
    let dy = x[1] - c[1];
    let dist = (dx * dx + dy * dy).sqrt();
    let (px, py) = if dist <= r {
        (x[0], x[1])
    } else {
        (c[0] + dx * r / dist, c[1] + dy * r / dist)
    };
    if px >= lo[0] && px <= hi[0] && py >= lo[1] && py <= hi[1] {
        return (dist - r).max(0.0);
    }
    let mut best = f64::INFINITY;
    for axis in 0..2 {
        let other = 1 - axis;
        for edge in [lo[axis], hi[axis]] {
            let off = edge - c[axis];
            if off.abs() > r {
                continue;
            }
            let half = (r * r - off * off).sqrt();
            let a = (c[other] - half).max(lo[other]);
            let b = (c[other] + half).min(hi[other]);
            if a > b {
                continue;
            }
            let along = x[other].clamp(a, b);
            let (ex, ey) = (x[axis] - edge, x[other] - along);
            best = best.min((ex * ex + ey * ey).sqrt());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, RadiusDistribution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_germ_contact() {
        let w = Window::unit(2);
        let z = Realization::from_germs(&w, vec![0.5, 0.5], vec![0.1]).unwrap();
        let ball = GaugeBody::unit_ball(2).unwrap();
        let rec = z.contact(&[0.5, 0.8], &ball).unwrap();
        assert!((rec.distance - 0.2).abs() < 1e-15);
        assert_eq!(rec.radius, Some(0.1));
        assert_eq!(rec.grain, Some(0));
        let cp = rec.contact_point.unwrap();
        assert!((cp[1] - 0.6).abs() < 1e-15);
        let inside = z.contact(&[0.52, 0.5], &ball).unwrap();
        assert_eq!(inside.distance, 0.0);
        assert_eq!(inside.radius, None);
    }

    #[test]
    fn segment_contact_and_miss() {
        let w = Window::unit(2);
        let z = Realization::from_germs(&w, vec![0.5, 0.5], vec![0.1]).unwrap();
        let right = GaugeBody::axis_segment(0, true).unwrap();
        let rec = z.contact(&[0.1, 0.5], &right).unwrap();
        assert!((rec.distance - 0.3).abs() < 1e-12);
        let miss = z.contact(&[0.1, 0.9], &right).unwrap();
        assert!(miss.distance.is_infinite());
        assert_eq!(miss.grain, None);
    }

    #[test]
    fn ties_pick_smallest_id() {
        let w = Window::unit(2);
        let z = Realization::from_germs(&w, vec![0.2, 0.5, 0.8, 0.5], vec![0.1, 0.1]).unwrap();
        let ball = GaugeBody::unit_ball(2).unwrap();
        let rec = z.contact(&[0.5, 0.5], &ball).unwrap();
        assert_eq!(rec.grain, Some(0));
    }

    #[test]
    fn index_matches_brute_force() {
        let p = ModelParams::planar(100.0, RadiusDistribution::uniform(0.0, 0.12).unwrap()).unwrap();
        let w = Window::unit(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut gauges = vec![GaugeBody::unit_ball(2).unwrap()];
        gauges.extend(GaugeBody::planar_axis_segments());
        gauges.push(GaugeBody::segment(vec![0.6, 0.8]).unwrap());
        for seed in 0..5 {
            let z = Realization::sample(&p, &w, 0.3, seed).unwrap();
            for _ in 0..1000 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                for g in &gauges {
                    let fast = z.contact_within(&x, g, 0.3).unwrap();
                    let slow = z.contact_brute_force(&x, g, 0.3);
                    assert_eq!(fast, slow, "x={x:?} gauge={g:?}");
                    let fast = z.contact_clipped_within(&x, g, &w, 0.3).unwrap();
                    let slow = z.contact_clipped_brute_force(&x, g, &w, 0.3);
                    assert_eq!(fast, slow, "clipped x={x:?} gauge={g:?}");
                }
            }
        }
    }

    #[test]
    fn margin_violation_is_reported() {
        let p = ModelParams::planar(25.0, RadiusDistribution::uniform(0.05, 0.1).unwrap()).unwrap();
        let w = Window::unit(2);
        let z = Realization::sample(&p, &w, 0.05, 1).unwrap();
        let ball = GaugeBody::unit_ball(2).unwrap();
        assert!(z.contact_within(&[0.0, 0.0], &ball, 0.05).is_ok());
        assert!(matches!(
            z.contact_within(&[0.0, 0.0], &ball, 0.5),
            Err(Error::InsufficientMargin { .. })
        ));
    }

    #[test]
    fn clipped_disk_distance_cases() {
        let (lo, hi) = ([0.0, 0.0], [1.0, 1.0]);
        // Disk inside: plain distance.
        assert!((clipped_disk_distance(&[0.5, 0.9], &[0.5, 0.5], 0.1, &lo, &hi) - 0.3).abs() < 1e-15);
        // Disk straddling the left edge, query below the chord.
        let d = clipped_disk_distance(&[0.05, 0.0], &[-0.05, 0.5], 0.2, &lo, &hi);
        let half = (0.04f64 - 0.0025).sqrt();
        let expect = ((0.05f64).powi(2) + (0.5 - half).powi(2)).sqrt();
        assert!((d - expect).abs() < 1e-12, "{d} vs {expect}");
        // Disk outside the box entirely.
        assert!(clipped_disk_distance(&[0.5, 0.5], &[-0.5, 0.5], 0.1, &lo, &hi).is_infinite());
    }

    #[test]
    fn clipped_distance_matches_dense_sampling() {
        let (lo, hi) = ([0.0, 0.0], [1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = [rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2)];
            let r = rng.random_range(0.05..0.3);
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let exact = clipped_disk_distance(&x, &c, r, &lo, &hi);
            let mut best = f64::INFINITY;
            let n = 400;
            for i in 0..=n {
                for j in 0..=n {
                    let p = [
                        c[0] - r + 2.0 * r * i as f64 / n as f64,
                        c[1] - r + 2.0 * r * j as f64 / n as f64,
                    ];
                    let inside = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r * r;
                    if inside && p[0] >= 0.0 && p[0] <= 1.0 && p[1] >= 0.0 && p[1] <= 1.0 {
                        best = best.min(euclid(&x, &p));
                    }
                }
            }
            if best.is_infinite() {
                continue;
            }
            assert!(
                exact <= best + 1e-12 && best - exact < 4.0 * r / n as f64,
                "{exact} vs {best}"
            );
        }
    }
}
