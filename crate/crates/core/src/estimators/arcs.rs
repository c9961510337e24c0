//! Visible arcs of the boundary of a planar union of disks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::WeightedRadiusMeasure;
use crate::error::{Error, Result};
use crate::geometry::{euclid, GaugeBody};
use crate::model::{Realization, Window};

/// Angular interval `[start, end]` of a grain's boundary circle, with
/// `0 <= start < 2π` and `start < end <= start + 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibleArc {
    pub grain: usize,
    pub radius: f64,
    pub start: f64,
    pub end: f64,
}

impl VisibleArc {
    pub fn length(&self) -> f64 {
        self.radius * (self.end - self.start)
    }
}

/// Uncovered boundary arcs inside a region, plus uncovered zero-radius grains.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcDecomposition {
    pub arcs: Vec<VisibleArc>,
    pub points: Vec<usize>,
}

/// Removed angular intervals, each given as `(center, half_width)`.
pub(super) struct Removals {
    spans: Vec<(f64, f64)>,
    pub(super) full: bool,
}

impl Removals {
    pub(super) fn new() -> Self {
        Self {
            spans: Vec::new(),
            full: false,
        }
    }

    pub(super) fn push(&mut self, center: f64, half: f64) {
        if half >= PI {
            self.full = true;
        } else if half > 0.0 {
            self.spans.push((center, half));
        }
    }

    /// `{θ : cos(θ - axis) > k}` removed, for a half-plane constraint.
    pub(super) fn cut_beyond(&mut self, axis: f64, k: f64) {
        if k < -1.0 {
            self.full = true;
        } else if k < 1.0 {
            self.push(axis, k.acos());
        }
    }

    /// Complement of the removed set in `[0, 2π)`, wrap-around merged.
    pub(super) fn visible(&self) -> Vec<(f64, f64)> {
        if self.full {
            return Vec::new();
        }
        let mut iv: Vec<(f64, f64)> = Vec::with_capacity(self.spans.len() + 2);
        for &(c, h) in &self.spans {
            let a = (c - h).rem_euclid(TAU);
            let b = a + 2.0 * h;
            if b > TAU {
                iv.push((a, TAU));
                iv.push((0.0, b - TAU));
            } else {
                iv.push((a, b));
            }
        }
        iv.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for (a, b) in iv {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = f64::max(cursor, b);
        }
        if cursor < TAU {
            out.push((cursor, TAU));
        }
        if out.len() >= 2 && out[0].0 == 0.0 && out[out.len() - 1].1 == TAU {
            let first = out.remove(0);
            let last = out.last_mut().unwrap();
            last.1 = TAU + first.1;
        }
        out
    }
}

pub(super) fn box_gap(c: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        let g = (lo[i] - c[i]).max(c[i] - hi[i]).max(0.0);
        s += g * g;
    }
    s.sqrt()
}

fn ensure_planar(z: &Realization, region: &Window) -> Result<()> {
    if z.dim() != 2 {
        return Err(Error::UnsupportedDimension(z.dim()));
    }
    if region.dim() != 2 {
        return Err(Error::UnsupportedDimension(region.dim()));
    }
    Ok(())
}

/// Visible arcs of `∂Z` inside `region`, optionally keeping only the half of
/// each circle facing `-u` (the points a ray along `u` can hit first).
fn arcs_facing(z: &Realization, region: &Window, facing: Option<f64>) -> Result<ArcDecomposition> {
    ensure_planar(z, region)?;
    let (lo, hi) = (region.lower(), region.upper());
    let mut out = ArcDecomposition::default();
    for i in 0..z.len() {
        let c = z.center(i);
        let r = z.radius(i);
        if r == 0.0 {
            if region.contains(c) && !covered_point(z, i) {
                out.points.push(i);
            }
            continue;
        }
        if box_gap(c, lo, hi) >= r {
            continue;
        }
        let mut rm = Removals::new();
        rm.cut_beyond(PI, (c[0] - lo[0]) / r);
        rm.cut_beyond(0.0, (hi[0] - c[0]) / r);
        rm.cut_beyond(-FRAC_PI_2, (c[1] - lo[1]) / r);
        rm.cut_beyond(FRAC_PI_2, (hi[1] - c[1]) / r);
        if let Some(phi) = facing {
            rm.push(phi, FRAC_PI_2);
        }
        if rm.full {
            continue;
        }
        z.index.for_each_near(c, r + z.max_radius, |j| {
            if j == i || rm.full {
                return;
            }
            let rj = z.radius(j);
            let cj = z.center(j);
            let d = euclid(c, cj);
            if d >= r + rj {
                return;
            }
            if d + r < rj || (d + r == rj && (d > 0.0 || j < i)) {
                rm.full = true;
                return;
            }
            if d + rj <= r {
                return;
            }
            let cos = ((d * d + r * r - rj * rj) / (2.0 * d * r)).clamp(-1.0, 1.0);
            rm.push((cj[1] - c[1]).atan2(cj[0] - c[0]), cos.acos());
        });
        for (a, b) in rm.visible() {
            out.arcs.push(VisibleArc {
                grain: i,
                radius: r,
                start: a,
                end: b,
            });
        }
    }
    Ok(out)
}

fn covered_point(z: &Realization, i: usize) -> bool {
    let c = z.center(i);
    let mut covered = false;
    z.index.for_each_near(c, z.max_radius, |j| {
        if j != i && !covered {
            let d = euclid(c, z.center(j));
            covered = d < z.radius(j) || (d == z.radius(j) && j < i && d == 0.0);
        }
    });
    covered
}

/// Boundary arcs of `Z` lying in `region` and not covered by other grains.
pub fn visible_arcs(z: &Realization, region: &Window) -> Result<ArcDecomposition> {
    arcs_facing(z, region, None)
}

/// Visible-arc limit of the spherical estimator: weight `l_i / (2π r_i)` per
/// arc, and `1` per uncovered zero-radius grain.
pub fn estimate_limit_spherical(z: &Realization, w: &Window) -> Result<WeightedRadiusMeasure> {
    let dec = visible_arcs(z, w)?;
    let mut atoms: Vec<(f64, f64)> = dec.arcs.iter().map(|a| (a.radius, (a.end - a.start) / TAU)).collect();
    atoms.extend(dec.points.iter().map(|_| (0.0, 1.0)));
    WeightedRadiusMeasure::new(atoms)
}

/// Visible-arc limit of the linear estimator for direction `u`: weight
/// `l_i(u) / r_i` where `l_i(u)` is the length of the projection of the
/// first-hit part of the arc onto the line orthogonal to `u`.
pub fn estimate_limit_linear(z: &Realization, w: &Window, u: &[f64]) -> Result<WeightedRadiusMeasure> {
    let gauge = GaugeBody::segment(u.to_vec())?;
    if gauge.dim() != 2 {
        return Err(Error::UnsupportedDimension(gauge.dim()));
    }
    let phi = u[1].atan2(u[0]);
    let dec = arcs_facing(z, w, Some(phi))?;
    if !dec.points.is_empty() {
        log::warn!(
            "{} zero-radius grains ignored by the linear estimator",
            dec.points.len()
        );
    }
    let atoms = dec
        .arcs
        .iter()
        .map(|a| (a.radius, ((a.start - phi).sin() - (a.end - phi).sin()).max(0.0)))
        .collect();
    WeightedRadiusMeasure::new(atoms)
}

/// Average of the four normalized axis-direction linear limits.
pub fn estimate_limit_linear_combined(z: &Realization, w: &Window) -> Result<WeightedRadiusMeasure> {
    let parts = GaugeBody::planar_axis_segments()
        .iter()
        .map(|g| estimate_limit_linear(z, w, g.direction().unwrap()))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedRadiusMeasure::average_normalized(&parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big() -> Window {
        Window::centered(10.0, 2).unwrap()
    }

    #[test]
    fn isolated_circle() {
        let z = Realization::from_germs(&big(), vec![0.0, 0.0], vec![0.3]).unwrap();
        let dec = visible_arcs(&z, &big()).unwrap();
        assert_eq!(dec.arcs.len(), 1);
        assert!((dec.arcs[0].length() - TAU * 0.3).abs() < 1e-12);
        let m = estimate_limit_spherical(&z, &big()).unwrap();
        assert!((m.total() - 1.0).abs() < 1e-12);
        let l = estimate_limit_linear(&z, &big(), &[1.0, 0.0]).unwrap();
        assert!((l.total() - 2.0).abs() < 1e-12);
        let comb = estimate_limit_linear_combined(&z, &big()).unwrap();
        assert_eq!(comb.ratio(&super::super::RadiusSet::up_to(0.3)), 1.0);
    }

    #[test]
    fn nested_circle_invisible() {
        let z = Realization::from_germs(&big(), vec![0.0, 0.0, 0.05, 0.0], vec![0.5, 0.2]).unwrap();
        let dec = visible_arcs(&z, &big()).unwrap();
        assert!(dec.arcs.iter().all(|a| a.grain == 0));
        let m = estimate_limit_spherical(&z, &big()).unwrap();
        assert_eq!(m.atoms().len(), 1);
    }

    #[test]
    fn occluded_linear_weight_zero() {
        // The small circle sits right behind a big one along +x.
        let z = Realization::from_germs(&big(), vec![0.0, 0.0, 0.45, 0.0], vec![0.5, 0.1]).unwrap();
        let l = estimate_limit_linear(&z, &big(), &[1.0, 0.0]).unwrap();
        assert!(l.atoms().iter().all(|a| a.0 == 0.5));
    }

    fn covered(z: &Realization, p: &[f64], except: usize) -> bool {
        (0..z.len()).any(|j| j != except && euclid(p, z.center(j)) < z.radius(j))
    }

    #[test]
    fn arc_lengths_match_boundary_sampling() {
        let w = Window::unit(2);
        let z = Realization::from_germs(&w, vec![0.4, 0.5, 0.55, 0.55, 0.95, 0.2], vec![0.2, 0.15, 0.12]).unwrap();
        let dec = visible_arcs(&z, &w).unwrap();
        let n = 1_000_000;
        for g in 0..z.len() {
            let (c, r) = (z.center(g), z.radius(g));
            let mut hits = 0usize;
            for k in 0..n {
                let th = (k as f64 + 0.5) / n as f64 * TAU;
                let p = [c[0] + r * th.cos(), c[1] + r * th.sin()];
                if w.contains(&p) && !covered(&z, &p, g) {
                    hits += 1;
                }
            }
            let oracle = hits as f64 / n as f64 * TAU * r;
            let exact: f64 = dec.arcs.iter().filter(|a| a.grain == g).map(|a| a.length()).sum();
            assert!((oracle - exact).abs() < 1e-4, "grain {g}: {exact} vs {oracle}");
        }
    }

    #[test]
    fn projected_lengths_match_ray_casting() {
        let w = Window::unit(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut centers = Vec::new();
        let mut radii = Vec::new();
        for _ in 0..12 {
            centers.push(rng.random_range(0.0..1.0));
            centers.push(rng.random_range(0.0..1.0));
            radii.push(rng.random_range(0.05..0.15));
        }
        let z = Realization::from_germs(&w, centers, radii).unwrap();
        for u in [[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]] {
            let est = estimate_limit_linear(&z, &w, &u).unwrap();
            // Oracle: along each line orthogonal offset, the first-hit points
            // are the left ends of the union of the disks' chords.
            let perp = [-u[1], u[0]];
            let rays = 100_000;
            let mut lens = vec![0.0; z.len()];
            let span = 1.5;
            let dv = 2.0 * span / rays as f64;
            for k in 0..rays {
                let s = -span + (k as f64 + 0.5) * dv;
                let base = [0.5 + s * perp[0], 0.5 + s * perp[1]];
                let mut chords: Vec<(f64, f64, usize)> = Vec::new();
                for g in 0..z.len() {
                    let c = z.center(g);
                    let along = (c[0] - base[0]) * u[0] + (c[1] - base[1]) * u[1];
                    let off = (c[0] - base[0]) * perp[0] + (c[1] - base[1]) * perp[1];
                    let r = z.radius(g);
                    if off.abs() < r {
                        let half = (r * r - off * off).sqrt();
                        chords.push((along - half, along + half, g));
                    }
                }
                chords.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut reach = f64::NEG_INFINITY;
                for (a, b, g) in chords {
                    if a > reach {
                        let p = [base[0] + a * u[0], base[1] + a * u[1]];
                        if w.contains(&p) {
                            lens[g] += dv;
                        }
                    }
                    reach = reach.max(b);
                }
            }
            for (g, l) in lens.iter().enumerate() {
                let exact: f64 = est.atoms().iter().filter(|a| a.0 == z.radius(g)).map(|a| a.1).sum();
                assert!(
                    (exact - l / z.radius(g)).abs() < 2e-3 * (1.0 + exact),
                    "u={u:?} g={g}: {exact} vs {}",
                    l / z.radius(g)
                );
            }
        }
    }
}
