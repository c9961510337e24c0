//! `η_W` for the planar unit ball computed grain by grain.
//!
//! A point at distance `s` from `Z` whose nearest grain is `n` lies on the
//! circle of radius `R_n + s` around `ξ_n`, outside every grown disk
//! `B(ξ_m, R_m + s)`. In polar coordinates the factor `1 / h_B` cancels the
//! Jacobian, so `η_W(C) = Σ_n 1{R_n ∈ C} ∫ f(s) v_n(s) ds` where `v_n(s)` is
//! the fraction of that circle lying in `W` and outside the grown disks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::arcs::{box_gap, Removals};
use super::WeightedRadiusMeasure;
use crate::emptyspace::WeightFunction;
use crate::error::{Error, Result};
use crate::geometry::euclid;
use crate::model::{Realization, Window};
use crate::quadrature::GaussLegendre;

/// Composite Gauss–Legendre rule for the distance integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarConfig {
    /// Panels per smooth piece of the weight.
    pub panels: usize,
    /// Nodes per panel.
    pub nodes: usize,
}

impl Default for PolarConfig {
    fn default() -> Self {
        Self { panels: 8, nodes: 6 }
    }
}

/// Exact-geometry `η_W` for the planar ball gauge; the only discretization
/// is the quadrature in the contact distance.
pub fn polar_eta(z: &Realization, w: &Window, f: &WeightFunction, cfg: &PolarConfig) -> Result<WeightedRadiusMeasure> {
    if z.dim() != 2 || w.dim() != 2 {
        return Err(Error::UnsupportedDimension(z.dim()));
    }
    f.validate()?;
    let end = f.support_end();
    if !end.is_finite() {
        return Err(Error::InvalidParameter(
            "polar η needs a weight with bounded support".into(),
        ));
    }
    if cfg.panels == 0 || cfg.nodes == 0 {
        return Err(Error::InvalidParameter("polar rule needs panels and nodes".into()));
    }
    if !z.exhaustive {
        let need = w.dilate(end + z.radius_bound);
        let sim = z.sim_window();
        let ok = (0..2).all(|i| sim.lower()[i] <= need.lower()[i] + 1e-9 && sim.upper()[i] >= need.upper()[i] - 1e-9);
        if !ok {
            return Err(Error::InsufficientMargin {
                point: w.lower().to_vec(),
            });
        }
    }
    let rule = GaussLegendre::new(cfg.nodes);
    let mut cuts = vec![0.0];
    cuts.extend(f.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end));
    cuts.push(end);
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for piece in cuts.windows(2) {
        let width = (piece[1] - piece[0]) / cfg.panels as f64;
        for k in 0..cfg.panels {
            let a = piece[0] + k as f64 * width;
            for (s, wt) in rule.mapped(a, a + width) {
                let fv = f.eval(s);
                if fv > 0.0 {
                    nodes.push((s, wt * fv));
                }
            }
        }
    }
    let (lo, hi) = (w.lower(), w.upper());
    let mut atoms = Vec::new();
    let mut near: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..z.len() {
        let c = z.center(i);
        let r = z.radius(i);
        if box_gap(c, lo, hi) >= r + end {
            continue;
        }
        near.clear();
        z.index.for_each_near(c, r + 2.0 * end + z.max_radius, |j| {
            if j != i {
                let d = euclid(c, z.center(j));
                let cj = z.center(j);
                near.push((d, z.radius(j), (cj[1] - c[1]).atan2(cj[0] - c[0])));
            }
        });
        let mut total = 0.0;
        for &(s, weight) in &nodes {
            let big = r + s;
            let mut rm = Removals::new();
            rm.cut_beyond(PI, (c[0] - lo[0]) / big);
            rm.cut_beyond(0.0, (hi[0] - c[0]) / big);
            rm.cut_beyond(-FRAC_PI_2, (c[1] - lo[1]) / big);
            rm.cut_beyond(FRAC_PI_2, (hi[1] - c[1]) / big);
            for &(d, rj, angle) in &near {
                if rm.full {
                    break;
                }
                let other = rj + s;
                if d >= big + other || d + other <= big {
                    continue;
                }
                if d + big <= other {
                    rm.full = true;
                    break;
                }
                let cos = ((d * d + big * big - other * other) / (2.0 * d * big)).clamp(-1.0, 1.0);
                rm.push(angle, cos.acos());
            }
            let vis: f64 = rm.visible().iter().map(|(a, b)| b - a).sum::<f64>() / TAU;
            total += weight * vis;
        }
        if total > 0.0 {
            atoms.push((r, total));
        }
    }
    WeightedRadiusMeasure::new(atoms)
}
