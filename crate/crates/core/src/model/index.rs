//! Uniform cell grid over germ centers with shell-ordered nearest search.

/// Germ centers bucketed by cell (CSR layout). Supports dimensions 2 and 3.
#[derive(Debug, Clone)]
pub(crate) struct GridIndex {
    dim: usize,
    origin: [f64; 3],
    cell: f64,
    shape: [i64; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
}

const MAX_CELLS: f64 = 4.0e6;

impl GridIndex {
    /// Builds the grid over the box `[lower, upper]`, which must contain all centers.
    pub(crate) fn build(dim: usize, centers: &[f64], lower: &[f64], upper: &[f64], cell: f64) -> Self {
        assert!((2..=3).contains(&dim));
        let mut cell = cell;
        let extent: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
        let cells_for = |c: f64| extent.iter().map(|e| (e / c).ceil().max(1.0)).product::<f64>();
        while cells_for(cell) > MAX_CELLS {
            cell *= 1.5;
        }
        let mut origin = [0.0; 3];
        let mut shape = [1i64; 3];
        for i in 0..dim {
            origin[i] = lower[i];
            shape[i] = (extent[i] / cell).ceil().max(1.0) as i64;
        }
        let ncells = (shape[0] * shape[1] * shape[2]) as usize;
        let n = centers.len() / dim;
        let mut counts = vec![0u32; ncells + 1];
        let mut keys = Vec::with_capacity(n);
        for g in 0..n {
            let c = &centers[g * dim..(g + 1) * dim];
            let mut key = 0i64;
            for i in 0..dim {
                let k = (((c[i] - origin[i]) / cell).floor() as i64).clamp(0, shape[i] - 1);
                key = key * shape[i] + k;
            }
            keys.push(key as usize);
            counts[key as usize + 1] += 1;
        }
        for k in 0..ncells {
            counts[k + 1] += counts[k];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; n];
        for (g, &key) in keys.iter().enumerate() {
            items[fill[key] as usize] = g as u32;
            fill[key] += 1;
        }
        Self {
            dim,
            origin,
            cell,
            shape,
            starts,
            items,
        }
    }

    /// Visits cells in shells of increasing Chebyshev radius around `x` and
    /// returns the minimal `dist(g)` over germs with `dist(g) <= limit`,
    /// ties broken by the smaller germ id.
    ///
    /// `dist(g) >= |x - c_g| - max_radius` must hold for every germ; cells and
    /// shells whose Euclidean lower bound exceeds the current best are skipped.
    pub(crate) fn nearest<F: FnMut(usize) -> f64>(
        &self,
        x: &[f64],
        limit: f64,
        max_radius: f64,
        mut dist: F,
    ) -> Option<(f64, usize)> {
        let d = self.dim;
        let mut home = [0i64; 3];
        let mut kmax = 0i64;
        for i in 0..d {
            home[i] = ((x[i] - self.origin[i]) / self.cell).floor() as i64;
            kmax = kmax.max(home[i].abs()).max((self.shape[i] - 1 - home[i]).abs());
        }
        let mut best = f64::INFINITY;
        let mut best_id = usize::MAX;
        let mut k = 0i64;
        loop {
            let bound = best.min(limit);
            if k > kmax || ((k - 1) as f64) * self.cell - max_radius > bound {
                break;
            }
            let zr = if d == 3 { k } else { 0 };
            for a in -k..=k {
                let ia = home[0] + a;
                if ia < 0 || ia >= self.shape[0] {
                    continue;
                }
                for b in -k..=k {
                    let ib = home[1] + b;
                    if ib < 0 || ib >= self.shape[1] {
                        continue;
                    }
                    for c in -zr..=zr {
                        if a.abs().max(b.abs()).max(c.abs()) != k {
                            continue;
                        }
                        let ic = home[2] + c;
                        if ic < 0 || ic >= self.shape[2] {
                            continue;
                        }
                        let key = ((ia * self.shape[1] + ib) * self.shape[2] + ic) as usize;
                        let (s, e) = (self.starts[key] as usize, self.starts[key + 1] as usize);
                        if s == e {
                            continue;
                        }
                        let gap = self.box_distance(x, [ia, ib, ic]);
                        if gap - max_radius > best.min(limit) {
                            continue;
                        }
                        for &g in &self.items[s..e] {
                            let g = g as usize;
                            let v = dist(g);
                            if v <= limit && v < f64::INFINITY && (v < best || (v == best && g < best_id)) {
                                best = v;
                                best_id = g;
                            }
                        }
                    }
                }
            }
            k += 1;
        }
        (best_id != usize::MAX).then_some((best, best_id))
    }

    /// Like [`GridIndex::nearest`] for a ray `x + t u`, `t >= 0`: visits the
    /// cells near successive ray pieces of one cell length. `dist(g)` must be
    /// the ray parameter of the first hit, so a germ hit at `t` has its
    /// center within `max_radius` of `x + t u`.
    pub(crate) fn nearest_along_ray<F: FnMut(usize) -> f64>(
        &self,
        x: &[f64],
        u: &[f64],
        limit: f64,
        max_radius: f64,
        mut dist: F,
    ) -> Option<(f64, usize)> {
        let d = self.dim;
        let step = self.cell;
        let mut best = f64::INFINITY;
        let mut best_id = usize::MAX;
        let mut j = 0u64;
        loop {
            let t0 = j as f64 * step;
            if t0 > best.min(limit) {
                break;
            }
            let t1 = t0 + step;
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            let mut empty = false;
            let mut gone = false;
            for i in 0..d {
                let (a, b) = (x[i] + t0 * u[i], x[i] + t1 * u[i]);
                let (mn, mx) = (a.min(b) - max_radius, a.max(b) + max_radius);
                let ilo = ((mn - self.origin[i]) / self.cell).floor() as i64;
                let ihi = ((mx - self.origin[i]) / self.cell).floor() as i64;
                if ihi < 0 && u[i] <= 0.0 || ilo >= self.shape[i] && u[i] >= 0.0 {
                    gone = true;
                }
                lo[i] = ilo.max(0);
                hi[i] = ihi.min(self.shape[i] - 1);
                if lo[i] > hi[i] {
                    empty = true;
                }
            }
            if gone {
                break;
            }
            if !empty {
                for a in lo[0]..=hi[0] {
                    for b in lo[1]..=hi[1] {
                        for c in lo[2]..=hi[2] {
                            let key = ((a * self.shape[1] + b) * self.shape[2] + c) as usize;
                            for &g in &self.items[self.starts[key] as usize..self.starts[key + 1] as usize] {
                                let g = g as usize;
                                let v = dist(g);
                                if v <= limit && v < f64::INFINITY && (v < best || (v == best && g < best_id)) {
                                    best = v;
                                    best_id = g;
                                }
                            }
                        }
                    }
                }
            }
            j += 1;
        }
        (best_id != usize::MAX).then_some((best, best_id))
    }

    /// Visits every germ whose center lies within `radius` of `x` (superset).
    pub(crate) fn for_each_near<F: FnMut(usize)>(&self, x: &[f64], radius: f64, mut visit: F) {
        let d = self.dim;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for i in 0..d {
            lo[i] = (((x[i] - radius - self.origin[i]) / self.cell).floor() as i64).max(0);
            hi[i] = (((x[i] + radius - self.origin[i]) / self.cell).floor() as i64).min(self.shape[i] - 1);
            if lo[i] > hi[i] {
                return;
            }
        }
        for a in lo[0]..=hi[0] {
            for b in lo[1]..=hi[1] {
                for c in lo[2]..=hi[2] {
                    let key = ((a * self.shape[1] + b) * self.shape[2] + c) as usize;
                    for &g in &self.items[self.starts[key] as usize..self.starts[key + 1] as usize] {
                        visit(g as usize);
                    }
                }
            }
        }
    }

    fn box_distance(&self, x: &[f64], cell: [i64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            let lo = self.origin[i] + cell[i] as f64 * self.cell;
            let hi = lo + self.cell;
            let g = if x[i] < lo {
                lo - x[i]
            } else if x[i] > hi {
                x[i] - hi
            } else {
                0.0
            };
            s += g * g;
        }
        s.sqrt()
    }
}
