//! Replicated comparison of estimators by their distance to the true radius
//! law, on a unit window with a fixed lattice.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{cvm_distance, ks_distance};
use crate::emptyspace::WeightFunction;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_limit_linear_combined, estimate_limit_spherical, ContactField, PointFilter, WeightedRadiusMeasure,
    DEFAULT_GRID_H,
};
use crate::geometry::GaugeBody;
use crate::model::{ModelParams, RadiusDistribution, Realization, Window};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// One estimator row of a comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case")]
pub enum TableRow {
    /// `η_W` with `f = 1{t <= ε}/ε`.
    Weighted {
        eps: f64,
    },
    /// Visible-arc limit.
    Limit,
    /// Minus sampling on `W ⊖ εB`.
    Minus {
        eps: f64,
    },
    /// Contacts with `Z ∩ W`.
    Uncorrected {
        eps: f64,
    },
    Hanisch {
        eps: f64,
    },
}

impl TableRow {
    /// The twelve rows of the reference tables, in order.
    pub fn standard() -> Vec<TableRow> {
        use TableRow::*;
        vec![
            Weighted { eps: 1.0 },
            Weighted { eps: 0.05 },
            Weighted { eps: 0.01 },
            Limit,
            Minus { eps: 0.05 },
            Minus { eps: 0.01 },
            Uncorrected { eps: 1.0 },
            Uncorrected { eps: 0.05 },
            Uncorrected { eps: 0.01 },
            Hanisch { eps: 1.0 },
            Hanisch { eps: 0.05 },
            Hanisch { eps: 0.01 },
        ]
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            TableRow::Weighted { eps }
            | TableRow::Minus { eps }
            | TableRow::Uncorrected { eps }
            | TableRow::Hanisch { eps } => Some(eps),
            TableRow::Limit => None,
        }
    }
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TableRow::Weighted { eps } => write!(f, "weighted eps={eps}"),
            TableRow::Limit => write!(f, "limit"),
            TableRow::Minus { eps } => write!(f, "minus eps={eps}"),
            TableRow::Uncorrected { eps } => write!(f, "uncorrected eps={eps}"),
            TableRow::Hanisch { eps } => write!(f, "hanisch eps={eps}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub intensity: f64,
    pub radius: RadiusDistribution,
    pub window: Window,
    pub grid_h: f64,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<TableRow>,
    /// Run replications one after another.
    #[serde(default)]
    pub sequential: bool,
}

impl ExperimentConfig {
    /// Uniform(0.05, 0.1) radii on the unit square with the standard rows.
    pub fn reference(intensity: f64) -> Self {
        Self {
            intensity,
            radius: RadiusDistribution::Uniform { a: 0.05, b: 0.1 },
            window: Window::unit(2),
            grid_h: DEFAULT_GRID_H,
            replications: 100,
            seed: 1,
            rows: TableRow::standard(),
            sequential: false,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::planar(self.intensity, self.radius)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.window.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.window.dim()));
        }
        if !(self.grid_h > 0.0 && self.grid_h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {}",
                self.grid_h
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("at least one replication is needed".into()));
        }
        if self.rows.is_empty() {
            return Err(Error::InvalidParameter("no estimator rows configured".into()));
        }
        for row in &self.rows {
            if let Some(eps) = row.eps() {
                WeightFunction::indicator(eps)?;
            }
        }
        Ok(())
    }

    fn reach(&self) -> f64 {
        self.rows.iter().filter_map(TableRow::eps).fold(0.0, f64::max)
    }
}

/// Distances of one estimate: `[spherical KS, linear KS, spherical CvM, linear CvM]`,
/// with Cramér–von Mises scaled by 1000.
pub type Distances = [f64; 4];

/// Column labels matching [`Distances`].
pub const COLUMNS: [&str; 4] = ["spherical_ks", "linear_ks", "spherical_cvm1000", "linear_cvm1000"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub row: TableRow,
    pub label: String,
    pub cells: [Cell; 4],
    /// Per-replication distances, in replication order.
    pub values: Vec<Distances>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub config: ExperimentConfig,
    pub rows: Vec<RowResult>,
    /// Seeds of replications that failed and were left out.
    pub failed_seeds: Vec<u64>,
}

fn distances(sph: &WeightedRadiusMeasure, lin: &WeightedRadiusMeasure, law: &RadiusDistribution) -> Distances {
    [
        ks_distance(sph, law),
        ks_distance(lin, law),
        1000.0 * cvm_distance(sph, law),
        1000.0 * cvm_distance(lin, law),
    ]
}

/// Contact fields shared by all rows of one replication.
struct Fields {
    ball: Option<ContactField>,
    ball_clipped: Option<ContactField>,
    segments: Vec<ContactField>,
    segments_clipped: Vec<ContactField>,
}

/// Distances of every configured row for the realization with the given seed.
pub fn run_replication(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Distances>> {
    let params = cfg.params()?;
    let w = &cfg.window;
    let reach = cfg.reach();
    let z = Realization::sample(&params, w, reach, seed)?;
    let ball = GaugeBody::unit_ball(2)?;
    let segments = GaugeBody::planar_axis_segments();
    let needs_full = cfg.rows.iter().any(|r| {
        matches!(
            r,
            TableRow::Weighted { .. } | TableRow::Minus { .. } | TableRow::Hanisch { .. }
        )
    });
    let needs_clipped = cfg.rows.iter().any(|r| matches!(r, TableRow::Uncorrected { .. }));
    let h = cfg.grid_h;
    let fields = Fields {
        ball: needs_full
            .then(|| ContactField::compute(&z, w, &ball, h, reach))
            .transpose()?,
        ball_clipped: needs_clipped
            .then(|| ContactField::compute_clipped(&z, w, &ball, h, reach))
            .transpose()?,
        segments: if needs_full {
            segments
                .iter()
                .map(|g| ContactField::compute(&z, w, g, h, reach))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        },
        segments_clipped: if needs_clipped {
            segments
                .iter()
                .map(|g| ContactField::compute_clipped(&z, w, g, h, reach))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        },
    };
    let law = params.radius;
    cfg.rows
        .iter()
        .map(|row| {
            let (sph, lin) = match *row {
                TableRow::Limit => (estimate_limit_spherical(&z, w)?, estimate_limit_linear_combined(&z, w)?),
                TableRow::Weighted { eps } | TableRow::Hanisch { eps } => {
                    let f = WeightFunction::indicator(eps)?;
                    let filter = if matches!(row, TableRow::Hanisch { .. }) {
                        PointFilter::Hanisch
                    } else {
                        PointFilter::All
                    };
                    let sph = fields.ball.as_ref().expect("full field").measure(&z, &f, &filter);
                    let parts: Vec<_> = fields.segments.iter().map(|fd| fd.measure(&z, &f, &filter)).collect();
                    (sph, WeightedRadiusMeasure::average_normalized(&parts))
                }
                TableRow::Minus { eps } => {
                    let f = WeightFunction::indicator(eps)?;
                    let inside = |g: &GaugeBody| w.erode(eps, g).map(PointFilter::Inside);
                    let sph = fields
                        .ball
                        .as_ref()
                        .expect("full field")
                        .measure(&z, &f, &inside(&ball)?);
                    let parts = fields
                        .segments
                        .iter()
                        .zip(&segments)
                        .map(|(fd, g)| Ok(fd.measure(&z, &f, &inside(g)?)))
                        .collect::<Result<Vec<_>>>()?;
                    (sph, WeightedRadiusMeasure::average_normalized(&parts))
                }
                TableRow::Uncorrected { eps } => {
                    let f = WeightFunction::indicator(eps)?;
                    let sph = fields
                        .ball_clipped
                        .as_ref()
                        .expect("clipped field")
                        .measure(&z, &f, &PointFilter::All);
                    let parts: Vec<_> = fields
                        .segments_clipped
                        .iter()
                        .map(|fd| fd.measure(&z, &f, &PointFilter::All))
                        .collect();
                    (sph, WeightedRadiusMeasure::average_normalized(&parts))
                }
            };
            Ok(distances(&sph, &lin, &law))
        })
        .collect()
}

fn summarize(values: &[f64]) -> Cell {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        f64::NAN
    };
    Cell { mean, std_error }
}

/// Runs all replications (replication `k` uses seed `seed + k`) and
/// averages the distances per row. Fails if more than 1% of the
/// replications fail.
pub fn run_table_experiment(cfg: &ExperimentConfig) -> Result<TableResult> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.replications as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let run = |&s: &u64| (s, run_replication(cfg, s));
    let outcomes: Vec<(u64, Result<Vec<Distances>>)> = if cfg.sequential {
        seeds.iter().map(run).collect()
    } else {
        seeds.par_iter().map(run).collect()
    };
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failed_seeds = Vec::new();
    let mut first_error = None;
    for (s, out) in outcomes {
        match out {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("replication with seed {s} failed: {e}");
                failed_seeds.push(s);
                first_error.get_or_insert(e);
            }
        }
    }
    if failed_seeds.len() as f64 > MAX_FAILURE_RATE * cfg.replications as f64 || ok.is_empty() {
        return Err(first_error.expect("at least one failure"));
    }
    let rows = cfg
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let values: Vec<Distances> = ok.iter().map(|rep| rep[i]).collect();
            let cells = [0, 1, 2, 3].map(|c| summarize(&values.iter().map(|v| v[c]).collect::<Vec<_>>()));
            RowResult {
                row: *row,
                label: row.to_string(),
                cells,
                values,
            }
        })
        .collect();
    Ok(TableResult {
        config: cfg.clone(),
        rows,
        failed_seeds,
    })
}

impl TableResult {
    /// Summary CSV: one line per row with means and standard errors.
    pub fn write_summary_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        write!(out, "estimator")?;
        for c in COLUMNS {
            write!(out, ",{c},{c}_se")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(out, "{}", r.label)?;
            for c in &r.cells {
                write!(out, ",{},{}", c.mean, c.std_error)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Per-replication CSV: `estimator,replication,<columns>`.
    pub fn write_replications_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "estimator,replication,{}", COLUMNS.join(","))?;
        for r in &self.rows {
            for (k, v) in r.values.iter().enumerate() {
                writeln!(out, "{},{k},{},{},{},{}", r.label, v[0], v[1], v[2], v[3])?;
            }
        }
        Ok(())
    }
}
