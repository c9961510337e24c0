//! Flags, config files and their merge.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Options shared by every subcommand. A value given on the command line
/// wins over the config file, which wins over the built-in default.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    /// TOML file whose keys are the long flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Germ intensity γ.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Radius law: uniform:a:b, exp:rate or det:r0.
    #[arg(long = "radius-dist")]
    pub radius_dist: Option<String>,

    /// Observation window x0:y0:x1:y1.
    #[arg(long)]
    pub window: Option<String>,

    /// ball, segment:+x, segment:-x, segment:+y or segment:-y.
    #[arg(long)]
    pub gauge: Option<String>,

    /// Width of the indicator weight 1{0 < t <= ε}/ε.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Lattice spacing h.
    #[arg(long = "grid-h")]
    pub grid_h: Option<f64>,

    /// Replications; replication k uses seed + k.
    #[arg(long)]
    pub reps: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// weighted, minus, uncorrected, hanisch, limit-spherical or limit-linear.
    #[arg(long)]
    pub method: Option<String>,

    /// Output CSV; metadata goes next to it with extension .meta.json.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Run replications one after another for bit-exact output.
    #[arg(long)]
    #[serde(default)]
    pub sequential: bool,

    /// Realization CSV read by `estimate` instead of simulating.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Radius set C: all, le:s or lo:hi intervals.
    #[arg(long)]
    pub set: Option<String>,

    /// Half side lengths n of W_n = [-n, n)² for empirical variances.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<f64>>,

    /// Low-discrepancy points per shift in the variance integrals.
    #[arg(long = "qmc-points")]
    pub qmc_points: Option<usize>,

    /// Random shifts in the variance integrals.
    #[arg(long = "qmc-shifts")]
    pub qmc_shifts: Option<usize>,

    /// Validation suites to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub suites: Option<Vec<String>>,

    /// Replications of the variance and normality suites of `validate`.
    #[arg(long = "campaign-reps")]
    pub campaign_reps: Option<usize>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Settings {
            config: $flags.config,
            sequential: $flags.sequential || $file.sequential,
            $($field: $flags.$field.or($file.$field),)*
        }
    };
}

impl Settings {
    /// Applies the config file named by `--config` under the flags.
    pub fn resolve(self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => Self::read(path)?,
            None => Settings::default(),
        };
        let flags = self;
        Ok(
            overlay!(flags, file; gamma, radius_dist, window, gauge, epsilon, grid_h, reps, seed, method, out,
            input, set, n, qmc_points, qmc_shifts, suites, campaign_reps),
        )
    }

    fn read(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn parsed<T>(&self, value: &Option<String>, default: &str) -> Result<T, CliError>
    where
        T: FromStr<Err = boolean_spheres::Error>,
    {
        value.as_deref().unwrap_or(default).parse().map_err(CliError::from)
    }

    pub fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}
